"""L2-normalized Hermite functions and weighted sequence norms.

Index convention: ``h_n`` (n >= 1) is the eigenfunction of ``-d^2/dx^2 + x^2``
with eigenvalue ``2n - 1``, i.e. a degree ``n - 1`` polynomial times the
Gaussian.  Values are produced by the normalized three-term recurrence

    phi_j = x sqrt(2/j) phi_{j-1} - sqrt((j-1)/j) phi_{j-2},   h_n = phi_{n-1},

carried on log-scaled mantissas so that the Gaussian seed never underflows.
"""

from dataclasses import dataclass
import math

import numpy as np

_PI_QUARTER = math.pi ** -0.25
# rescale mantissas once they pass this magnitude
_RESCALE_AT = 1e150


@dataclass(frozen=True)
class SpectralIndex:
    """Eigenvalue ``lam = 2n - 1`` and turning point ``X = sqrt(lam)``."""

    n: int

    def __post_init__(self):
        _check_order(self.n)

    @property
    def lam(self):
        return 2.0 * self.n - 1.0

    @property
    def turning_point(self):
        return math.sqrt(self.lam)


@dataclass(frozen=True)
class HermiteSample:
    """``h_order(point) = mantissa * exp(log_scale)``."""

    order: int
    point: float
    mantissa: float
    log_scale: float

    @property
    def value(self):
        if self.mantissa == 0.0:
            return 0.0
        return math.copysign(math.exp(self.log_scale + math.log(abs(self.mantissa))),
                             self.mantissa)

    @property
    def log_abs(self):
        """log|h|, or -inf at a node."""
        if self.mantissa == 0.0:
            return -math.inf
        return self.log_scale + math.log(abs(self.mantissa))


def _check_order(n):
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise ValueError(f"Hermite order must be a positive integer, got {n!r}")


def eigenvalue(n):
    _check_order(n)
    return 2.0 * n - 1.0


def turning_point(n):
    _check_order(n)
    return math.sqrt(2.0 * n - 1.0)


def _check_every(xmax):
    # per-step growth of |phi| is at most |x| sqrt(2) + 1
    growth = math.log10(xmax * math.sqrt(2.0) + 2.0)
    return max(1, int(100.0 / growth))


def hermite_rows_scaled(orders, x):
    """Mantissas and log-scales of ``h_n(x)`` for every ``n`` in ``orders``.

    Parameters
    ----------
    orders : sequence of int
        Requested (1-based) orders, any order, duplicates allowed.
    x : array_like
        Evaluation points (1-D).

    Returns
    -------
    mant, logs : ndarray, shape (len(orders), len(x))
        ``h_n(x) = mant * exp(logs)`` row by row.
    """
    orders = [int(n) for n in orders]
    for n in orders:
        _check_order(n)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if not np.all(np.isfinite(x)):
        raise ValueError("Hermite evaluation points must be finite")
    nx = x.size
    mant = np.empty((len(orders), nx))
    logs = np.empty((len(orders), nx))
    if not orders:
        return mant, logs
    want = {}
    for row, n in enumerate(orders):
        want.setdefault(n, []).append(row)
    n_max = max(orders)
    every = _check_every(float(np.max(np.abs(x))) if nx else 0.0)

    log_scale = -0.5 * x * x
    prev = np.zeros(nx)
    cur = np.full(nx, _PI_QUARTER)
    for row in want.get(1, ()):
        mant[row] = cur
        logs[row] = log_scale
    for j in range(1, n_max):
        nxt = x * math.sqrt(2.0 / j) * cur - math.sqrt((j - 1.0) / j) * prev
        prev, cur = cur, nxt
        if j % every == 0:
            big = np.abs(cur) > _RESCALE_AT
            if big.any():
                # divide both carried terms so the recurrence stays linear
                scale = np.where(big, np.abs(cur), 1.0)
                cur = cur / scale
                prev = prev / scale
                log_scale = log_scale + np.log(scale)
        rows = want.get(j + 1)
        if rows:
            for row in rows:
                mant[row] = cur
                logs[row] = log_scale
    return mant, logs


def _combine(mant, logs):
    with np.errstate(divide="ignore", under="ignore", over="ignore"):
        out = np.sign(mant) * np.exp(logs + np.log(np.abs(mant)))
    return np.where(mant == 0.0, 0.0, out)


def hermite_rows(orders, x):
    """Values ``h_n(x)`` for each ``n`` in ``orders``; shape (len(orders), len(x)).

    Extreme tails underflow to zero; use :func:`hermite_rows_scaled` when the
    logarithm of a tiny value is needed.
    """
    return _combine(*hermite_rows_scaled(orders, x))


def hermite_table(n_max, x):
    """All of ``h_1 .. h_{n_max}`` at the points ``x``; shape (n_max, len(x))."""
    _check_order(n_max)
    return hermite_rows(range(1, n_max + 1), x)


def _sample(n, x, m, lg):
    # parity at the reconstruction level: evaluate at |x|, flip the mantissa
    if x < 0 and n % 2 == 0:
        m = -m
    return HermiteSample(order=n, point=float(x), mantissa=float(m), log_scale=float(lg))


def hermite_eval(n, x):
    """``h_n(x)`` as a log-scaled :class:`HermiteSample`.

    >>> round(hermite_eval(1, 0.0).value, 7)
    0.7511255
    """
    _check_order(n)
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"point must be finite, got {x!r}")
    mant, logs = hermite_rows_scaled([n], [abs(x)])
    return _sample(n, x, mant[0, 0], logs[0, 0])


def hermite_eval_batch(n_max, x):
    """``[h_1(x), ..., h_{n_max}(x)]`` from a single recurrence pass."""
    _check_order(n_max)
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"point must be finite, got {x!r}")
    mant, logs = hermite_rows_scaled(range(1, n_max + 1), [abs(x)])
    return [_sample(n, x, mant[n - 1, 0], logs[n - 1, 0]) for n in range(1, n_max + 1)]


def sobolev_norm(v, s):
    """``(sum_j j^s |v_j|^2)^(1/2)`` with 1-based ``j``."""
    if s < 0:
        raise ValueError("Sobolev exponent must be non-negative")
    v = np.asarray(v)
    j = np.arange(1, v.shape[-1] + 1, dtype=float)
    return np.sqrt(np.sum(j ** s * np.abs(v) ** 2, axis=-1))
