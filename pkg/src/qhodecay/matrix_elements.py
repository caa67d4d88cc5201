"""Oscillatory Hermite matrix elements ``I(k, mu, m, n) = int <x>^mu e^{ikx} h_m h_n dx``.

The integrand is evaluated by the Hermite recurrence, so it is smooth through
the turning points and no asymptotic form enters the quadrature.  By parity
the integral reduces to the half line:

    I = 2 Re H   (m + n even),     I = 2i Im H   (m + n odd),
    H = int_0^inf <x>^mu e^{ikx} h_m h_n dx.

``H`` is accumulated over Gauss-Legendre panels no longer than a quarter of
the local wavelength ``2 pi / omega(x)``.
"""

from dataclasses import dataclass, field
from functools import lru_cache
import math

import numpy as np
from scipy import special, stats

from .hermite import _check_order, hermite_rows, hermite_rows_scaled
from .oscillatory import case_classify

NODES_PER_PANEL = 8
TAIL_EXPONENT = 45.0
MIN_TAIL = 6.0
ABS_TOL = 1e-12
REL_RHS_TOL = 1e-10

_GL_T, _GL_W = np.polynomial.legendre.leggauss(NODES_PER_PANEL)
# Legendre coefficients from node values: c_j = (2j+1)/2 sum_i w_i P_j(t_i) f_i
_LEG_V = np.polynomial.legendre.legvander(_GL_T, NODES_PER_PANEL - 1)
_TO_COEF = (_LEG_V * _GL_W[:, None]).T * ((2 * np.arange(NODES_PER_PANEL) + 1) / 2.0)[:, None]


class PrecisionLossError(ArithmeticError):
    """Quadrature error estimate exceeds the requested tolerance."""


def _check_mu(mu):
    if not 0.0 <= mu < 1.0 / 3.0:
        raise ValueError(f"mu must lie in [0, 1/3), got {mu}")


def _japanese(x, mu):
    return (1.0 + x * x) ** (0.5 * mu) if mu else np.ones_like(x)


def cutoff(n):
    """``X_n + D`` with ``(2 sqrt2 / 3) sqrt(X_n) D^{3/2} = 45``, ``D >= 6``."""
    X = math.sqrt(2.0 * n - 1.0)
    d = (TAIL_EXPONENT / (2.0 * math.sqrt(2.0) / 3.0 * math.sqrt(X))) ** (2.0 / 3.0)
    return X + max(d, MIN_TAIL)


def panel_edges(lam_lo, lam_hi, kabs, a, b):
    """Panels on ``[a, b]`` with length ``(pi/2) / omega(x)`` at their left end.

    ``omega = sqrt|lam_lo - x^2| + sqrt|lam_hi - x^2| + |k|``; the absolute
    values keep the tail decay rate resolved, and ``omega`` is floored at the
    Airy scale ``2 (2 X_hi)^{1/3}`` near the turning points.
    """
    floor = 2.0 * (2.0 * math.sqrt(lam_hi)) ** (1.0 / 3.0)
    edges = [a]
    x = a
    while x < b:
        om = math.sqrt(abs(lam_lo - x * x)) + math.sqrt(abs(lam_hi - x * x)) + kabs
        x = x + 0.5 * math.pi / max(om, floor)
        edges.append(min(x, b))
    return np.asarray(edges)


@dataclass
class Grid:
    """Gauss-Legendre nodes, shape (panels, NODES_PER_PANEL)."""

    x: np.ndarray
    w: np.ndarray

    @property
    def panels(self):
        return self.x.shape[0]


def make_grid(edges):
    a, b = edges[:-1, None], edges[1:, None]
    half = 0.5 * (b - a)
    return Grid(x=half * _GL_T + 0.5 * (a + b), w=half * _GL_W)


def _panel_sum(grid, vals):
    """Compensated sum and an error estimate for ``sum w * vals``."""
    per = np.sum(grid.w * vals, axis=1)
    total = complex(math.fsum(per.real), math.fsum(per.imag))
    coef = np.abs(vals @ _TO_COEF.T)
    lead = np.maximum(coef[:, 4], coef[:, 5])
    tailc = coef[:, 6] + coef[:, 7]
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(lead > 0, np.minimum(1.0, np.sqrt(np.maximum(coef[:, 6], coef[:, 7]) / lead)), 1.0)
    length = grid.w.sum(axis=1)
    trunc = np.sum(length * tailc * r ** 9)
    rounding = np.finfo(float).eps * np.sum(np.abs(grid.w * vals))
    return total, float(trunc + rounding)


@dataclass(frozen=True)
class MatrixElement:
    k: float
    mu: float
    m: int
    n: int
    value: complex
    quad_error: float
    panels: int
    half_line: complex = 0j
    precision_ok: bool = True


@dataclass(frozen=True)
class DecayBound:
    k: float
    mu: float
    m: int
    n: int
    rhs: float
    alpha: float


def decay_bound(k, mu, m, n):
    """``(|k| v |k|^-1) (m n)^(-alpha)`` with ``alpha = 1/12 - mu/4``; the constant is omitted."""
    _check_mu(mu)
    if k == 0:
        raise ValueError("k must be nonzero")
    alpha = 1.0 / 12.0 - mu / 4.0
    rhs = max(abs(k), 1.0 / abs(k)) * (float(m) * float(n)) ** (-alpha)
    return DecayBound(k=k, mu=mu, m=m, n=n, rhs=rhs, alpha=alpha)


class PairIntegrator:
    """Reusable grid and ``h_m h_n`` product for one index pair.

    The grid resolves every ``|k| <= k_max`` so that many ``(k, mu)`` values can
    share one recurrence pass.
    """

    def __init__(self, m, n, k_max=0.0, a=0.0, b=None):
        _check_order(m)
        _check_order(n)
        self.m, self.n = int(m), int(n)
        lo, hi = sorted((self.m, self.n))
        self.a = a
        self.b = cutoff(hi) if b is None else b
        self.k_max = abs(k_max)
        edges = panel_edges(2.0 * lo - 1.0, 2.0 * hi - 1.0, self.k_max, a, self.b)
        self.grid = make_grid(edges)
        flat = self.grid.x.ravel()
        rows = hermite_rows(sorted({self.m, self.n}), flat)
        prod = rows[0] * rows[-1]
        self.prod = prod.reshape(self.grid.x.shape)

    def half_line(self, k, mu):
        """``int_a^b <x>^mu e^{ikx} h_m h_n dx`` and its error estimate."""
        if abs(k) > self.k_max * (1 + 1e-12):
            raise ValueError("k exceeds the resolved k_max of this grid")
        x = self.grid.x
        vals = _japanese(x, mu) * np.exp(1j * k * x) * self.prod
        return _panel_sum(self.grid, vals)

    def element(self, k, mu, tol=None, strict=False):
        _check_mu(mu)
        h, err = self.half_line(k, mu)
        if (self.m + self.n) % 2 == 0:
            value = complex(2.0 * h.real, 0.0)
        else:
            value = complex(0.0, 2.0 * h.imag)
        err = 2.0 * err
        if tol is None:
            tol = ABS_TOL if k == 0 else max(ABS_TOL, REL_RHS_TOL * decay_bound(k, mu, self.m, self.n).rhs)
        ok = err <= tol
        if strict and not ok:
            raise PrecisionLossError(f"quad_error {err:.3g} > {tol:.3g} for (k={k}, mu={mu}, m={self.m}, n={self.n})")
        return MatrixElement(k=k, mu=mu, m=self.m, n=self.n, value=value, quad_error=err,
                             panels=self.grid.panels, half_line=h, precision_ok=ok)


def osc_integral(k, mu, m, n, strict=True):
    """Matrix element ``I(k, mu, m, n)`` as a :class:`MatrixElement`.

    Raises :class:`PrecisionLossError` when the error estimate exceeds
    ``max(1e-12, 1e-10 * rhs)`` unless ``strict=False``, in which case the
    element carries ``precision_ok=False``.

    >>> round(osc_integral(2.0, 0.0, 1, 1).value.real, 6)
    0.367879
    """
    if k == 0:
        raise ValueError("k must be nonzero; use gram_integral for k = 0")
    _check_mu(mu)
    return PairIntegrator(m, n, k_max=abs(k)).element(k, mu, strict=strict)


def gram_integral(m, n):
    """``int h_m h_n dx`` through the same engine (``k = 0``, ``mu = 0``)."""
    return PairIntegrator(m, n).element(0.0, 0.0, strict=True).value.real


def element_table(k, mu, N):
    """All ``I(k, mu, i, j)`` for ``1 <= i, j <= N`` from one shared grid.

    Same panel rule as :func:`osc_integral` with the grid sized for ``h_N``.
    """
    _check_mu(mu)
    _check_order(N)
    edges = panel_edges(1.0, 2.0 * N - 1.0, abs(k), 0.0, cutoff(N))
    grid = make_grid(edges)
    x = grid.x.ravel()
    H = hermite_rows(range(1, N + 1), x)
    wj = grid.w.ravel() * _japanese(x, mu)
    cos_t = (H * (wj * np.cos(k * x))) @ H.T
    sin_t = (H * (wj * np.sin(k * x))) @ H.T
    idx = np.arange(1, N + 1)
    even = ((idx[:, None] + idx[None, :]) % 2) == 0
    return np.where(even, 2.0 * cos_t + 0j, 2j * sin_t)


# -- closed-form oracle --------------------------------------------------------

def _laguerre_scaled(q, d, y):
    """``L_q^{(d)}(y) = mant * exp(log_scale)`` by forward recurrence in ``q``."""
    prev, cur, log_scale = 0.0, 1.0, 0.0
    for j in range(q):
        nxt = ((2 * j + 1 + d - y) * cur - (j + d) * prev) / (j + 1)
        prev, cur = cur, nxt
        if abs(cur) > 1e100:
            prev /= abs(cur)
            log_scale += math.log(abs(cur))
            cur /= abs(cur)
    return cur, log_scale


def oracle_mu0(k, m, n):
    """Closed form of ``I(k, 0, m, n)`` through associated Laguerre polynomials.

    For ``p = m - 1 >= q = n - 1``:
    ``sqrt(q!/p!) (i k / sqrt2)^(p-q) e^{-k^2/4} L_q^{(p-q)}(k^2/2)``;
    symmetric in ``(m, n)``.
    """
    _check_order(m)
    _check_order(n)
    if k == 0:
        raise ValueError("k must be nonzero")
    p, q = max(m, n) - 1, min(m, n) - 1
    d = p - q
    y = 0.5 * k * k
    mant, ls = _laguerre_scaled(q, d, y)
    if mant == 0.0:
        return 0j
    logmag = (0.5 * (special.gammaln(q + 1) - special.gammaln(p + 1))
              + d * math.log(abs(k) / math.sqrt(2.0)) - 0.25 * k * k
              + ls + math.log(abs(mant)))
    sign = math.copysign(1.0, mant) * (math.copysign(1.0, k) ** d)
    return sign * (1j ** (d % 4)) * math.exp(logmag)


def oracle_table(k, N):
    """``oracle_mu0(k, i, j)`` for all ``1 <= i, j <= N`` (vectorized over ``p - q``)."""
    _check_order(N)
    y = 0.5 * k * k
    d = np.arange(N, dtype=float)
    out = np.zeros((N, N), dtype=complex)
    prev = np.zeros(N)
    cur = np.ones(N)
    logs = np.zeros(N)
    lg = special.gammaln(np.arange(2 * N + 1) + 1.0)
    base = d * math.log(abs(k) / math.sqrt(2.0)) - 0.25 * k * k
    phase = (np.sign(k) ** d) * (1j ** (np.arange(N) % 4))
    for q in range(N):
        valid = np.arange(N) <= N - 1 - q
        p = q + np.arange(N)
        with np.errstate(divide="ignore"):
            lm = (0.5 * (lg[q] - lg[p]) + base + logs + np.log(np.abs(cur)))
        vals = np.where(cur == 0.0, 0.0, np.sign(cur) * np.exp(lm)) * phase
        for dd in np.nonzero(valid)[0]:
            out[q + dd, q] = vals[dd]
            out[q, q + dd] = vals[dd]
        nxt = ((2 * q + 1 + d - y) * cur - (q + d) * prev) / (q + 1)
        prev, cur = cur, nxt
        big = np.abs(cur) > 1e100
        if big.any():
            s = np.where(big, np.abs(cur), 1.0)
            cur, prev, logs = cur / s, prev / s, logs + np.log(s)
    return out


# -- sweeps and fits -----------------------------------------------------------

SWEEP_COLUMNS = ("k", "mu", "m", "n", "re_I", "im_I", "abs_I", "rhs", "ratio",
                 "quad_error", "panels", "case_tag")


@dataclass
class SweepResult:
    rows: list
    sup_ratio: float
    sup_by_k_mu: dict = field(default_factory=dict)

    @property
    def failures(self):
        return [r for r in self.rows if not r["precision_ok"]]


def bound_ratio_sweep(ks, mus, pairs, max_index=4000):
    """``|I| / rhs`` for every ``(k, mu, (m, n))``; rows sorted by ratio, largest first.

    One recurrence pass per pair serves all ``(k, mu)``.  Rows keep a
    ``precision_ok`` flag instead of raising.
    """
    ks = [float(k) for k in ks]
    if any(k == 0 for k in ks):
        raise ValueError("k must be nonzero")
    for mu in mus:
        _check_mu(mu)
    kmax = max(abs(k) for k in ks)
    rows = []
    for m, n in pairs:
        if max(m, n) > max_index:
            raise ValueError(f"pair ({m}, {n}) exceeds the index budget {max_index}")
        integ = PairIntegrator(m, n, k_max=kmax)
        for k in ks:
            tag = case_classify(k, min(m, n), max(m, n))
            for mu in mus:
                el = integ.element(k, mu)
                rhs = decay_bound(k, mu, m, n).rhs
                a = abs(el.value)
                rows.append({"k": k, "mu": mu, "m": m, "n": n, "re_I": el.value.real,
                             "im_I": el.value.imag, "abs_I": a, "rhs": rhs,
                             "ratio": a / rhs, "quad_error": el.quad_error,
                             "panels": el.panels, "case_tag": tag,
                             "precision_ok": el.precision_ok})
    rows.sort(key=lambda r: -r["ratio"])
    sup = max((r["ratio"] for r in rows), default=0.0)
    by = {}
    for r in rows:
        key = (r["k"], r["mu"])
        by[key] = max(by.get(key, 0.0), r["ratio"])
    return SweepResult(rows=rows, sup_ratio=sup, sup_by_k_mu=by)


def running_sup(rows, key="m"):
    """``[(m, sup of ratio over rows with index <= m)]`` in increasing ``m``."""
    ordered = sorted(rows, key=lambda r: r[key])
    out, best = [], 0.0
    for r in ordered:
        best = max(best, r["ratio"])
        out.append((r[key], best))
    return out


@dataclass(frozen=True)
class ExponentFit:
    slope: float
    stderr: float
    intercept: float


def exponent_fit(samples, envelope=False):
    """Least-squares slope of ``log|I|`` against ``log m``.

    ``samples`` holds ``(m, abs_I)`` pairs or dicts with keys ``m`` and
    ``abs_I``; at least 8, with strictly increasing ``m``.  Diagonal elements
    oscillate in ``m`` (Laguerre-type nodes), so a raw fit depends on where
    the samples land; ``envelope=True`` fits the non-increasing envelope
    ``max_{m' >= m} |I(m')|`` instead.
    """
    pts = [(s["m"], s["abs_I"]) if isinstance(s, dict) else tuple(s) for s in samples]
    if len(pts) < 8:
        raise ValueError("need at least 8 samples")
    m = np.array([p[0] for p in pts], dtype=float)
    a = np.array([p[1] for p in pts], dtype=float)
    if np.any(np.diff(m) <= 0):
        raise ValueError("m must be strictly increasing")
    if np.any(a <= 0):
        raise ValueError("|I| must be positive")
    if envelope:
        a = np.maximum.accumulate(a[::-1])[::-1]
    if np.ptp(np.log(a)) == 0.0:
        raise ValueError("degenerate samples: |I| is constant")
    fit = stats.linregress(np.log(m), np.log(a))
    return ExponentFit(slope=float(fit.slope), stderr=float(fit.stderr),
                       intercept=float(fit.intercept))


# -- region decomposition ---------------------------------------------------

def region_intervals(m, n):
    """Named intervals covering ``[0, inf)`` for ``m <= n``, and the case label."""
    if m > n:
        raise ValueError("need m <= n")
    Xm, Xn = math.sqrt(2.0 * m - 1), math.sqrt(2.0 * n - 1)
    if Xn >= 2 * Xm:
        cuts = [0.0, Xm - Xm ** (-1 / 3), Xm, Xn, 2 * Xn]
        names = ["bulk", "turning", "gap", "beyond", "tail"]
        case = "wide"
    else:
        cuts = [0.0, Xm ** (2 / 3), Xm - Xm ** (1 / 3), Xn, 2 * Xn]
        names = ["core", "bulk", "turning", "beyond", "tail"]
        case = "close"
    if np.any(np.diff(cuts) <= 0):
        raise ValueError(f"indices (m={m}, n={n}) too small for ordered regions")
    return cuts, names, case


def region_decomposition(k, mu, m, n):
    """Partial half-line integrals over the region intervals.

    Each entry is ``{"interval", "value", "region", "case", "log_magnitude"}``;
    the values add up to the half-line integral of :func:`osc_integral`.
    ``log_magnitude`` bounds ``log|partial|`` from log-scaled Hermite values,
    which stays informative when the tail partial underflows.
    """
    if k == 0:
        raise ValueError("k must be nonzero")
    _check_mu(mu)
    cuts, names, case = region_intervals(m, n)
    tag = case_classify(k, m, n)
    end = max(cutoff(n), 2 * cuts[-1] - cuts[-2]) + MIN_TAIL
    bounds = list(zip(cuts, cuts[1:] + [end]))
    out = []
    for (a, b), name in zip(bounds, names):
        integ = PairIntegrator(m, n, k_max=abs(k), a=a, b=b)
        val, err = integ.half_line(k, mu)
        x = integ.grid.x.ravel()
        mant, logs = hermite_rows_scaled(sorted({m, n}), x)
        with np.errstate(divide="ignore"):
            lg = (np.log(np.abs(mant[0])) + logs[0] + np.log(np.abs(mant[-1])) + logs[-1]
                  + 0.5 * mu * np.log1p(x * x))
        logmag = float(np.max(lg) + math.log(b - a))
        out.append({"interval": (a, math.inf if name == "tail" else b), "value": val,
                    "region": name, "case": tag, "layout": case, "quad_error": err,
                    "log_magnitude": logmag})
    return out


# -- perturbations ---------------------------------------------------------------

def _series_value(series, theta):
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    total = 0.0
    for l, (c, s) in series.items():
        l = np.atleast_1d(np.asarray(l, dtype=float))
        ph = float(np.dot(l, theta))
        total += c * math.cos(ph) + s * math.sin(ph)
    return total


@dataclass(frozen=True)
class WSpec:
    """Finite Fourier perturbation ``<x>^mu sum_k (a_k(theta) sin kx + b_k(theta) cos kx)``.

    ``coeffs`` maps a mode key to ``(a_series, b_series)``; each series maps an
    integer tuple ``l`` to ``(c, s)`` meaning ``c cos(l.theta) + s sin(l.theta)``.
    A float key is used as ``k`` directly; an integer-tuple key ``j`` needs
    ``nu`` and gives ``k = <j, nu>``.
    """

    coeffs: dict
    nu: tuple = None

    def __post_init__(self):
        if not self.coeffs:
            raise ValueError("WSpec needs at least one mode")
        for key, pair in self.coeffs.items():
            if len(pair) != 2:
                raise ValueError("each mode needs (a_series, b_series)")
            if self.frequency(key) == 0.0:
                raise ValueError("k = 0 is excluded (W must be odd in its phase)")

    def frequency(self, key):
        if isinstance(key, tuple):
            if self.nu is None:
                raise ValueError("integer mode keys need nu")
            return float(np.dot(np.asarray(key, dtype=float), np.asarray(self.nu, dtype=float)))
        return float(key)

    @property
    def lambda_set(self):
        return tuple(self.frequency(k) for k in self.coeffs)

    def a(self, key, theta):
        return _series_value(self.coeffs[key][0], theta)

    def b(self, key, theta):
        return _series_value(self.coeffs[key][1], theta)

    def theta_dependent(self):
        return any(any(any(l) for l in ser) for pair in self.coeffs.values() for ser in pair)

    def fourier_coefficients(self):
        """``{(j, l): W_hat}`` of ``W(phi, theta)`` for integer-tuple keys.

        ``sin(<j,phi>)`` and ``cos(<j,phi>)`` split into ``e^{+-i<j,phi>}``
        halves, and likewise for the ``theta`` series.
        """
        out = {}

        def add(key, val):
            out[key] = out.get(key, 0j) + val

        for key, (aser, bser) in self.coeffs.items():
            j = tuple(int(v) for v in (key if isinstance(key, tuple) else (key,)))
            mj = tuple(-v for v in j)
            for ser, kind in ((aser, "sin"), (bser, "cos")):
                for l, (c, s) in ser.items():
                    l = tuple(int(v) for v in np.atleast_1d(l))
                    ml = tuple(-v for v in l)
                    # theta part: c cos + s sin = (c - i s)/2 e^{i l} + (c + i s)/2 e^{-i l}
                    if any(l):
                        tparts = [(l, (c - 1j * s) / 2), (ml, (c + 1j * s) / 2)]
                    else:
                        tparts = [(l, complex(c))]
                    # phi part: sin = (e^{ij} - e^{-ij}) / 2i, cos = (e^{ij} + e^{-ij}) / 2
                    if kind == "sin":
                        pparts = [(j, 1 / 2j), (mj, -1 / 2j)]
                    else:
                        pparts = [(j, 0.5), (mj, 0.5)]
                    for pj, pv in pparts:
                        for tl, tv in tparts:
                            add((pj, tl), pv * tv)
        return {k: v for k, v in out.items() if v != 0}


@dataclass(frozen=True)
class PerturbationMatrix:
    theta: tuple
    nu: tuple
    mu: float
    size: int
    entries: np.ndarray


@lru_cache(maxsize=64)
def _tables(k, mu, N):
    t = element_table(k, mu, N)
    c, s = t.real.copy(), t.imag.copy()
    c.setflags(write=False)
    s.setflags(write=False)
    return s, c


def sine_cosine_tables(k, mu, N):
    """``(S_k, C_k)``: ``int <x>^mu sin(kx) h_i h_j`` and the cosine analogue (cached)."""
    _check_mu(mu)
    return _tables(float(k), float(mu), int(N))


def perturbation_matrix(spec, theta, mu, N):
    """``P(theta) = sum_k a_k(theta) S_k + b_k(theta) C_k`` on ``h_1 .. h_N``."""
    _check_order(N)
    P = np.zeros((N, N))
    for key in spec.coeffs:
        k = spec.frequency(key)
        try:
            S, C = sine_cosine_tables(k, mu, N)
        except Exception as exc:
            raise RuntimeError(f"matrix assembly failed for k={k}, N={N}: {exc}") from exc
        a, b = spec.a(key, theta), spec.b(key, theta)
        if a:
            P += a * S
        if b:
            P += b * C
    P = 0.5 * (P + P.T)
    if not np.all(np.isfinite(P)):
        raise FloatingPointError("non-finite perturbation entries")
    return PerturbationMatrix(theta=tuple(np.atleast_1d(theta).tolist()), nu=spec.nu, mu=mu,
                              size=N, entries=P)


def malpha_norm(P, alpha, plus=False):
    """``sup_{a,b} (a b)^alpha |P_ab|`` with 1-based indices; ``plus`` adds ``(1 + |a - b|)``."""
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    A = P.entries if isinstance(P, PerturbationMatrix) else np.asarray(P)
    if A.size == 0:
        return 0.0
    a = np.arange(1, A.shape[0] + 1, dtype=float)[:, None]
    b = np.arange(1, A.shape[1] + 1, dtype=float)[None, :]
    w = (a * b) ** alpha
    if plus:
        w = w * (1.0 + np.abs(a - b))
    return float(np.max(w * np.abs(A)))
