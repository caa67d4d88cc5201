"""Diophantine and second-Melnikov frequency conditions.

``|k|`` is the l1 norm throughout.  Every condition here is symmetric under
``k -> -k`` (with ``j -> -j``), so only lattice vectors whose first nonzero
entry is positive are enumerated.
"""

from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np


@dataclass(frozen=True)
class DiophantineParams:
    gamma: float
    tau: float
    d: int
    box: tuple = (1.0, 2.0)
    K: int = 200

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.tau <= self.d - 1:
            raise ValueError("tau must exceed d - 1")
        if not self.box[0] < self.box[1]:
            raise ValueError("box needs A < B")
        if self.K < 1:
            raise ValueError("K must be at least 1")

    @property
    def volume(self):
        return (self.box[1] - self.box[0]) ** self.d


@dataclass(frozen=True)
class MelnikovParams:
    kappa: float
    K: int
    omega_box: tuple = (1.0, 2.0)

    def __post_init__(self):
        # kappa = 0 is accepted as the degenerate case
        if not 0 <= self.kappa < 0.25:
            raise ValueError("kappa must lie in [0, 1/4)")
        if self.K < 1:
            raise ValueError("K must be at least 1")


@lru_cache(maxsize=16)
def _lattice(d, K):
    if d == 1:
        return np.arange(-K, K + 1, dtype=np.int64)[:, None]
    parts = []
    for k1 in range(-K, K + 1):
        rest = _lattice(d - 1, K - abs(k1))
        parts.append(np.hstack([np.full((rest.shape[0], 1), k1, dtype=np.int64), rest]))
    return np.vstack(parts)


def half_lattice(d, K):
    """Integer vectors with ``0 < |k|_1 <= K`` and first nonzero entry positive."""
    pts = _lattice(d, K)
    nz = pts != 0
    first = np.argmax(nz, axis=1)
    lead = pts[np.arange(pts.shape[0]), first]
    keep = nz.any(axis=1) & (lead > 0)
    out = pts[keep]
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class DiophantineVerdict:
    verdict: bool
    worst_k: tuple
    margin: float


def is_diophantine(nu, p):
    """Check ``|<k, nu>| |k|^tau >= gamma`` for ``0 < |k|_1 <= K``.

    ``margin`` is ``|<k, nu>| |k|^tau - gamma`` at the minimizing ``k``.
    """
    nu = np.atleast_1d(np.asarray(nu, dtype=float))
    if nu.size != p.d:
        raise ValueError(f"nu has dimension {nu.size}, expected {p.d}")
    ks = half_lattice(p.d, p.K)
    w = np.abs(ks @ nu) * np.abs(ks).sum(axis=1) ** p.tau
    i = int(np.argmin(w))
    margin = float(w[i] - p.gamma)
    return DiophantineVerdict(verdict=margin >= 0, worst_k=tuple(int(v) for v in ks[i]),
                              margin=margin)


def min_weighted_divisor(nus, tau, K):
    """``min_k |<k, nu>| |k|^tau`` for each row of ``nus``.

    A sample is excluded at level ``gamma`` exactly when this is below
    ``gamma``, so one pass serves every ``gamma``.
    """
    nus = np.atleast_2d(np.asarray(nus, dtype=float))
    ks = half_lattice(nus.shape[1], K)
    weight = np.abs(ks).sum(axis=1).astype(float) ** tau
    out = np.empty(nus.shape[0])
    step = max(1, 2_000_000 // max(1, ks.shape[0]))
    for s in range(0, nus.shape[0], step):
        block = np.abs(nus[s:s + step] @ ks.T.astype(float)) * weight
        out[s:s + step] = block.min(axis=1)
    return out


@dataclass(frozen=True)
class MeasureEstimate:
    estimate: float
    stderr: float
    samples: int


def _samples(d, box, samples, seed, batch=10_000):
    chunks = []
    for b, start in enumerate(range(0, samples, batch)):
        rng = np.random.default_rng([seed, b])
        chunks.append(rng.uniform(box[0], box[1], size=(min(batch, samples - start), d)))
    return np.vstack(chunks)


def _estimate(excluded, n, volume):
    f = excluded / n
    return MeasureEstimate(estimate=f * volume, stderr=math.sqrt(f * (1 - f) / n) * volume,
                           samples=n)


def excluded_measure(p, samples=100_000, seed=0):
    """Monte Carlo measure of ``{nu in [A,B]^d : not Diophantine up to K}``.

    Samples are drawn in fixed batches seeded by ``(seed, batch)``.
    """
    if samples < 10_000:
        raise ValueError("use at least 10^4 samples")
    nus = _samples(p.d, p.box, samples, seed)
    w = min_weighted_divisor(nus, p.tau, p.K)
    return _estimate(int(np.count_nonzero(w < p.gamma)), samples, p.volume)


MEASURE_COLUMNS = ("gamma", "tau", "d", "K", "samples", "estimate", "stderr")


def measure_scan(gammas, tau, d, K, box=(1.0, 2.0), samples=100_000, seed=0):
    """Excluded measure for several ``gamma`` on one shared sample set (CSV rows)."""
    if samples < 10_000:
        raise ValueError("use at least 10^4 samples")
    for g in gammas:
        DiophantineParams(gamma=g, tau=tau, d=d, box=tuple(box), K=K)
    nus = _samples(d, box, samples, seed)
    w = min_weighted_divisor(nus, tau, K)
    vol = (box[1] - box[0]) ** d
    rows = []
    for g in gammas:
        est = _estimate(int(np.count_nonzero(w < g)), samples, vol)
        rows.append({"gamma": g, "tau": tau, "d": d, "K": K, "samples": samples,
                     "estimate": est.estimate, "stderr": est.stderr})
    return rows


def loglog_slope(xs, ys):
    """Least-squares slope of ``log y`` against ``log x``."""
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


def excluded_measure_1d(p):
    """Exact excluded length for ``d = 1``: the bands ``|nu| < gamma / k^(tau+1)`` nest in ``k = 1``."""
    if p.d != 1:
        raise ValueError("exact measure is only available for d = 1")
    lo, hi = max(p.box[0], -p.gamma), min(p.box[1], p.gamma)
    return max(0.0, hi - lo)


@dataclass(frozen=True)
class MelnikovVerdict:
    verdict: bool
    worst_k: tuple
    worst_j: int
    margin: float


def melnikov_margin(omega, k, j, kappa):
    """``|<k, omega> + j| - kappa (1 + |j|)`` at a single ``(k, j)``."""
    dot = float(np.dot(np.atleast_1d(np.asarray(k, dtype=float)),
                       np.atleast_1d(np.asarray(omega, dtype=float))))
    return abs(dot + j) - kappa * (1 + abs(j))


def melnikov_check(omega, mp, j_range=None):
    """Check ``|<k, omega> + j| >= kappa (1 + |j|)`` for ``0 < |k|_1 <= K``, ``|j| <= j_range``.

    ``j_range`` defaults to ``ceil(K max|omega|) + 1``; larger ``|j|`` pass
    automatically because the left side grows with slope 1 against ``kappa < 1/4``.
    """
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    need = mp.K * float(np.max(np.abs(omega))) + 1
    if j_range is None:
        j_range = int(math.ceil(need))
    elif j_range < need:
        raise ValueError(f"j_range must be at least K max|omega| + 1 = {need:g}")
    ks = half_lattice(omega.size, mp.K)
    dots = ks @ omega
    js = np.arange(-j_range, j_range + 1)
    best = (math.inf, None, None)
    step = max(1, 2_000_000 // js.size)
    for s in range(0, dots.size, step):
        marg = np.abs(dots[s:s + step, None] + js[None, :]) - mp.kappa * (1 + np.abs(js))[None, :]
        i, j = np.unravel_index(np.argmin(marg), marg.shape)
        if marg[i, j] < best[0]:
            best = (float(marg[i, j]), s + i, int(js[j]))
    margin, i, j = best
    return MelnikovVerdict(verdict=margin >= 0, worst_k=tuple(int(v) for v in ks[i]),
                           worst_j=j, margin=margin)


@dataclass(frozen=True)
class A1Result:
    holds: bool
    worst_upper: float
    worst_lower: float
    worst_gap: float


def check_a1(lam, c0=1.0, c1=2.0, c2=1.0, a_max=10_000, chunk=500):
    """``c1 a >= lam(a) >= c2 a`` and ``|lam(a) - lam(b)| >= c0 |a - b|`` for ``a <= b <= a_max``.

    ``lam`` is a vectorized callable.  The worst slacks are reported (all must be ``>= 0``).
    """
    a = np.arange(1, a_max + 1, dtype=float)
    la = lam(a)
    up = float(np.min(c1 * a - la))
    low = float(np.min(la - c2 * a))
    gap = math.inf
    for s in range(0, a_max, chunk):
        aa = a[s:s + chunk, None]
        lb = la[s:s + chunk, None]
        mask = a[None, :] >= aa
        slack = np.abs(lb - la[None, :]) - c0 * np.abs(aa - a[None, :])
        gap = min(gap, float(np.min(np.where(mask, slack, np.inf))))
    return A1Result(holds=min(up, low, gap) >= 0, worst_upper=up, worst_lower=low, worst_gap=gap)


@dataclass(frozen=True)
class FourierDecay:
    holds: bool
    C: float
    worst: tuple


def _bracket(v):
    return math.sqrt(1.0 + v * v)


def fourier_decay_check(coeffs, rho, alpha, C=None):
    """Check ``|W_hat(k, l)| <= C e^{-|l| rho} prod <k_i>^{-alpha_hat_i}``.

    ``alpha_hat_i = alpha_i`` if ``k_i != 0`` else 0, and ``|l|`` is the l1 norm.
    The reported ``C`` is the smallest constant that works, i.e. the largest
    weighted coefficient ``|W_hat| e^{|l| rho} prod <k_i>^{alpha_hat_i}``, and
    ``worst`` is the ``(k, l)`` attaining it.  Without an explicit ``C`` the
    map is checked against that constant, which a finite map always passes;
    pass ``C`` (for instance from a reference map) to test a given envelope.
    """
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    weighted = {}
    for (k, l), v in coeffs.items():
        k = tuple(np.atleast_1d(k).tolist())
        l = tuple(np.atleast_1d(l).tolist())
        if len(k) != alpha.size:
            raise ValueError("alpha must have one entry per phase dimension")
        w = abs(v) * math.exp(rho * sum(abs(x) for x in l))
        for ki, ai in zip(k, alpha):
            if ki != 0:
                w *= _bracket(ki) ** ai
        weighted[(k, l)] = w
    if not weighted:
        return FourierDecay(holds=True, C=0.0, worst=None)
    worst = max(weighted, key=weighted.get)
    need = weighted[worst]
    limit = need if C is None else C
    return FourierDecay(holds=bool(need <= limit * (1 + 1e-12)), C=float(need), worst=worst)
