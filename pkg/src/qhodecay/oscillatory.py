"""Stationary-phase tools: van der Corput checks, the phase ``g``, the kernels ``f_m``.

The classifier :func:`case_classify` sorts ``(k, m, n)`` into the regimes used
to bound ``int <x>^mu e^{ikx} h_m h_n`` on ``[0, X_m)``: a wide gap between
turning points, negative ``k``, large ``k``, and five bands of
``D = X_n^2 - X_m^2`` measured against ``k X_m^{2/3}``, ``k X_m^{5/6}``,
``k X_m`` and ``4 k X_m``.
"""

from dataclasses import dataclass
from typing import Callable
import cmath
import math

import numpy as np
from scipy import integrate, optimize

from .hermite import SpectralIndex
from .langer import (GAMMA_5_6, LANGER_NORM, SERIES_RADIUS, laguerre_integral,
                     scaled_hankel, zeta_abs)

VDC_CONSTANTS = {1: 3.0, 2: 8.0}

CASE_TAGS = ("wide_gap", "negative_k", "large_k",
             "band_A", "band_B", "band_C", "band_D", "band_E")


class PreconditionError(ValueError):
    """Raised when a van der Corput precondition fails on the check grid."""


# -- van der Corput -------------------------------------------------------

@dataclass(frozen=True)
class VdcResult:
    bound: float
    direct: complex
    variation: float

    @property
    def holds(self):
        return abs(self.direct) <= self.bound


def _gl_panels(f, edges, nodes=16):
    t, w = np.polynomial.legendre.leggauss(nodes)
    a, b = edges[:-1, None], edges[1:, None]
    x = 0.5 * (b - a) * t + 0.5 * (b + a)
    vals = f(x.ravel()).reshape(x.shape)
    return np.sum(0.5 * (b - a) * w * vals)


def oscillatory_quad(phase, amplitude, lam, a, b, tol=1e-12, max_panels=1 << 18):
    """``int_a^b exp(i lam phase(x)) amplitude(x) dx`` on phase-resolved panels.

    Panels are chosen so ``lam * phase`` changes by at most one radian across
    each; the panel count doubles until two passes agree to ``tol``.
    """
    f = lambda x: np.exp(1j * lam * phase(x)) * amplitude(x)
    grid = np.linspace(a, b, 4097)
    swing = lam * np.abs(np.diff(phase(grid)))
    panels = max(8, int(np.sum(swing)) + 1)
    # concentrate panels where the phase moves fastest
    cum = np.concatenate([[0.0], np.cumsum(swing + (b - a) / 4096 * 1.0)])
    prev = None
    while panels <= max_panels:
        edges = np.interp(np.linspace(0, cum[-1], panels + 1), cum, grid)
        val = complex(_gl_panels(f, edges))
        if prev is not None and abs(val - prev) <= tol * max(1.0, abs(val)):
            return val
        prev = val
        panels *= 2
    raise RuntimeError("oscillatory quadrature did not converge")


def total_variation(amplitude, a, b, damplitude=None, points=20001):
    """``int_a^b |psi'(x)| dx``; exact quadrature if ``damplitude`` is given."""
    if damplitude is not None:
        return integrate.quad(lambda x: abs(damplitude(x)), a, b, limit=400)[0]
    v = amplitude(np.linspace(a, b, points))
    return float(np.sum(np.abs(np.diff(v))))


def check_phase(phase, j, a, b, points=4001, dphase=None, slack=1e-9):
    """Verify ``|phase^(j)| >= 1`` (and monotone ``phase'`` for ``j = 1``) on a grid."""
    x = np.linspace(a, b, points)
    if dphase is not None:
        d = np.asarray(dphase(x), dtype=float)
    else:
        d = np.asarray(phase(x), dtype=float)
        for _ in range(j):
            d = np.gradient(d, x, edge_order=2)
    if np.min(np.abs(d)) < 1.0 - slack:
        raise PreconditionError(f"|phase^({j})| drops to {np.min(np.abs(d)):.3g} < 1")
    if j == 1:
        dd = np.diff(d)
        scale = slack * max(1.0, float(np.max(np.abs(d))))
        if not (np.all(dd >= -scale) or np.all(dd <= scale)):
            raise PreconditionError("phase' is not monotone")


def van_der_corput_bound(phase, amplitude, lam, j, a, b, dphase=None,
                         damplitude=None, check=True):
    """Bound ``c_j lam^(-1/j) [|psi(b)| + int |psi'|]`` next to the direct integral.

    Parameters
    ----------
    phase, amplitude : callable
        Vectorized ``phi`` (real) and ``psi`` (complex allowed).
    lam : float
        Positive frequency.
    j : {1, 2}
        Derivative order with ``|phi^(j)| >= 1`` on ``(a, b)``.
    dphase : callable, optional
        Exact ``phi^(j)`` for the precondition check; finite differences otherwise.
    damplitude : callable, optional
        Exact ``psi'``; otherwise the variation is taken from a fine polygon.

    Returns
    -------
    VdcResult
    """
    if j not in VDC_CONSTANTS:
        raise ValueError("j must be 1 or 2")
    if lam <= 0:
        raise ValueError("lam must be positive")
    if not b > a:
        raise ValueError("need a < b")
    if check:
        check_phase(phase, j, a, b, dphase=dphase)
    var = total_variation(amplitude, a, b, damplitude)
    end = abs(complex(np.asarray(amplitude(np.array([b])))[0]))
    bound = VDC_CONSTANTS[j] * lam ** (-1.0 / j) * (end + var)
    direct = oscillatory_quad(phase, amplitude, lam, a, b)
    return VdcResult(bound=bound, direct=direct, variation=var)


@dataclass(frozen=True)
class VdcCase:
    """A randomized precondition-satisfying van der Corput instance."""

    label: str
    j: int
    lam: float
    a: float
    b: float
    phase: Callable
    dphase: Callable
    amplitude: Callable


def random_vdc_case(rng):
    """Draw one case: polynomial phases with the derivative floor built in."""
    j = int(rng.integers(1, 3))
    lam = float(np.exp(rng.uniform(0.0, math.log(500.0))))
    length = float(rng.uniform(0.5, 3.0))
    a, b = 0.0, length
    if j == 1:
        s = float(rng.choice([-1.0, 1.0]))
        c = float(rng.uniform(0.0, 2.0))
        if rng.random() < 0.5:
            phase = lambda x: s * (x + c * x * x)
            dphase = lambda x: s * (1.0 + 2.0 * c * x)
            label = "j1_quadratic"
        else:
            phase = lambda x: s * (x + c * x ** 3)
            dphase = lambda x: s * (1.0 + 3.0 * c * x * x)
            label = "j1_cubic"
    else:
        c = float(rng.uniform(1.0, 4.0))
        x0 = float(rng.uniform(a, b))
        d = float(rng.uniform(0.0, (c - 1.0) / length))
        phase = lambda x: 0.5 * c * (x - x0) ** 2 + d * (x - x0) ** 3 / 6.0
        dphase = lambda x: c + d * (x - x0)
        label = "j2_stationary"
    kind = int(rng.integers(0, 3))
    if kind == 0:
        coef = rng.normal(size=int(rng.integers(1, 5)))
        amplitude = lambda x: np.polyval(coef, x) + 0j
        label += "_poly"
    elif kind == 1:
        beta = float(rng.uniform(-2.0, 2.0))
        amplitude = lambda x: np.exp(beta * x) + 0j
        label += "_exp"
    else:
        gam = float(rng.uniform(0.0, 10.0))
        amplitude = lambda x: np.cos(gam * x) + 2.0 + 0j
        label += "_cos"
    return VdcCase(label, j, lam, a, b, phase, dphase, amplitude)


def vdc_suite(seed, count):
    """Run ``count`` random cases; returns a list of ``(case, VdcResult)``."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        case = random_vdc_case(rng)
        res = van_der_corput_bound(case.phase, case.amplitude, case.lam, case.j,
                                   case.a, case.b, dphase=case.dphase)
        out.append((case, res))
    return out


# -- phase g and the kernels -------------------------------------------------

def _idx(n):
    return n if isinstance(n, SpectralIndex) else SpectralIndex(int(n))


def phase_g(k, m, n, x):
    """``sqrt(X_n^2 - x^2) - sqrt(X_m^2 - x^2) - k`` on ``0 <= x < X_m`` (vectorized)."""
    im, inn = _idx(m), _idx(n)
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or np.any(x >= im.turning_point) or np.any(x >= inn.turning_point):
        raise ValueError("phase_g needs 0 <= x < min(X_m, X_n)")
    val = np.sqrt(inn.lam - x * x) - np.sqrt(im.lam - x * x) - k
    return float(val) if val.ndim == 0 else val


@dataclass(frozen=True)
class PhaseProfile:
    k: float
    m: int
    n: int

    def g(self, x):
        return phase_g(self.k, self.m, self.n, x)


def phase_root(k, m, n, target):
    """Solve ``g(a) = target`` on ``[0, X_m)``; ``None`` if ``target`` is out of range.

    Diagnostic only; ``g`` is non-decreasing for ``m <= n``.
    """
    im = _idx(m)
    hi = im.turning_point * (1.0 - 1e-14)
    lo_val = phase_g(k, m, n, 0.0) - target
    hi_val = phase_g(k, m, n, hi) - target
    if lo_val == 0.0:
        return 0.0
    if lo_val * hi_val > 0:
        return None
    return optimize.brentq(lambda x: phase_g(k, m, n, x) - target, 0.0, hi, xtol=1e-14)


def kernel_f(m, x):
    """``f_m(x) = int_0^inf e^-t t^(-1/6) (1 + i t / (2 zeta_m))^(-1/6) dt`` for ``x < X_m``.

    ``zeta_m(x) < 0`` here, so ``|f_m| <= Gamma(5/6)``.  Small ``|zeta|`` goes
    through the ``J_{+-1/3}`` series via ``f = conj(Gamma(5/6) e^{-i(r - 5pi/12)} S(r))``
    with ``S(r) = sqrt(pi r/2) H^(1)_{1/3}(r)``.
    """
    im = _idx(m)
    x = float(x)
    if x < 0 or x >= im.turning_point:
        raise ValueError("kernel_f needs 0 <= x < X_m")
    r = float(zeta_abs(im, x))
    if r <= SERIES_RADIUS:
        s = scaled_hankel(r, 0.0, method="series")
        return (GAMMA_5_6 * cmath.exp(-1j * (r - 5 * math.pi / 12)) * s).conjugate()
    return laguerre_integral(r, -math.pi)


def psi1_from_kernel(m, x):
    """Normalized Langer term rebuilt from ``f_m`` below the turning point.

    With ``A = e^{i zeta} f_m`` the real oscillation needs both exponentials:
    ``psi_1 = -i (X^2 - x^2)^(-1/4) [e^{i pi/12} A + e^{-5 i pi/12} conj(A)] / Gamma(5/6)``.
    """
    im = _idx(m)
    r = float(zeta_abs(im, x))
    a = cmath.exp(-1j * r) * kernel_f(im, x)
    s = -1j * (cmath.exp(1j * math.pi / 12) * a
               + cmath.exp(-5j * math.pi / 12) * a.conjugate()) / GAMMA_5_6
    return s * (im.lam - x * x) ** -0.25 * LANGER_NORM


def single_branch_term(m, x):
    """One-exponential piece ``e^{-5 i pi/12} (X^2 - x^2)^(-1/4) e^{i zeta} f_m / Gamma(5/6)``."""
    im = _idx(m)
    r = float(zeta_abs(im, x))
    return (cmath.exp(-5j * math.pi / 12) * (im.lam - x * x) ** -0.25
            * cmath.exp(-1j * r) * kernel_f(im, x) / GAMMA_5_6)


@dataclass(frozen=True)
class AmplitudeProfile:
    m: int
    n: int

    def psi(self, x):
        """``(X_m^2 - x^2)^(-1/4) (X_n^2 - x^2)^(-1/4) f_m(x) conj(f_n(x))``."""
        im, inn = _idx(self.m), _idx(self.n)
        return ((im.lam - x * x) ** -0.25 * (inn.lam - x * x) ** -0.25
                * kernel_f(im, x) * kernel_f(inn, x).conjugate())

    def f_m(self, x):
        return kernel_f(self.m, x)

    def f_n(self, x):
        return kernel_f(self.n, x)


# -- band classifier -----------------------------------------------------------

def band_thresholds(k, m):
    """``(k X^{2/3}, k X^{5/6}, k X, 4 k X)`` with ``X = X_m``."""
    X = _idx(m).turning_point
    return (k * X ** (2 / 3), k * X ** (5 / 6), k * X, 4 * k * X)


def case_classify(k, m, n):
    """Regime tag for ``(k, m, n)`` with ``m <= n``.

    Priority: ``wide_gap`` (``X_n >= 2 X_m``), then ``negative_k``, then
    ``large_k`` (``k > X_m^{1/3}``), then the band of ``D = X_n^2 - X_m^2``.
    Bands are ``[0, t1]``, ``(t1, t2]``, ``(t2, t3]``, ``(t3, t4]``, ``(t4, inf)``
    so a value on a shared boundary goes to the lower band.
    """
    if k == 0:
        raise ValueError("k must be nonzero")
    if m > n:
        raise ValueError("case_classify needs m <= n")
    im, inn = _idx(m), _idx(n)
    if inn.turning_point >= 2 * im.turning_point:
        return "wide_gap"
    if k < 0:
        return "negative_k"
    if k > im.turning_point ** (1 / 3):
        return "large_k"
    d = inn.lam - im.lam
    for tag, t in zip(("band_A", "band_B", "band_C", "band_D"), band_thresholds(k, m)):
        if d <= t:
            return tag
    return "band_E"
