"""Langer turning-point representation of the Hermite functions.

For ``q(x) = x^2`` and ``lam = 2n - 1`` the Langer variable

    zeta_n(x) = int_X^x (lam - t^2)^(1/2) dt

is negative real below the turning point ``X = sqrt(lam)`` (arg -pi) and
positive imaginary above it (arg pi/2).  The leading term of ``h_n`` is

    psi_1(x) = (lam - x^2)^(-1/4) (pi zeta / 2)^(1/2) H^(1)_{1/3}(zeta)

which solves the eigen-equation up to the defect ``f(x)`` and an overall
constant.  :func:`psi1` returns it normalized to ``h_n`` by default; the
normalizing constant ``exp(2 pi i / 3) / sqrt(2 pi)`` follows from matching the
oscillatory region against the WKB amplitude ``sqrt(2/pi)``.
"""

from dataclasses import dataclass
from functools import lru_cache
import cmath
import math
import warnings

import numpy as np
from scipy import integrate, special

from .hermite import SpectralIndex, hermite_rows_scaled

NU = 1.0 / 3.0
GAMMA_5_6 = math.gamma(5.0 / 6.0)
# h_n = LANGER_NORM * psi_1 (leading order)
LANGER_NORM = cmath.exp(2j * math.pi / 3) / math.sqrt(2 * math.pi)
SERIES_RADIUS = 1.0
TURNING_EXCLUSION = 1e-8

BELOW, ABOVE, AT = "below_turning", "above_turning", "at_turning"


class TurningPointError(ValueError):
    """Raised when a Langer term is requested too close to ``X_n``."""


class ConvergenceError(RuntimeError):
    pass


def _index(n):
    return n if isinstance(n, SpectralIndex) else SpectralIndex(int(n))


# -- zeta ---------------------------------------------------------------

def _t_minus_sin(t):
    # t - sin t without cancellation for small t
    t = np.asarray(t, dtype=float)
    small = t < 0.5
    ts = np.where(small, t, 0.0)
    series = np.zeros_like(ts)
    term = ts ** 3 / 6.0
    for k in range(1, 12):
        series = series + term
        term = -term * ts * ts / ((2 * k + 2) * (2 * k + 3))
    return np.where(small, series, t - np.sin(t))


def _sinh_minus_t(t):
    t = np.asarray(t, dtype=float)
    small = t < 0.5
    ts = np.where(small, t, 0.0)
    series = np.zeros_like(ts)
    term = ts ** 3 / 6.0
    for k in range(1, 12):
        series = series + term
        term = term * ts * ts / ((2 * k + 2) * (2 * k + 3))
    with np.errstate(over="ignore"):
        direct = np.sinh(np.where(small, 1.0, t)) - t
    return np.where(small, series, direct)


def zeta_abs(n, x):
    """``|zeta_n(x)|`` for ``x >= 0`` (vectorized), stable near ``X_n``.

    Below the turning point ``|zeta| = (lam/4)(2 theta - sin 2 theta)`` with
    ``cos theta = x/X``; above it ``|zeta| = (lam/4)(sinh 2s - 2s)`` with
    ``cosh s = x/X``.  Both half-angles are formed from ``X - x`` directly.
    """
    idx = _index(n)
    lam, X = idx.lam, idx.turning_point
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("zeta is defined for x >= 0; use parity for x < 0")
    below = x <= X
    gap = np.abs(X - x) / X
    # theta = 2 arcsin(sqrt((1 - u)/2)),  s = log1p(w + sqrt(w (w + 2)))
    theta = 2.0 * np.arcsin(np.sqrt(np.where(below, gap, 0.0) / 2.0))
    w = np.where(below, 0.0, gap)
    s = np.log1p(w + np.sqrt(w * (w + 2.0)))
    return np.where(below, 0.25 * lam * _t_minus_sin(2.0 * theta),
                    0.25 * lam * _sinh_minus_t(2.0 * s))


def zeta_values(n, x):
    """Complex ``zeta_n(x)`` on an array of ``x >= 0``."""
    idx = _index(n)
    x = np.asarray(x, dtype=float)
    a = zeta_abs(idx, x)
    return np.where(x <= idx.turning_point, -a + 0j, 1j * a)


@dataclass(frozen=True)
class ZetaValue:
    index: SpectralIndex
    point: float
    value: complex
    branch: str

    @property
    def arg(self):
        """Argument in the Langer convention (-pi below, pi/2 above)."""
        return {BELOW: -math.pi, ABOVE: math.pi / 2, AT: 0.0}[self.branch]


def zeta(n, x):
    idx = _index(n)
    x = float(x)
    if x < 0:
        raise ValueError("zeta is defined for x >= 0; use parity for x < 0")
    a = float(zeta_abs(idx, x))
    X = idx.turning_point
    if x == X or a == 0.0:
        return ZetaValue(idx, x, 0j, AT)
    if x < X:
        return ZetaValue(idx, x, complex(-a, 0.0), BELOW)
    return ZetaValue(idx, x, complex(0.0, a), ABOVE)


# -- H^(1)_{1/3} ---------------------------------------------------------

@lru_cache(maxsize=None)
def _laguerre_rule(n):
    t, w = special.roots_genlaguerre(n, -1.0 / 6.0)
    return t, w


def _polar(z, arg=None):
    z = complex(z)
    r = abs(z)
    if arg is None:
        arg = cmath.phase(z)
        # the negative real axis is read as arg = -pi (Langer convention)
        if z.imag == 0.0 and z.real < 0:
            arg = -math.pi
    return r, arg


def laguerre_integral(r, arg, tol=1e-10, start=64, max_nodes=256):
    """``int_0^inf e^-t t^(-1/6) (1 + i t / (2 z))^(-1/6) dt`` for ``z = r e^{i arg}``.

    Generalized Gauss-Laguerre, doubling the node count until two successive
    values agree to ``tol``.  The branch point ``t = 2 i z`` sits on the
    integration axis when ``arg = -pi/2``; within ``pi/4`` of that ray the
    contour is turned by ``-+pi/4`` away from it (the value on the ray itself
    is the limit from ``arg > -pi/2``).
    """
    c = 1j / (2.0 * r) * cmath.exp(-1j * arg)
    sing = math.remainder(arg + math.pi / 2, 2 * math.pi)
    beta = 0.0
    if abs(sing) < math.pi / 4:
        beta = -math.pi / 4 if sing >= 0 else math.pi / 4
    # u = s e^{i beta} / cos(beta): e^{-u} u^{-1/6} du -> e^{-s} s^{-1/6} ds times below
    rot = cmath.exp(1j * beta) / math.cos(beta)
    pre = rot ** (5.0 / 6.0)
    osc = -1j * math.tan(beta)

    def rule(n):
        t, w = _laguerre_rule(n)
        return pre * complex(np.sum(w * np.exp(osc * t) * (1.0 + c * rot * t) ** (-1.0 / 6.0)))

    n = start
    prev = rule(n)
    while True:
        n *= 2
        if n > max_nodes:
            raise ConvergenceError(f"Laguerre rule did not converge for |z|={r}")
        val = rule(n)
        if abs(val - prev) <= tol * abs(val):
            return val
        prev = val


def _j_series(nu, r, arg, terms=40):
    # J_nu(z) = sum_k (-1)^k (z/2)^(2k+nu) / (k! Gamma(k+nu+1))
    half = r / 2.0
    total = 0.0 + 0.0j
    z2 = (half * cmath.exp(1j * arg)) ** 2
    term = 1.0 / special.gamma(nu + 1.0)
    for k in range(terms):
        total += term
        term *= -z2 / ((k + 1) * (k + 1 + nu))
        if abs(term) < 1e-18 * abs(total):
            break
    return total * half ** nu * cmath.exp(1j * nu * arg)


def _scaled_series(r, arg):
    # sqrt(pi z / 2) H_{1/3}(z) from J_{+-1/3}
    jp = _j_series(NU, r, arg)
    jm = _j_series(-NU, r, arg)
    h = 1j / math.sin(NU * math.pi) * (jp * cmath.exp(-1j * NU * math.pi) - jm)
    return cmath.sqrt(math.pi * r / 2.0) * cmath.exp(0.5j * arg) * h


def _scaled_integral_log(r, arg):
    # sqrt(pi z/2) H(z) = exp(i(z - 5 pi/12)) / Gamma(5/6) * integral
    z = r * cmath.exp(1j * arg)
    integral = laguerre_integral(r, arg)
    # constant phase kept in the factor so exp(i z) is rounded the same way everywhere
    return 1j * z, cmath.exp(-5j * math.pi / 12.0) * integral / GAMMA_5_6


def _scaled_connected_log(r, arg):
    # z = w e^{-i pi}: H1(z) = H1(w) + e^{-i pi/3} H2(w), H2(w) = conj(H1(conj w)),
    # and sqrt(z) = -i sqrt(w); both pieces come from the integral on |ph| <= pi/2
    wa = arg + math.pi
    e1, f1 = _scaled_integral_log(r, wa)
    e2, f2 = _scaled_integral_log(r, -wa)
    e2, f2 = e2.conjugate(), f2.conjugate() * cmath.exp(-1j * math.pi / 3)
    ref = max(e1.real, e2.real)
    f = -1j * (f1 * cmath.exp(e1 - ref) + f2 * cmath.exp(e2 - ref))
    return complex(ref, 0.0), f


def scaled_hankel_log(z, arg=None, method="auto"):
    """``log`` of ``sqrt(pi z / 2) H^(1)_{1/3}(z)`` as ``(exponent, factor)``.

    The value is ``factor * exp(exponent)``; splitting off the exponent keeps
    ``|z|`` in the hundreds representable on the positive imaginary ray.
    """
    r, arg = _polar(z, arg)
    if r == 0.0:
        raise ValueError("H^(1)_{1/3} is singular at z = 0")
    if method == "auto":
        method = "series" if r <= SERIES_RADIUS else "integral"
    if method == "series":
        return 0j, _scaled_series(r, arg)
    if method == "integral":
        if arg < -math.pi / 2:
            return _scaled_connected_log(r, arg)
        return _scaled_integral_log(r, arg)
    raise ValueError(f"unknown method {method!r}")


def scaled_hankel(z, arg=None, method="auto"):
    """``sqrt(pi z / 2) H^(1)_{1/3}(z)`` with the Langer branch convention."""
    e, f = scaled_hankel_log(z, arg, method)
    return f * cmath.exp(e)


def bessel_h13(z, arg=None, method="auto"):
    """Hankel function ``H^(1)_{1/3}(z)``.

    ``z`` is read in polar form; a negative real ``z`` is taken on the ray
    ``arg = -pi``.  Pass ``arg`` explicitly to pick another sheet.  Small
    ``|z| <= 1`` uses the ``J_{+-1/3}`` power series, larger ``|z|`` the
    Laguerre-weighted integral representation.
    """
    r, arg = _polar(z, arg)
    s = scaled_hankel(z, arg, method)
    return s / (cmath.sqrt(math.pi * r / 2.0) * cmath.exp(0.5j * arg))


# -- psi_1 ----------------------------------------------------------------

def _psi1_parts(idx, x):
    # normalized psi_1 = unit * exp(log_abs) with |unit| = 1
    X = idx.turning_point
    if abs(x - X) < TURNING_EXCLUSION * X:
        raise TurningPointError(f"x={x} is within {TURNING_EXCLUSION}*X of the turning point")
    zv = zeta(idx, x)
    e, f = scaled_hankel_log(zv.value, zv.arg)
    # principal branch of (lam - x^2)^(-1/4)
    g = f * complex(idx.lam - x * x) ** -0.25 * LANGER_NORM * cmath.exp(1j * e.imag)
    if g == 0:
        return -math.inf, 1.0 + 0j
    return e.real + math.log(abs(g)), g / abs(g)


def psi1(n, x, normalized=True):
    """Langer leading term at ``x >= 0`` (complex).

    With ``normalized=True`` the term is scaled by ``exp(2 pi i/3)/sqrt(2 pi)``
    so that it approximates ``h_n(x)`` itself (its imaginary part is then
    rounding noise).
    """
    idx = _index(n)
    x = float(x)
    if x < 0:
        raise ValueError("psi1 is defined for x >= 0")
    la, unit = _psi1_parts(idx, x)
    val = unit * math.exp(la) if math.isfinite(la) else 0j
    return val if normalized else val / LANGER_NORM


def psi1_log_abs(n, x):
    """``log|psi_1(x)|`` of the normalized term, safe deep in the tail."""
    return _psi1_parts(_index(n), float(x))[0]


@dataclass(frozen=True)
class LangerDecomposition:
    """Leading term and an a-priori size bound for the correction."""

    psi1: complex
    psi2_bound: float
    regime: str


def langer_decomposition(n, x, c_correction=10.0):
    """``h_n = psi1 + psi2`` with ``|psi2| <= c_correction |psi1| / lam`` stated as a bound.

    ``c_correction`` is an empirical stand-in for the unspecified constant.
    Beyond ``2X`` the ``c_correction |psi1| / x^2`` form is used instead.
    """
    idx = _index(n)
    p = psi1(idx, x)
    if x > 2 * idx.turning_point:
        return LangerDecomposition(p, c_correction * abs(p) / (x * x), "large_x")
    return LangerDecomposition(p, c_correction * abs(p) / idx.lam, "large_lambda")


@dataclass(frozen=True)
class ResidualPoint:
    point: float
    h: float
    psi1: float
    deviation: float
    envelope_deviation: float


def _log_envelope(idx, x):
    # log of the non-vanishing modulus of the complex Langer solution
    X = idx.turning_point
    if x >= X:
        return psi1_log_abs(idx, x)
    a = float(zeta_abs(idx, x))
    # Re-part of H1(a e^{-i pi}) is bounded by 2|H1(a)| for real a
    mod = abs(scaled_hankel(a, 0.0))
    return math.log(2.0 * mod / math.sqrt(2 * math.pi)) - 0.25 * math.log(idx.lam - x * x)


def langer_residual(n, xs):
    """Relative deviations ``|h_n - psi_1| / |psi_1|`` at admissible ``xs``.

    Points closer than ``X^(-1/3)`` to the turning point are dropped and
    returned separately.  Each point also carries ``envelope_deviation``, the
    same difference measured against the modulus of the complex Langer
    solution, which stays meaningful at the nodes of ``h_n``.  Differences
    are formed in the log-scaled frame of ``psi_1`` so tails do not underflow.

    Returns
    -------
    points : list of ResidualPoint
    dropped : list of float
    """
    idx = _index(n)
    X = idx.turning_point
    window = X ** (-1.0 / 3.0)
    keep, dropped = [], []
    for x in xs:
        x = float(x)
        if x < 0 or abs(x - X) < window * (1 - 1e-12):
            dropped.append(x)
        else:
            keep.append(x)
    if not keep:
        return [], dropped
    mant, logs = hermite_rows_scaled([idx.n], keep)
    out = []
    for i, x in enumerate(keep):
        la, unit = _psi1_parts(idx, x)
        h_rel = mant[0, i] * math.exp(logs[0, i] - la) if mant[0, i] != 0.0 else 0.0
        diff_rel = abs(h_rel - unit)
        env_ratio = math.exp(la - _log_envelope(idx, x))
        h_val = mant[0, i] * math.exp(logs[0, i]) if mant[0, i] != 0.0 else 0.0
        out.append(ResidualPoint(point=x, h=h_val, psi1=(unit * math.exp(la)).real,
                                 deviation=diff_rel,
                                 envelope_deviation=diff_rel * env_ratio))
    return out, dropped


# -- defect f(x) ------------------------------------------------------------

# f(x) = F(x/X) / X^4 with F universal for q = x^2; near u = 1 (v = 1 - u):
# F = -9/(280 v) + sum_i c_i v^i
_F_POLE = -9.0 / 280.0
_F_SERIES = (-0.04988095238095238, -0.051115491651205935, -0.04338460468103325,
             -0.03300399500159704, -0.023365155330563794, -0.01572023557675465,
             -0.010182725696257066, -0.006404787852292079, -0.003935241174891539,
             -0.0023721358784697536)
_SERIES_BAND = 0.05


def defect_scaled(u):
    """Universal defect ``F(u) = X^4 f(X u)`` for ``q = x^2`` (vectorized)."""
    u = np.asarray(u, dtype=float)
    v = 1.0 - u
    near = np.abs(v) < _SERIES_BAND
    vn = np.where(near, v, 1.0)
    vn = np.where(vn == 0.0, 1e-300, vn)
    series = _F_POLE / vn + np.polyval(_F_SERIES[::-1], vn)
    uf = np.where(near, 0.5, u)
    one = 1.0 - uf * uf
    below = uf < 1.0
    theta = np.arccos(np.clip(uf, -1.0, 1.0))
    s = np.arccosh(np.maximum(uf, 1.0))
    z_below = 0.25 * _t_minus_sin(2.0 * theta)
    z_above = 0.25 * _sinh_minus_t(2.0 * s)
    z2 = np.where(below, z_below ** 2, -(z_above ** 2))
    with np.errstate(over="ignore", divide="ignore"):
        direct = 5.0 / (36.0 * z2) - 0.5 / one ** 2 - 1.25 * uf * uf / one ** 3
    return np.where(near, series, direct)


@dataclass(frozen=True)
class DefectSample:
    point: float
    defect: float
    weight: float


def defect(n, x):
    """``f(x)`` and the weight ``|lam - q(x)|^(1/2)`` at a point."""
    idx = _index(n)
    X = idx.turning_point
    x = float(x)
    f = float(defect_scaled(x / X)) / X ** 4
    return DefectSample(point=x, defect=f, weight=math.sqrt(abs(idx.lam - x * x)))


def _weighted_scaled(u):
    return np.abs(defect_scaled(u)) * np.sqrt(np.abs(1.0 - u * u))


def _quad_piece(a, b, limit):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(lambda u: float(_weighted_scaled(u)), a, b,
                                      limit=limit, epsabs=1e-14, epsrel=1e-10)
        except integrate.IntegrationWarning as exc:
            raise ConvergenceError(f"defect integral on [{a}, {b}] did not converge: {exc}")
    return val


def defect_integral(n, x_lo, limit=200, pieces=False):
    """``int_{x_lo}^inf |f(t)| |lam - t^2|^(1/2) dt``.

    The range is split at ``X/2``, ``X`` and ``3X/2`` (the inner, two
    near-turning and outer pieces).  In the scaled variable ``u = t/X`` the
    integral equals ``(1/lam) int |F(u)| |1 - u^2|^(1/2) du``.

    Returns the value, or ``(value, [piece values])`` with ``pieces=True``.
    """
    idx = _index(n)
    if x_lo < 0:
        raise ValueError("x_lo must be non-negative")
    u0 = x_lo / idx.turning_point
    cuts = [0.5, 1.0, 1.5]
    edges = [u0] + [c for c in cuts if c > u0] + [np.inf]
    parts = []
    for a, b in zip(edges[:-1], edges[1:]):
        if b == np.inf:
            parts.append(integrate.quad(lambda u: float(_weighted_scaled(u)), a, np.inf,
                                        limit=limit, epsabs=1e-16, epsrel=1e-10)[0])
        else:
            parts.append(_quad_piece(a, b, limit))
    parts = [p / idx.lam for p in parts]
    total = math.fsum(parts)
    return (total, parts) if pieces else total
