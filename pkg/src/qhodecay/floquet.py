"""Quasi-periodically forced oscillator in the Hermite basis.

The truncated system ``i xi' = (N + eps P(omega t)) xi`` with
``N = diag(1, 3, 5, ...)`` is advanced by Strang splitting: exact half-step
phases ``exp(-i N dt/2)`` around a Cayley (implicit-midpoint) step for
``eps P`` at the mid-time.  This is the midpoint rule on the interaction
picture ``y = exp(iNt) xi``, and every step is unitary, so the l2 norm is
conserved up to rounding.
"""

from dataclasses import dataclass, field, replace
import csv
import math

import numpy as np

from .hermite import sobolev_norm
from .matrix_elements import WSpec, sine_cosine_tables, _check_mu

GOLDEN = (1.0 + math.sqrt(5.0)) / 2.0
NORM_DRIFT_LIMIT = 1e-6


class IntegratorError(RuntimeError):
    """Norm drift beyond ``NORM_DRIFT_LIMIT``."""


@dataclass(frozen=True)
class SimConfig:
    spec: WSpec
    omega: tuple
    epsilon: float
    mu: float = 0.0
    N: int = 128
    T: float = 200.0
    dt: float = 5e-3
    s_list: tuple = (0.0, 1.0)
    snapshot_every: int = 0
    support: int = 128

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.N < 8:
            raise ValueError("N must be at least 8")
        if self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")
        if self.T <= 0:
            raise ValueError("T must be positive")
        _check_mu(self.mu)

    @property
    def nu(self):
        return self.spec.nu

    @property
    def steps(self):
        return int(round(self.T / self.dt))


def default_spec(nu=(1.0, math.sqrt(2.0))):
    """``W(phi, theta) = cos(theta) sin(phi_1) + sin(theta) sin(phi_2)``, odd in ``phi``."""
    return WSpec(coeffs={(1, 0): ({(1,): (1.0, 0.0)}, {}),
                         (0, 1): ({(1,): (0.0, 1.0)}, {})},
                 nu=tuple(float(v) for v in nu))


def default_config(**overrides):
    cfg = SimConfig(spec=default_spec(), omega=(GOLDEN,), epsilon=1e-3)
    return replace(cfg, **overrides) if overrides else cfg


def default_initial(N, support=128):
    """Normalized ``1/j`` on ``j <= min(N, support)``, zero beyond."""
    v = np.zeros(N, dtype=complex)
    m = min(N, support)
    v[:m] = 1.0 / np.arange(1, m + 1)
    return v / np.linalg.norm(v)


class Generator:
    """``G(t) = N_diag + eps P(omega t)`` with ``P`` assembled from cached tables."""

    def __init__(self, cfg):
        self.cfg = cfg
        self.diag = 2.0 * np.arange(1, cfg.N + 1) - 1.0
        self.terms = []
        if cfg.epsilon:
            for key in cfg.spec.coeffs:
                S, C = sine_cosine_tables(cfg.spec.frequency(key), cfg.mu, cfg.N)
                self.terms.append((key, S, C))
        # crude bound on ||P||_2 for choosing the Cayley evaluation
        bound = 0.0
        for key, S, C in self.terms:
            amp_a = sum(abs(c) + abs(s) for c, s in cfg.spec.coeffs[key][0].values())
            amp_b = sum(abs(c) + abs(s) for c, s in cfg.spec.coeffs[key][1].values())
            bound += amp_a * np.linalg.norm(S, 2) + amp_b * np.linalg.norm(C, 2)
        self.p_bound = bound

    def theta(self, t):
        return np.asarray(self.cfg.omega, dtype=float) * t

    def P(self, t):
        P = np.zeros((self.cfg.N, self.cfg.N))
        th = self.theta(t)
        for key, S, C in self.terms:
            a, b = self.cfg.spec.a(key, th), self.cfg.spec.b(key, th)
            if a:
                P += a * S
            if b:
                P += b * C
        return P

    def __call__(self, t):
        return np.diag(self.diag) + self.cfg.epsilon * self.P(t)


def build_generator(cfg):
    return Generator(cfg)


def _cayley_apply(P, a, v, bound):
    """``(I + i a P)^(-1) (I - i a P) v`` for real symmetric ``P``."""
    u = v - 1j * a * (P @ v)
    r = abs(a) * bound
    if r < 0.1:
        # Neumann series, truncated once r^j is below rounding
        terms = max(1, int(math.ceil(-17.0 / math.log10(r)))) if r > 0 else 0
        out = u.copy()
        term = u
        for _ in range(terms):
            term = -1j * a * (P @ term)
            out = out + term
        return out
    return np.linalg.solve(np.eye(P.shape[0]) + 1j * a * P, u)


@dataclass
class Trajectory:
    times: np.ndarray
    norm_histories: dict
    snapshots: list = field(default_factory=list)
    final: np.ndarray = None
    initial: np.ndarray = None

    @property
    def states(self):
        return [s for _, s in self.snapshots]

    def drift(self):
        h = self.norm_histories[0.0]
        return float(np.max(np.abs(h / h[0] - 1.0)))


def evolve(cfg, initial=None, t0=0.0, backward=False, generator=None):
    """Advance ``xi`` from ``t0`` over ``T`` (towards ``t0 - T`` if ``backward``).

    Norms for every ``s`` in ``cfg.s_list`` (and ``s = 0``) are recorded at
    every step; full states every ``cfg.snapshot_every`` steps when positive.
    """
    gen = generator or build_generator(cfg)
    xi = default_initial(cfg.N, cfg.support) if initial is None else np.array(initial, dtype=complex)
    if xi.shape != (cfg.N,):
        raise ValueError(f"initial state must have length {cfg.N}")
    if not np.linalg.norm(xi) > 0:
        raise ValueError("initial state must be nonzero")
    s_all = sorted(set(float(s) for s in cfg.s_list) | {0.0})
    j = np.arange(1, cfg.N + 1, dtype=float)
    weights = {s: j ** s for s in s_all}
    steps = cfg.steps
    dt = -cfg.dt if backward else cfg.dt
    half = np.exp(-1j * gen.diag * dt / 2.0)
    hist = {s: np.empty(steps + 1) for s in s_all}
    times = t0 + dt * np.arange(steps + 1)
    snaps = []

    def record(i, v):
        p = np.abs(v) ** 2
        for s in s_all:
            hist[s][i] = math.sqrt(float(np.dot(weights[s], p)))
        if cfg.snapshot_every and i % cfg.snapshot_every == 0:
            snaps.append((times[i], v.copy()))

    record(0, xi)
    start = xi.copy()
    a = cfg.epsilon * dt / 2.0
    for i in range(steps):
        xi = half * xi
        if cfg.epsilon:
            xi = _cayley_apply(gen.P(t0 + (i + 0.5) * dt), a, xi, gen.p_bound)
        xi = half * xi
        record(i + 1, xi)
    traj = Trajectory(times=times, norm_histories=hist, snapshots=snaps, final=xi,
                      initial=start)
    if traj.drift() > NORM_DRIFT_LIMIT:
        raise IntegratorError(f"l2 norm drift {traj.drift():.3g} exceeds {NORM_DRIFT_LIMIT}")
    return traj


def history_difference(a, b, s=1.0):
    """``sup_t |h_a - h_b| / sup_t h_a`` for the ``s``-norm histories on a shared time grid."""
    ha, hb = a.norm_histories[float(s)], b.norm_histories[float(s)]
    if ha.shape != hb.shape:
        raise ValueError("trajectories use different time grids")
    return float(np.max(np.abs(ha - hb)) / np.max(np.abs(ha)))


def pad_state(v, N):
    out = np.zeros(N, dtype=complex)
    out[:len(v)] = v
    return out


REPORT_COLUMNS = ("label", "s", "sup_ratio", "final_ratio", "drift", "convergence")


def growth_report(trajs, labels, refined=None):
    """Rows ``{label, s, sup_ratio, final_ratio, drift, convergence}``.

    ``refined`` optionally pairs each trajectory with a ``2N`` rerun; the
    ``convergence`` column is then :func:`history_difference` at that ``s``.
    """
    if not trajs:
        raise ValueError("need at least one trajectory")
    if len(labels) != len(trajs):
        raise ValueError("one label per trajectory")
    rows = []
    for i, (tr, lab) in enumerate(zip(trajs, labels)):
        ref = refined[i] if refined is not None else None
        for s, h in tr.norm_histories.items():
            rows.append({"label": lab, "s": s, "sup_ratio": float(np.max(h) / h[0]),
                         "final_ratio": float(h[-1] / h[0]), "drift": tr.drift(),
                         "convergence": history_difference(tr, ref, s) if ref is not None else math.nan})
    return rows


def write_trajectory_csv(traj, path, every=1):
    """Columns ``t, norm_<s>...``; every ``every``-th step."""
    ss = sorted(traj.norm_histories)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"norm_{s:g}" for s in ss])
        for i in range(0, len(traj.times), every):
            w.writerow([repr(float(traj.times[i]))] + [repr(float(traj.norm_histories[s][i])) for s in ss])


def write_snapshots(traj, path):
    """Text snapshots: blocks of ``index, re, im`` rows headed by ``# t=<time>``."""
    with open(path, "w") as fh:
        for t, v in traj.snapshots:
            fh.write(f"# t={float(t)!r}\n")
            for j, z in enumerate(v, start=1):
                fh.write(f"{j},{float(z.real)!r},{float(z.imag)!r}\n")


# -- config files ---------------------------------------------------------------

def _series_from(items):
    return {tuple(int(v) for v in it["l"]): (float(it.get("c", 0.0)), float(it.get("s", 0.0)))
            for it in items or []}


def _series_to(series):
    return [{"l": list(l), "c": c, "s": s} for l, (c, s) in series.items()]


def config_from_dict(d):
    """Build a :class:`SimConfig` from the mapping layout of a run file.

    ``modes`` is a list of tables with either ``k`` (a raw frequency) or
    ``key`` (an integer vector scaled by ``nu``) plus ``a`` and ``b`` series,
    each a list of ``{l, c, s}`` entries.
    """
    sim = dict(d.get("sim", d))
    modes = sim.pop("modes", None)
    nu = sim.pop("nu", None)
    if modes is None:
        spec = default_spec(nu) if nu is not None else default_spec()
    else:
        coeffs = {}
        for mm in modes:
            key = float(mm["k"]) if "k" in mm else tuple(int(v) for v in mm["key"])
            coeffs[key] = (_series_from(mm.get("a")), _series_from(mm.get("b")))
        spec = WSpec(coeffs=coeffs, nu=tuple(float(v) for v in nu) if nu is not None else None)
    kw = {}
    for name, conv in (("epsilon", float), ("mu", float), ("N", int), ("T", float),
                       ("dt", float), ("snapshot_every", int), ("support", int)):
        if name in sim:
            kw[name] = conv(sim.pop(name))
    if "omega" in sim:
        kw["omega"] = tuple(float(v) for v in np.atleast_1d(sim.pop("omega")))
    if "s_list" in sim:
        kw["s_list"] = tuple(float(v) for v in sim.pop("s_list"))
    if sim:
        raise ValueError(f"unknown config keys: {sorted(sim)}")
    base = SimConfig(spec=spec, omega=kw.pop("omega", (GOLDEN,)),
                     epsilon=kw.pop("epsilon", 1e-3))
    return replace(base, **kw)


def config_to_dict(cfg):
    modes = []
    for key, (a, b) in cfg.spec.coeffs.items():
        m = {"key": list(key)} if isinstance(key, tuple) else {"k": key}
        m["a"], m["b"] = _series_to(a), _series_to(b)
        modes.append(m)
    out = {"epsilon": cfg.epsilon, "mu": cfg.mu, "N": cfg.N, "T": cfg.T, "dt": cfg.dt,
           "omega": list(cfg.omega), "s_list": list(cfg.s_list),
           "snapshot_every": cfg.snapshot_every, "support": cfg.support, "modes": modes}
    if cfg.spec.nu is not None:
        out["nu"] = list(cfg.spec.nu)
    return {"sim": out}
