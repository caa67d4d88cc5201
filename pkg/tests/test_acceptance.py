"""Acceptance suite: one test per criterion, each logging a PASS/FAIL line.

Grids and tolerances come from ``configs/acceptance.toml``.  Run with
``pytest tests/test_acceptance.py -v``; the lines are repeated in the
``acceptance criteria`` section of the terminal summary.
"""

import math
import time

import numpy as np
import pytest

from conftest import load_toml
from qhodecay.diophantine import (DiophantineParams, MelnikovParams, is_diophantine,
                                  loglog_slope, measure_scan, melnikov_check)
from qhodecay.floquet import (GOLDEN, default_config, default_spec, evolve, history_difference,
                              pad_state)
from qhodecay.hermite import turning_point
from qhodecay.langer import GAMMA_5_6, langer_residual, scaled_hankel, zeta_abs
from qhodecay.matrix_elements import (PairIntegrator, WSpec, bound_ratio_sweep, element_table,
                                      malpha_norm, oracle_mu0, oracle_table, osc_integral,
                                      perturbation_matrix, region_decomposition)
from qhodecay.oscillatory import band_thresholds, case_classify, vdc_suite

CONF = load_toml("acceptance.toml")
BANDS = ("band_A", "band_B", "band_C", "band_D", "band_E")


def report(log, number, passed, detail, started):
    line = f"CRITERION {number}: {'PASS' if passed else 'FAIL'} ({time.perf_counter() - started:.1f}s) {detail}"
    log.append(line)
    print(line)
    return passed


# 1 ---------------------------------------------------------------------------

def test_criterion_1_oracle_equivalence(acceptance_log):
    c = CONF["oracle"]
    t0 = time.perf_counter()
    worst = 0.0
    for k in c["ks"]:
        got = element_table(k, 0.0, c["N"])
        ref = oracle_table(k, c["N"])
        worst = max(worst, float(np.max(np.abs(got - ref) / (1 + np.abs(ref)))))
        # the single-pair routine on its own grid, at scattered pairs
        for m, n in c["spot_pairs"]:
            r = oracle_mu0(k, m, n)
            worst = max(worst, abs(osc_integral(k, 0.0, m, n).value - r) / (1 + abs(r)))
    ok = worst <= c["rel_tol"]
    report(acceptance_log, 1, ok, f"max |I - oracle|/(1+|oracle|) = {worst:.2e} "
           f"(tol {c['rel_tol']:g}, N={c['N']}, k={c['ks']})", t0)
    assert ok


# 2 ---------------------------------------------------------------------------

def band_pairs(ks, ms, max_index):
    """First ``n`` inside each band of ``D = X_n^2 - X_m^2`` for every ``(k, m)``."""
    out, covered = [], {}
    for k in ks:
        for m in ms:
            t = (-1.0,) + band_thresholds(k, m)
            for i, band in enumerate(BANDS):
                n = m if i == 0 else m + int(math.floor(t[i] / 2)) + 1
                if n <= max_index and case_classify(k, m, n) == band:
                    out.append((m, n))
                    covered.setdefault(k, set()).add(band)
    return out, covered


def sweep_pairs(c):
    d = c["diagonal"]
    diag = np.unique(np.round(np.geomspace(d["start"], d["stop"], d["count"])).astype(int))
    pairs = [(int(m), int(m)) for m in diag]
    pairs += [(m, 4 * m - 1) for m in c["wide_m"]]  # X_n >= 2 X_m  <=>  n >= 4m - 3/2
    bands, covered = band_pairs([k for k in c["ks"] if k <= 1.0], c["band_m"], c["max_index"])
    return sorted(set(pairs + bands)), covered


def test_criterion_2_boundedness_sweep(acceptance_log):
    c = CONF["sweep"]
    t0 = time.perf_counter()
    pairs, covered = sweep_pairs(c)
    res = bound_ratio_sweep(c["ks"], c["mus"], pairs, max_index=c["max_index"])
    finite = all(math.isfinite(r["ratio"]) for r in res.rows) and not res.failures
    growth = {}
    for (k, mu) in res.sup_by_k_mu:
        rows = [r for r in res.rows if r["k"] == k and r["mu"] == mu]
        early = max(r["ratio"] for r in rows if max(r["m"], r["n"]) <= c["growth_from"])
        late = max(r["ratio"] for r in rows if max(r["m"], r["n"]) <= c["growth_to"])
        growth[(k, mu)] = late / early - 1.0
    worst = max(growth.values())
    tags = sorted({r["case_tag"] for r in res.rows})
    ok = finite and worst < c["growth_tol"]
    report(acceptance_log, 2, ok, f"{len(pairs)} pairs, sup ratio {res.sup_ratio:.4f}, "
           f"max running-sup growth {c['growth_from']}->{c['growth_to']} = {worst:.2e} "
           f"(tol {c['growth_tol']:g}), tags {tags}, bands per k "
           f"{ {k: len(v) for k, v in covered.items()} }", t0)
    for (k, mu), v in sorted(res.sup_by_k_mu.items()):
        print(f"    k={k:g} mu={mu:g}: sup={v:.4f} growth={growth[(k, mu)]:.2e}")
    assert all(len(v) == len(BANDS) for v in covered.values())
    assert ok


# 3 ---------------------------------------------------------------------------

def test_criterion_3_langer_accuracy(acceptance_log):
    c = CONF["langer"]
    t0 = time.perf_counter()
    ok, parts, env = True, [], []
    for n in c["ns"]:
        X = turning_point(n)
        lam = 2 * n - 1
        w = X ** (-1 / 3)
        xs = np.concatenate([np.linspace(0.0, X - 2 * w, c["points"]),
                             np.linspace(X + w, X + c["outer"], c["points"])])
        pts, dropped = langer_residual(n, xs)
        assert not dropped
        dev = max(p.deviation for p in pts)
        bad = sum(p.deviation > c["constant"] / lam for p in pts)
        ok &= bad == 0
        parts.append(f"n={n}: max lam*dev={lam * dev:.3g}, {bad}/{len(pts)} over")
        env.append(f"{lam * max(p.envelope_deviation for p in pts):.3g}")
    report(acceptance_log, 3, ok, "; ".join(parts) + f" | envelope-relative lam*dev: {env}", t0)
    assert ok


# 4 ---------------------------------------------------------------------------

def zeta_bounds(n, points):
    """Slack ``|zeta| - bound`` (min over the grid) for the four lower bounds; ``None`` if not applicable."""
    X = turning_point(n)
    s = 2 * math.sqrt(2) / 3
    out = {}
    x = np.linspace(X, 2 * X + 5, points)
    out["above, 3/2 power"] = (zeta_abs(n, x), s * math.sqrt(X) * (x - X) ** 1.5)
    if X > 2:
        x = np.linspace(X + X ** (-1 / 3), 2 * X + 5, points)
        out["above, linear"] = (zeta_abs(n, x), s * X ** (1 / 3) * (x - X))
    else:
        out["above, linear"] = None
    x = np.linspace(0.0, X, points)
    out["below, 3/2 power"] = (zeta_abs(n, x), (2 / 3) * math.sqrt(X) * (X - x) ** 1.5)
    x = np.linspace(0.0, X - X ** (-1 / 3), points)
    out["below, constant"] = (zeta_abs(n, x), np.full(points, 2 / 3))
    return out


def test_criterion_4_zeta_bounds(acceptance_log):
    c = CONF["zeta"]
    t0 = time.perf_counter()
    ok, worst, skipped = True, math.inf, []
    for n in c["ns"]:
        for name, pair in zeta_bounds(n, c["points"]).items():
            if pair is None:
                skipped.append(f"{name} at n={n} (needs X_n > 2)")
                continue
            z, b = pair
            slack = z - b + c["tol"] * np.maximum(1.0, b)
            ok &= bool(np.all(slack >= 0))
            worst = min(worst, float(np.min(z - b)))
    report(acceptance_log, 4, ok, f"min slack {worst:.2e} (tol {c['tol']:g}); skipped: {skipped}", t0)
    assert ok


# 5 ---------------------------------------------------------------------------

def bessel_suite(c):
    pts = c["points"]
    d1 = GAMMA_5_6
    res = {}
    r = np.geomspace(c["c0"] * (1 + 1e-9), 100.0, pts)
    vals = np.array([abs(scaled_hankel(-v, -math.pi)) for v in r])
    res["negative axis |S| <= 1 (arg -pi)"] = (float(np.max(vals - 1.0)), float(r[np.argmax(vals)]))
    vals_p = np.array([abs(scaled_hankel(v * np.exp(1j * math.pi), math.pi)) for v in r])
    res["negative axis |S| <= 1 (arg +pi, diagnostic)"] = (float(np.max(vals_p - 1.0)), float(r[np.argmax(vals_p)]))
    r = np.geomspace(1e-4, c["c1"], pts)
    vals = np.array([abs(scaled_hankel(-v, -math.pi)) for v in r])
    res["small negative |S| <= (20/d1) |z|^(1/6)"] = (float(np.max(vals - 20 / d1 * r ** (1 / 6))), None)
    r = np.geomspace(1e-4, c["c2"], pts)
    vals = np.array([abs(scaled_hankel(1j * v, math.pi / 2)) for v in r])
    env = c["C_ball2"] * math.exp(c["c2"]) / d1 * np.maximum(r ** (1 / 6), r ** (5 / 6))
    res["small imaginary |S| <= C e^c2/d1 max(|z|^(1/6), |z|^(5/6))"] = (float(np.max(vals - env)), None)
    r = np.geomspace(c["c3"] * (1 + 1e-9), 300.0, pts)
    vals = np.array([abs(scaled_hankel(1j * v, math.pi / 2)) for v in r])
    res["imaginary |S| <= e^-|z|"] = (float(np.max(vals - np.exp(-r))), None)
    lo, hi = c["overlap_radii"]
    worst = 0.0
    for arg in (-math.pi, math.pi / 2):
        for v in np.linspace(lo, hi, pts // 2):
            z = v * np.exp(1j * arg)
            s = scaled_hankel(z, arg, method="series")
            i = scaled_hankel(z, arg, method="integral")
            worst = max(worst, abs(s - i) / abs(i))
    res["overlap"] = (worst - c["overlap_tol"], worst)
    return res


def test_criterion_5_bessel_bounds(acceptance_log):
    c = CONF["bessel"]
    t0 = time.perf_counter()
    res = bessel_suite(c)
    graded = {k: v for k, v in res.items() if "diagnostic" not in k}
    ok = all(v[0] <= 0 for v in graded.values())
    parts = []
    for name, (excess, extra) in res.items():
        verdict = "ok" if excess <= 0 else "violated"
        if name == "overlap":
            parts.append(f"{name}: {verdict} (rel diff {extra:.1e}, tol {c['overlap_tol']:g})")
        elif extra is not None:
            parts.append(f"{name}: {verdict} (max excess {excess:.3g}, worst |z|={extra:.3g})")
        else:
            parts.append(f"{name}: {verdict} (max excess {excess:.3g})")
    report(acceptance_log, 5, ok, "; ".join(parts), t0)
    assert ok


# 6 ---------------------------------------------------------------------------

def test_criterion_6_van_der_corput(acceptance_log):
    c = CONF["vdc"]
    t0 = time.perf_counter()
    out = vdc_suite(c["seed"], c["count"])
    bad = [(case.label, r.direct, r.bound) for case, r in out if not r.holds]
    worst = max(abs(r.direct) / r.bound for _, r in out)
    ok = not bad and len(out) == c["count"]
    report(acceptance_log, 6, ok, f"{len(out)} cases, {len(bad)} violations, max |direct|/bound {worst:.3f}", t0)
    assert ok


# 7 ---------------------------------------------------------------------------

def test_criterion_7_regions(acceptance_log):
    c = CONF["regions"]
    t0 = time.perf_counter()
    worst_add = 0.0
    for m, n in c["pairs"]:
        parts = region_decomposition(c["k"], c["mu"], m, n)
        half, _ = PairIntegrator(m, n, k_max=abs(c["k"])).half_line(c["k"], c["mu"])
        worst_add = max(worst_add, abs(sum(p["value"] for p in parts) - half))
    tails = {}
    for n in c["tail_ns"]:
        tail = region_decomposition(c["k"], c["mu"], n, n)[-1]
        assert tail["region"] == "tail"
        # |tail| is below e^{log_magnitude}, which stays finite when the value underflows
        tails[n] = (abs(tail["value"]), tail["log_magnitude"])
    tail_ok = all(v <= math.exp(-c["tail_rate"] * n) and lm <= -c["tail_rate"] * n
                  for n, (v, lm) in tails.items())
    ok = worst_add <= c["add_tol"] and tail_ok
    report(acceptance_log, 7, ok, f"max additivity error {worst_add:.2e} (tol {c['add_tol']:g}); "
           f"tail log-bounds { {n: round(lm, 1) for n, (_, lm) in tails.items()} } "
           f"vs -n/10", t0)
    assert ok


# 8 ---------------------------------------------------------------------------

def test_criterion_8_measure_scaling(acceptance_log):
    c = CONF["measure"]
    t0 = time.perf_counter()
    rows = measure_scan(c["gammas"], c["tau"], c["d"], c["K"], box=tuple(c["box"]),
                        samples=c["samples"], seed=c["seed"])
    est = [r["estimate"] for r in rows]
    slope = loglog_slope(c["gammas"], est)
    ok = abs(slope - c["slope"]) <= c["slope_tol"]
    report(acceptance_log, 8, ok, f"slope {slope:.3f} (target {c['slope']} +- {c['slope_tol']}), "
           f"estimates {[f'{e:.4f}' for e in est]}", t0)
    assert ok


# 9 ---------------------------------------------------------------------------

def test_criterion_9_simulator(acceptance_log):
    c = CONF["simulate"]
    t0 = time.perf_counter()
    spec = default_spec()
    dio = is_diophantine(spec.nu, DiophantineParams(c["gamma"], c["tau"], len(spec.nu), K=c["K"]))
    mel = melnikov_check((GOLDEN,), MelnikovParams(c["kappa"], c["K"]))
    free = evolve(default_config(epsilon=0.0, N=c["N"], T=c["T0"], dt=c["dt"]))
    const = max(float(np.max(np.abs(h / h[0] - 1))) for h in free.norm_histories.values())
    cfg = default_config(epsilon=c["epsilon"], N=c["N"], T=c["T"], dt=c["dt"])
    run = evolve(cfg)
    h1 = run.norm_histories[1.0]
    sup = float(np.max(h1) / h1[0])
    drift = run.drift()
    fine = evolve(default_config(epsilon=c["epsilon"], N=c["N_fine"], T=c["T"], dt=c["dt"],
                                 support=cfg.support),
                  initial=pad_state(run.initial, c["N_fine"]))
    conv = history_difference(run, fine, s=1.0)
    checks = {"a": const <= c["const_tol"],
              "b": dio.verdict and mel.verdict and sup <= c["h1_sup"] and drift <= c["drift"],
              "c": conv < c["conv_tol"]}
    ok = all(checks.values())
    report(acceptance_log, 9, ok, f"(a) eps=0 max norm change {const:.1e}; (b) nu Diophantine "
           f"margin {dio.margin:.3g}, Melnikov margin {mel.margin:.3g}, sup H1 ratio {sup:.5f}, "
           f"l2 drift {drift:.1e}; (c) N {c['N']}->{c['N_fine']} H1 history change {conv:.1e} "
           f"{checks}", t0)
    assert ok


# 10 --------------------------------------------------------------------------

def test_criterion_10_malpha(acceptance_log):
    c = CONF["malpha"]
    t0 = time.perf_counter()
    spec = WSpec(coeffs={c["k"]: ({(0,): (1.0, 0.0)}, {(0,): (1.0, 0.0)})})
    ok, parts = True, []
    for mu in c["mus"]:
        alpha = 1 / 12 - mu / 4
        norms = [malpha_norm(perturbation_matrix(spec, (0.0,), mu, N), alpha) for N in c["Ns"]]
        spread = max(norms) / min(norms) - 1
        ok &= spread < c["spread"] and all(map(math.isfinite, norms))
        parts.append(f"mu={mu:g}: |P|_alpha={[f'{v:.6f}' for v in norms]} spread {spread:.1e}")
    report(acceptance_log, 10, ok, "; ".join(parts) + f" (tol {c['spread']:g})", t0)
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-s"]))
