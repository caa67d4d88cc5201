"""Command-line entry point: ``qhodecay <group> <action> [options]``.

Every command writes ``<name>.csv`` and ``<name>.manifest.json`` into
``--out``.  Exit codes: 0 success, 2 invalid input, 3 numerical-failure
flags present in the output.
"""

import argparse
import csv
import json
import os
import sys
import time
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .diophantine import (DiophantineParams, MEASURE_COLUMNS, MelnikovParams,
                          is_diophantine, loglog_slope, measure_scan, melnikov_check)
from .floquet import (IntegratorError, config_from_dict, config_to_dict, evolve,
                      growth_report, write_snapshots, write_trajectory_csv)
from .hermite import eigenvalue, hermite_eval, turning_point
from .langer import langer_residual
from .matrix_elements import (SWEEP_COLUMNS, PrecisionLossError, bound_ratio_sweep,
                              exponent_fit, osc_integral, region_decomposition)
from .oscillatory import case_classify, vdc_suite

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 2, 3


class NumericalFailure(Exception):
    """Raised by a command whose output carries failure flags."""


def load_toml(path):
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _floats(text):
    return [float(v) for v in str(text).replace(",", " ").split()]


def _ints(text):
    return [int(v) for v in str(text).replace(",", " ").split()]


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (tuple, list)):
        return " ".join(_fmt(x) for x in v)
    return str(v)


def write_csv(path, columns, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in columns])


# -- commands -------------------------------------------------------------------
# each returns (rows, columns, extra_outputs, summary, failed)

def cmd_hermite_eval(a, out):
    rows = []
    for n in _ints(a.n):
        for x in _floats(a.x):
            s = hermite_eval(n, x)
            rows.append({"n": n, "x": x, "value": s.value, "mantissa": s.mantissa,
                         "log_scale": s.log_scale, "lambda": eigenvalue(n),
                         "turning_point": turning_point(n)})
    return rows, ("n", "x", "value", "mantissa", "log_scale", "lambda", "turning_point"), [], {}, False


def cmd_langer_audit(a, out):
    rows, summary = [], {}
    for n in _ints(a.n_list):
        X = turning_point(n)
        lam = eigenvalue(n)
        w = X ** (-1 / 3)
        xs = np.concatenate([np.linspace(0.0, X - 2 * w, a.grid),
                             np.linspace(X + w, X + 5.0, a.grid)])
        pts, dropped = langer_residual(n, xs)
        for p in pts:
            rows.append({"n": n, "x": p.point, "h": p.h, "psi1": p.psi1,
                         "deviation": p.deviation, "envelope_deviation": p.envelope_deviation,
                         "threshold": 10.0 / lam, "within": p.deviation <= 10.0 / lam})
        summary[str(n)] = {"max_deviation": max(p.deviation for p in pts),
                           "max_envelope_deviation": max(p.envelope_deviation for p in pts),
                           "dropped": len(dropped)}
    cols = ("n", "x", "h", "psi1", "deviation", "envelope_deviation", "threshold", "within")
    return rows, cols, [], summary, False


def cmd_matel_one(a, out):
    if a.k == 0:
        raise ValueError("k must be nonzero")
    res = bound_ratio_sweep([a.k], [a.mu], [(a.m, a.n)], max_index=max(a.m, a.n))
    failed = bool(res.failures)
    return res.rows, SWEEP_COLUMNS, [], {"sup_ratio": res.sup_ratio}, failed


def sweep_pairs(conf):
    """Pairs from a sweep config: explicit ``pairs`` plus an optional log-spaced ``diagonal``."""
    pairs = [tuple(int(v) for v in p) for p in conf.get("pairs", [])]
    diag = conf.get("diagonal")
    if diag:
        ms = np.unique(np.round(np.geomspace(diag["start"], diag["stop"], diag["count"])).astype(int))
        pairs += [(int(m), int(m)) for m in ms]
    if not pairs:
        raise ValueError("sweep config defines no pairs")
    return list(dict.fromkeys(pairs))


def cmd_matel_sweep(a, out):
    conf = load_toml(a.config).get("sweep", {})
    pairs = sweep_pairs(conf)
    res = bound_ratio_sweep(conf["ks"], conf["mus"], pairs, max_index=conf.get("max_index", 4000))
    summary = {"sup_ratio": res.sup_ratio,
               "sup_by_k_mu": {f"k={k:g},mu={mu:g}": v for (k, mu), v in res.sup_by_k_mu.items()},
               "precision_failures": len(res.failures)}
    return res.rows, SWEEP_COLUMNS, [], summary, bool(res.failures)


def cmd_matel_decay_fit(a, out):
    with open(a.input, newline="") as fh:
        data = list(csv.DictReader(fh))
    groups = {}
    for r in data:
        if r["m"] != r["n"]:
            continue
        groups.setdefault((float(r["k"]), float(r["mu"])), []).append(
            (int(r["m"]), float(r["abs_I"])))
    rows = []
    for (k, mu), pts in sorted(groups.items()):
        pts = sorted(set(pts))
        if len(pts) < 8:
            continue
        fit = exponent_fit(pts)
        env = exponent_fit(pts, envelope=True)
        rows.append({"k": k, "mu": mu, "samples": len(pts), "slope": fit.slope,
                     "stderr": fit.stderr, "envelope_slope": env.slope,
                     "bound_slope": -2 * (1 / 12 - mu / 4)})
    if not rows:
        raise ValueError("no (k, mu) group has 8 or more diagonal samples")
    cols = ("k", "mu", "samples", "slope", "stderr", "envelope_slope", "bound_slope")
    return rows, cols, [], {}, False


def cmd_regions_audit(a, out):
    m, n = min(a.m, a.n), max(a.m, a.n)
    parts = region_decomposition(a.k, a.mu, m, n)
    el = osc_integral(a.k, a.mu, m, n, strict=False)
    rows = []
    for p in parts:
        lo, hi = p["interval"]
        rows.append({"region": p["region"], "a": lo, "b": hi, "re": p["value"].real,
                     "im": p["value"].imag, "abs": abs(p["value"]),
                     "log_magnitude": p["log_magnitude"], "case_tag": p["case"],
                     "layout": p["layout"]})
    total = sum(p["value"] for p in parts)
    summary = {"case_tag": case_classify(a.k, m, n),
               "additivity_error": abs(total - el.half_line)}
    cols = ("region", "a", "b", "re", "im", "abs", "log_magnitude", "case_tag", "layout")
    return rows, cols, [], summary, not el.precision_ok


def cmd_vdc_suite(a, out):
    rows = []
    for i, (case, res) in enumerate(vdc_suite(a.seed, a.count)):
        rows.append({"index": i, "label": case.label, "j": case.j, "lam": case.lam,
                     "a": case.a, "b": case.b, "bound": res.bound,
                     "abs_direct": abs(res.direct), "holds": res.holds})
    bad = sum(not r["holds"] for r in rows)
    cols = ("index", "label", "j", "lam", "a", "b", "bound", "abs_direct", "holds")
    return rows, cols, [], {"violations": bad}, bad > 0


def cmd_dioph_check(a, out):
    nu = _floats(a.nu)
    p = DiophantineParams(gamma=a.gamma, tau=a.tau, d=len(nu), K=a.K)
    v = is_diophantine(nu, p)
    rows = [{"nu": nu, "gamma": a.gamma, "tau": a.tau, "K": a.K, "verdict": v.verdict,
             "worst_k": v.worst_k, "margin": v.margin}]
    return rows, ("nu", "gamma", "tau", "K", "verdict", "worst_k", "margin"), [], {}, False


def cmd_dioph_measure(a, out):
    c = load_toml(a.config).get("measure", {})
    rows = measure_scan(c["gammas"], c["tau"], c["d"], c["K"], box=tuple(c.get("box", (1.0, 2.0))),
                        samples=c.get("samples", 100_000), seed=c.get("seed", 0))
    summary = {}
    est = [r["estimate"] for r in rows]
    if len(rows) >= 2 and all(e > 0 for e in est):
        summary["loglog_slope"] = loglog_slope([r["gamma"] for r in rows], est)
    return rows, MEASURE_COLUMNS, [], summary, False


def cmd_melnikov_check(a, out):
    omega = _floats(a.omega)
    v = melnikov_check(omega, MelnikovParams(kappa=a.kappa, K=a.K), j_range=a.j_range)
    rows = [{"omega": omega, "kappa": a.kappa, "K": a.K, "verdict": v.verdict,
             "worst_k": v.worst_k, "worst_j": v.worst_j, "margin": v.margin}]
    return rows, ("omega", "kappa", "K", "verdict", "worst_k", "worst_j", "margin"), [], {}, False


def cmd_simulate(a, out):
    cfg = config_from_dict(load_toml(a.config))
    try:
        traj = evolve(cfg)
    except IntegratorError as exc:
        raise NumericalFailure(str(exc)) from exc
    extra = []
    tpath = os.path.join(out, "simulate.trajectory.csv")
    write_trajectory_csv(traj, tpath, every=max(1, a.every))
    extra.append(tpath)
    if cfg.snapshot_every:
        spath = os.path.join(out, "simulate.snapshots.txt")
        write_snapshots(traj, spath)
        extra.append(spath)
    rows = growth_report([traj], [a.label])
    summary = {"config": config_to_dict(cfg)}
    return rows, ("label", "s", "sup_ratio", "final_ratio", "drift", "convergence"), extra, summary, False


def cmd_report(a, out):
    rows = []
    for path in a.inputs:
        with open(path, newline="") as fh:
            data = list(csv.DictReader(fh))
        cols = data[0].keys() if data else []
        if "ratio" in cols:
            rows.append({"input": path, "metric": "sup_ratio",
                         "value": max(float(r["ratio"]) for r in data)})
        if "estimate" in cols:
            g = [float(r["gamma"]) for r in data]
            e = [float(r["estimate"]) for r in data]
            if len(g) >= 2 and all(v > 0 for v in e):
                rows.append({"input": path, "metric": "loglog_slope", "value": loglog_slope(g, e)})
        for c in cols:
            if c.startswith("norm_"):
                h = np.array([float(r[c]) for r in data])
                rows.append({"input": path, "metric": f"sup_ratio_{c}", "value": float(h.max() / h[0])})
        if "holds" in cols:
            rows.append({"input": path, "metric": "violations",
                         "value": sum(r["holds"] != "true" for r in data)})
        rows.append({"input": path, "metric": "rows", "value": len(data)})
    return rows, ("input", "metric", "value"), [], {}, False


# -- parser -----------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="qhodecay", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--out", default=".", help="output directory")
    sub = p.add_subparsers(dest="group", required=True)

    def group(name, help_):
        g = sub.add_parser(name, help=help_)
        return g.add_subparsers(dest="action", required=True)

    h = group("hermite", "Hermite function values")
    c = h.add_parser("eval")
    c.add_argument("--n", required=True, help="order(s), comma separated")
    c.add_argument("--x", required=True, help="point(s), comma separated")
    c.set_defaults(func=cmd_hermite_eval, name="hermite_eval")

    g = group("langer", "Langer leading-term audit")
    c = g.add_parser("audit")
    c.add_argument("--n-list", default="100,400,1600,6400")
    c.add_argument("--grid", type=int, default=200, help="points per sampled interval")
    c.set_defaults(func=cmd_langer_audit, name="langer_audit")

    g = group("matel", "matrix elements")
    c = g.add_parser("one")
    for flag, typ in (("--k", float), ("--mu", float), ("--m", int), ("--n", int)):
        c.add_argument(flag, type=typ, required=True)
    c.set_defaults(func=cmd_matel_one, name="matel_one")
    c = g.add_parser("sweep")
    c.add_argument("--config", required=True)
    c.set_defaults(func=cmd_matel_sweep, name="matel_sweep")
    c = g.add_parser("decay-fit")
    c.add_argument("--input", required=True, help="CSV written by 'matel sweep'")
    c.set_defaults(func=cmd_matel_decay_fit, name="matel_decay_fit")

    g = group("regions", "region decomposition")
    c = g.add_parser("audit")
    for flag, typ in (("--k", float), ("--mu", float), ("--m", int), ("--n", int)):
        c.add_argument(flag, type=typ, required=True)
    c.set_defaults(func=cmd_regions_audit, name="regions_audit")

    g = group("vdc", "van der Corput checks")
    c = g.add_parser("suite")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--count", type=int, default=1000)
    c.set_defaults(func=cmd_vdc_suite, name="vdc_suite")

    g = group("dioph", "Diophantine conditions")
    c = g.add_parser("check")
    c.add_argument("--nu", required=True)
    c.add_argument("--gamma", type=float, required=True)
    c.add_argument("--tau", type=float, required=True)
    c.add_argument("--K", type=int, default=200)
    c.set_defaults(func=cmd_dioph_check, name="dioph_check")
    c = g.add_parser("measure")
    c.add_argument("--config", required=True)
    c.set_defaults(func=cmd_dioph_measure, name="dioph_measure")

    g = group("melnikov", "second Melnikov condition")
    c = g.add_parser("check")
    c.add_argument("--omega", required=True)
    c.add_argument("--kappa", type=float, required=True)
    c.add_argument("--K", type=int, default=50)
    c.add_argument("--j-range", type=int, default=None)
    c.set_defaults(func=cmd_melnikov_check, name="melnikov_check")

    c = sub.add_parser("simulate", help="forced oscillator run")
    c.add_argument("--config", required=True)
    c.add_argument("--label", default="run")
    c.add_argument("--every", type=int, default=1, help="write every n-th step")
    c.set_defaults(func=cmd_simulate, name="simulate")

    c = sub.add_parser("report", help="summarize CSV outputs")
    c.add_argument("--inputs", nargs="+", required=True)
    c.set_defaults(func=cmd_report, name="report")
    return p


def _params(args):
    skip = {"func", "name"}
    return {k: v for k, v in vars(args).items() if k not in skip}


def argv_from_params(params):
    """Rebuild an argument list from a manifest's ``params`` echo."""
    params = dict(params)
    argv = ["--out", str(params.pop("out"))]
    argv.append(params.pop("group"))
    action = params.pop("action", None)
    if action is not None:
        argv.append(action)
    for key, val in params.items():
        if val is None:
            continue
        argv.append("--" + key.replace("_", "-"))
        if isinstance(val, list):
            argv.extend(str(v) for v in val)
        else:
            argv.append(str(val))
    return argv


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with 2 on bad usage
    started = datetime.now(timezone.utc)
    t0 = time.perf_counter()
    out = args.out
    try:
        os.makedirs(out, exist_ok=True)
        rows, cols, extra, summary, failed = args.func(args, out)
    except (ValueError, KeyError, FileNotFoundError, tomllib.TOMLDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (NumericalFailure, PrecisionLossError, ArithmeticError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    path = os.path.join(out, f"{args.name}.csv")
    write_csv(path, cols, rows)
    manifest = {"command": args.name, "argv": argv, "params": _params(args),
                "version": __version__, "started_at": started.isoformat(),
                "duration_s": time.perf_counter() - t0, "outputs": [path] + extra,
                "summary": summary, "numerical_failures": bool(failed)}
    with open(os.path.join(out, f"{args.name}.manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, default=_json_default)
    return EXIT_NUMERIC if failed else EXIT_OK


def _json_default(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.bool_):
        return bool(v)
    raise TypeError(f"not serializable: {type(v)}")


if __name__ == "__main__":
    sys.exit(main())
