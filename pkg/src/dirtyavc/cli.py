"""Command-line front end: ``dirtyavc <subcommand> [--config FILE] [flags]``.

Exit status: 0 on success, 2 on a validation error (bad config, flag or
input file), 3 on a resource error (codebook or grid too large).
"""
import argparse
import csv
import io
import json
import math
import os
import platform
import sys
import time
import warnings

import numpy as np
import scipy
import yaml

from . import __version__, analysis, discrete, montecarlo
from .channel import GAUSSIAN_METHOD, derive_constants
from .codec import CodeConfig
from .config import build_config, set_key
from .errors import ConfigError, DirtyAVCError, ResourceError

SEED_ENV = "DIRTYAVC_SEED"
EXIT_OK, EXIT_VALIDATION, EXIT_RESOURCE = 0, 2, 3
VERIFY_TARGETS = ("lemma1", "lemma2", "lemma3", "lemma4", "lemma5", "fvw")


# Output helpers --------------------------------------------------------------

def _table_csv(rows, columns):
    buf = io.StringIO()
    buf.write(f"# dirtyavc table schema v{montecarlo.SCHEMA_VERSION}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([repr(r[c]) if isinstance(r[c], float) else str(r[c]) for c in columns])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items() if k != "samples"}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def _versions():
    return {"dirtyavc": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__, "pyyaml": yaml.__version__}


# Experiments -----------------------------------------------------------------
# Each returns (csv_text or None, report dict, summary lines).

def _workers(cfg):
    return cfg.workers or os.cpu_count() or 1


def _simulate(cfg):
    p = cfg.params
    R = cfg.message_rate()
    rt = cfg.code["R_tilde"]
    if rt is None:
        rt = montecarlo.default_binning_rate(p, R)
    code = CodeConfig(R=R, R_tilde=rt, delta0=cfg.code["delta0"], params=p,
                      max_codewords=cfg.code["max_codewords"], max_bytes=cfg.code["max_bytes"])
    rows = [montecarlo.estimate_max_error(
        code, strat, cfg.trials, seed=cfg.master_seed, mode=cfg.code["mode"],
        messages=cfg.code["messages"], codebook_every=cfg.code["codebook_every"],
        cell=i, workers=_workers(cfg)) for i, strat in enumerate(cfg.strategies())]
    res = montecarlo.SweepResult(rows)
    lines = [f"{r.jammer}: max error {r.error_rate:.4f} [{r.ci_low:.4f}, {r.ci_high:.4f}]"
             for r in rows]
    return res.to_csv(), {"rows": [montecarlo.row_dict(r) for r in rows]}, lines


def _sweep_rates(cfg):
    if cfg.sweep["rates"] is not None:
        return [float(r) for r in cfg.sweep["rates"]]
    C = derive_constants(cfg.params).C
    return [float(f) * C for f in cfg.sweep["R_over_C"]]


def _sweep(cfg):
    rates = _sweep_rates(cfg)
    res = montecarlo.rate_sweep(
        cfg.params, rates, cfg.sweep["n_list"], cfg.strategies(), cfg.trials,
        R_tilde=cfg.code["R_tilde"], delta0=cfg.code["delta0"], seed=cfg.master_seed,
        mode=cfg.code["mode"], messages=cfg.code["messages"],
        codebook_every=cfg.code["codebook_every"], max_codewords=cfg.code["max_codewords"],
        max_bytes=cfg.code["max_bytes"], workers=_workers(cfg))
    trends = []
    if len(cfg.sweep["n_list"]) > 1:
        for R in rates:
            for strat in cfg.strategies():
                t = montecarlo.error_trend(res, R, strat.label, seed=cfg.master_seed)
                trends.append({"R": R, "jammer": strat.label, **t})
    lines = [f"R={r.R:.4f} n={r.n} {r.jammer}: max error {r.error_rate:.4f}" for r in res.rows]
    lines += [f"trend R={t['R']:.4f} {t['jammer']}: {'pass' if t['passed'] else 'FAIL'}" for t in trends]
    return res.to_csv(), {"rows": [montecarlo.row_dict(r) for r in res.rows], "trends": trends}, lines


def _lemma1(cfg):
    v = cfg.verify
    Ct = derive_constants(cfg.params).C_tilde
    rts = [Ct + off for off in v["R_tilde_offsets"]]
    rep = montecarlo.verify_lemma1(cfg.params, rts, v["n_list"], cfg.code["delta0"], cfg.trials,
                                   seed=cfg.master_seed)
    cols = ("R_tilde", "n", "mode", "count", "trials", "rate", "ci_low", "ci_high")
    lines = [f"R_tilde={r['R_tilde']:.4f} n={r['n']}: success {r['rate']:.4f}" for r in rep["rows"]]
    return _table_csv(rep["rows"], cols), rep, lines


def _lemma2(cfg):
    v = cfg.verify
    rep = montecarlo.verify_lemma2(cfg.params, cfg.strategies(), v["n_list"], cfg.trials,
                                   delta=v["delta"], R_tilde=cfg.code["R_tilde"],
                                   delta0=cfg.code["delta0"], seed=cfg.master_seed)
    rows = [{"jammer": s["jammer"], **r} for s in rep["strategies"] for r in s["rows"]]
    cols = ("jammer", "n", "mean", "max", "freq_above_delta", "encode_failures", "scale_bound")
    lines = [f"{s['jammer']}: decrease {'pass' if s['decrease_passed'] else 'FAIL'}"
             for s in rep["strategies"]]
    return _table_csv(rows, cols), rep, lines


def _lemma3(cfg):
    v = cfg.verify
    pairs = v["lemma3_pairs"]
    rows = []
    for i, (n, g) in enumerate(pairs):
        rows += montecarlo.verify_lemma3([int(n)], [float(g)], v["draws"],
                                         seed=cfg.master_seed + i)["rows"]
    rep = {"rows": rows, "passed": all(r["passed"] for r in rows)}
    cols = ("n", "gamma", "draws", "tail", "bound", "se", "passed")
    lines = [f"n={r['n']} gamma={r['gamma']}: tail {r['tail']:.3e} <= bound {r['bound']:.3e}: "
             f"{'pass' if r['passed'] else 'FAIL'}" for r in rows]
    return _table_csv(rows, cols), rep, lines


def _lemma4(cfg):
    v = cfg.verify
    rep = montecarlo.verify_lemma4(cfg.params, cfg.strategies(), v["n_list"], v["delta"], cfg.trials,
                                   R_tilde=cfg.code["R_tilde"], delta0=v["lemma4_delta0"],
                                   seed=cfg.master_seed)
    rows = [{"jammer": s["jammer"], **r} for s in rep["strategies"] for r in s["rows"]]
    cols = ("jammer", "n", "violation_freq", "mean_corr", "sd_corr", "f_vw_share", "f_vw_min")
    lines = [f"{r['jammer']} n={r['n']}: violation {r['violation_freq']:.4f}" for r in rows]
    return _table_csv(rows, cols), rep, lines


def _lemma5(cfg):
    v = cfg.verify
    reps = montecarlo.verify_lemma5([tuple(p) for p in v["a_pairs"]], v["n_max"])
    rows = [{k: r[k] for k in ("a1", "a2", "limit", "n_max", "final")} for r in reps]
    lines = [f"a1={r['a1']} a2={r['a2']}: value {r['final']:.3e} (limit {r['limit']})" for r in rows]
    return _table_csv(rows, ("a1", "a2", "limit", "n_max", "final")), {"pairs": reps}, lines


def _fvw(cfg):
    v = cfg.verify
    rep = analysis.f_claim_sweep(cfg.params, v["param_draws"], v["grid_resolution"],
                                 seed=cfg.master_seed)
    cols = ("theta", "min_value", "margin", "argmin_V", "argmin_W", "argmin_near_anchor",
            "algebraic_holds", "holds")
    lines = [f"{rep['parameter_sets']} parameter sets: min f - theta = {rep['min_margin']:.3e}, "
             f"all hold: {rep['all_hold']}, argmin at (0, Lam): {rep['all_near_anchor']}"]
    return _table_csv(rep["certificates"], cols), rep, lines


def _discrete(cfg):
    d = cfg.discrete
    if not d["spec"]:
        raise ConfigError(["discrete.spec: a JSON kernel file is required (--spec)"])
    try:
        spec = discrete.DiscreteAvcSpec.from_json(d["spec"])
    except (OSError, KeyError, json.JSONDecodeError) as exc:
        raise ConfigError([f"discrete.spec: cannot read {d['spec']}: {exc}"]) from exc
    res = discrete.solve_capacity(spec, d["outer_grid"], d["inner_grid"], refine=d["refine"])
    rep = {"sizes": spec.sizes, **res.to_dict()}
    row = {"outer_grid": res.outer_grid, "inner_grid": res.inner_grid, "value_bits": res.value,
           "minmax_value_bits": res.minmax_value, "duality_gap_bits": res.duality_gap,
           "refined_value_bits": res.refined_value}
    lines = [f"grid max-min value {res.value:.6f} bits (outer grid {res.outer_grid}, "
             f"inner grid {res.inner_grid}; duality gap {res.duality_gap:.3e})"]
    return _table_csv([row], tuple(row)), rep, lines


def constants_report(params):
    c = derive_constants(params)
    return {
        "alpha": c.alpha, "P_U": c.P_U, "C": c.C, "C_tilde": c.C_tilde, "C_U": c.C_U,
        "theta": c.theta,
        "C_U_minus_sum": c.C_U - (c.C + c.C_tilde),
        "C_U_minus_theta_form": c.C_U - (-0.5 * math.log2(1.0 - c.theta ** 2)),
    }


def _constants(cfg):
    rep = constants_report(cfg.params)
    lines = [f"{k} = {v:.12g}" for k, v in rep.items()]
    return _table_csv([rep], tuple(rep)), rep, lines


EXPERIMENTS = {
    "simulate": _simulate, "sweep": _sweep, "verify-lemma1": _lemma1, "verify-lemma2": _lemma2,
    "verify-lemma3": _lemma3, "verify-lemma4": _lemma4, "verify-lemma5": _lemma5,
    "verify-fvw": _fvw, "discrete": _discrete, "constants": _constants,
}


def dispatch(cfg, out_dir=None, write=True):
    """Run ``cfg.experiment``; write CSV, JSON report and manifest under ``out_dir``.

    Returns ``(report, summary_lines, written_paths)``.
    """
    if cfg.experiment in ("simulate", "sweep") and cfg.trials < 100:
        raise ConfigError([f"trials must be at least 100 for {cfg.experiment} (got {cfg.trials})"])
    t0 = time.perf_counter()
    text, report, lines = EXPERIMENTS[cfg.experiment](cfg)
    wall = time.perf_counter() - t0
    paths = []
    if write:
        out = out_dir or cfg.output["dir"]
        os.makedirs(out, exist_ok=True)
        targets = {
            "csv": (os.path.join(out, cfg.output["csv"]), text),
            "json": (os.path.join(out, cfg.output["json"]),
                     json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n"),
        }
        for path, body in targets.values():
            if body is not None:
                with open(path, "w", newline="") as fh:
                    fh.write(body)
                paths.append(path)
        manifest = {
            "experiment": cfg.experiment,
            "config": cfg.to_dict(),
            "config_sha256": cfg.digest(),
            "master_seed": cfg.master_seed,
            "workers": _workers(cfg),
            "versions": _versions(),
            "gaussian_method": GAUSSIAN_METHOD,
            "csv_schema_version": montecarlo.SCHEMA_VERSION,
            "wall_time_s": wall,
            "outputs": [os.path.basename(p) for p in paths],
        }
        mpath = os.path.join(out, cfg.output["manifest"])
        with open(mpath, "w") as fh:
            json.dump(_jsonable(manifest), fh, indent=2, sort_keys=True)
            fh.write("\n")
        paths.append(mpath)
    return report, lines, paths


# Argument handling -------------------------------------------------------------

def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML run configuration")
    common.add_argument("--seed", type=int, help=f"master seed (default: ${SEED_ENV}, then 0)")
    common.add_argument("--trials", type=int)
    common.add_argument("--workers", type=int, help="worker processes (default: CPU count)")
    common.add_argument("--out-dir", help="directory for CSV, report and manifest")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key, e.g. --set params.P=2 (value parsed as YAML)")
    common.add_argument("--no-write", action="store_true", help="print results only")

    ap = argparse.ArgumentParser(prog="dirtyavc", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"dirtyavc {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    sim = sub.add_parser("simulate", parents=[common], help="error rate at one (R, n)")
    sim.add_argument("--n", type=int)
    sim.add_argument("--rate", type=float, help="message rate in bits/use")
    sim.add_argument("--jammer", action="append", help="jammer name (repeatable)")
    sub.add_parser("sweep", parents=[common], help="factorial rate x n x jammer sweep")
    ver = sub.add_parser("verify", parents=[common], help="numerical checks")
    ver.add_argument("--target", required=True, choices=VERIFY_TARGETS)
    dis = sub.add_parser("discrete", parents=[common], help="grid max-min on a finite-alphabet kernel")
    dis.add_argument("--spec", required=True, help="JSON file with W[x][s][j][y], P_S, aux_size")
    dis.add_argument("--outer-grid", type=int)
    dis.add_argument("--inner-grid", type=int)
    sub.add_parser("constants", parents=[common], help="print the derived constants")
    return ap


def config_from_args(args, environ=None):
    environ = os.environ if environ is None else environ
    data = {}
    if args.config:
        try:
            with open(args.config) as fh:
                data = yaml.safe_load(fh) or {}
        except OSError as exc:
            raise ConfigError([f"cannot read config {args.config}: {exc}"]) from exc
        except yaml.YAMLError as exc:
            raise ConfigError([f"config {args.config} is not valid YAML: {exc}"]) from exc
        if not isinstance(data, dict):
            raise ConfigError(["config top level must be a mapping"])
    if "master_seed" not in data and environ.get(SEED_ENV):
        try:
            data["master_seed"] = int(environ[SEED_ENV])
        except ValueError as exc:
            raise ConfigError([f"{SEED_ENV} must be an integer"]) from exc
    cmd = args.command
    data["experiment"] = f"verify-{args.target}" if cmd == "verify" else cmd
    for item in args.set:
        key, sep, val = item.partition("=")
        if not sep:
            raise ConfigError([f"--set expects KEY=VALUE (got {item!r})"])
        set_key(data, key, yaml.safe_load(val))
    if args.seed is not None:
        data["master_seed"] = args.seed
    if args.trials is not None:
        data["trials"] = args.trials
    if args.workers is not None:
        data["workers"] = args.workers
    if cmd == "simulate":
        if args.n is not None:
            set_key(data, "params.n", args.n)
        if args.rate is not None:
            set_key(data, "code.R", args.rate)
        if args.jammer:
            data["jammers"] = [{"name": j} for j in args.jammer]
    if cmd == "discrete":
        set_key(data, "discrete.spec", args.spec)
        if args.outer_grid is not None:
            set_key(data, "discrete.outer_grid", args.outer_grid)
        if args.inner_grid is not None:
            set_key(data, "discrete.inner_grid", args.inner_grid)
    return build_config(data)


def main(argv=None, environ=None):
    args = _parser().parse_args(argv)
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            cfg = config_from_args(args, environ)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
        if args.command != "constants":
            print("effective config:", file=sys.stderr)
            print(cfg.to_yaml().rstrip(), file=sys.stderr)
        _, lines, paths = dispatch(cfg, out_dir=args.out_dir, write=not args.no_write)
    except ResourceError as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except ConfigError as exc:
        print("validation error:", file=sys.stderr)
        for v in exc.violations:
            print(f"  - {v}", file=sys.stderr)
        return EXIT_VALIDATION
    except (DirtyAVCError, ValueError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    for line in lines:
        print(line)
    for p in paths:
        print(f"wrote {p}", file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
