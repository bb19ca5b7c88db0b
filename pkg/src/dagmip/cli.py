"""Command-line interface: generate, superstructure, fit, eval, bench, oracle.

Every command is a function of its input files, flags and seeds. With
``--deterministic`` wall-clock timings are left out of all outputs, so
re-running a command reproduces its files byte for byte.

Exit codes: 0 success, 2 time limit reached, 3 invalid input, 4 I/O error.
"""

import argparse
import configparser
import csv
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .evaluation import evaluate, mean_sd
from .model import (
    PAPER_VARIANCES,
    PAPER_WEIGHTS,
    Dag,
    EdgeSet,
    FileFormatError,
    generate_data,
    moral_graph,
    random_dag,
    random_sem,
    read_dataset,
    read_edge_list,
    rho_interval,
    sample_covariance,
    write_dataset,
    write_edge_list,
    write_sem,
)
from .pipeline import fit
from .scoring import MAX_ENUM_NODES, brute_force_optimum
from .solver.bnb import OPTIMAL, TIME_LIMIT, SolveConfig, gap_target, write_event_log
from .superstructure import GlassoConfig, estimate_superstructure

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_TIME_LIMIT = 2
EXIT_INVALID = 3
EXIT_IO = 4

WORKERS_ENV = "DAGMIP_WORKERS"

PRESETS = {
    "paper-6.2": {"weights": PAPER_WEIGHTS, "variances": "paper", "n": 500},
    "rho-sweep": {"weights": PAPER_WEIGHTS, "variances": "rho", "n": 100},
}

GAP_MODES = ("exact", "theorem1", "theorem2", "custom")


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage, which is our time-limit code
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


# --- small parsers ------------------------------------------------------------

def parse_floats(text):
    return tuple(float(v) for v in str(text).replace(",", " ").split())


def parse_ints(text):
    """``"0-29"``, ``"1, 3, 5"`` or a mix of both."""
    out = []
    for part in str(text).replace(",", " ").split():
        lo, sep, hi = part.partition("-")
        if sep and lo:
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


def parse_variances(text, rho=None):
    """``paper``, ``rho`` (needs ``rho``), ``lo:hi`` or a list of values."""
    text = str(text).strip()
    if text == "paper":
        return PAPER_VARIANCES
    if text == "rho":
        if rho is None:
            raise UsageError("variances 'rho' needs a rho value")
        return rho_interval(float(rho))
    if ":" in text:
        lo, hi = text.split(":")
        return ("interval", float(lo), float(hi))
    return parse_floats(text)


def parse_gap(spec):
    """``mode`` or ``mode*factor`` where factor is a number or ``m``.

    ``theorem1*m`` is the ``m lambda^2 s-bar`` target of the early
    stopping experiment. ``custom`` takes its value after an ``=``
    (``custom=0.5``).
    """
    spec = spec.strip()
    factor = "1"
    if "*" in spec:
        spec, factor = (p.strip() for p in spec.split("*", 1))
    tau = None
    if spec.startswith("custom"):
        if "=" not in spec:
            raise UsageError("custom gap mode needs a value, e.g. custom=0.5")
        spec, tau = spec.split("=", 1)
        tau = float(tau)
    if spec not in GAP_MODES:
        raise UsageError(f"unknown gap mode {spec!r}; expected one of {GAP_MODES}")
    if factor != "m":
        factor = float(factor)
    return spec, tau, factor


def gap_rule(spec, m):
    """``lambda_sq -> absolute target`` for a gap specification."""
    mode, tau, factor = parse_gap(spec)
    scale = m if factor == "m" else factor
    return lambda lambda_sq: scale * gap_target(mode, lambda_sq, m, tau)


def worker_count(requested, deterministic):
    if deterministic:
        return 1
    n = max(1, int(requested))
    cap = os.environ.get(WORKERS_ENV)
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            raise UsageError(f"{WORKERS_ENV} must be an integer, got {cap!r}") from None
    return n


def read_config(path):
    """Key-value file; a leading section header is optional."""
    text = Path(path).read_text()
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    if not text.lstrip().startswith("["):
        text = "[suite]\n" + text
    try:
        cp.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise UsageError(f"{path}: {exc}") from None
    merged = {}
    for section in cp.sections():
        merged.update(cp[section])
    return merged


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _write_json(path, doc):
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _out_dir(path):
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


# --- generate -------------------------------------------------------------------

def cmd_generate(args):
    settings = {}
    if args.config:
        settings.update(read_config(args.config))
    for key in ("preset", "graph", "m", "edges", "n", "seed", "weights", "variances", "rho",
                "noise", "exponent"):
        val = getattr(args, key)
        if val is not None:
            settings[key] = val
    preset = PRESETS.get(settings.get("preset", "paper-6.2"))
    if preset is None:
        raise UsageError(f"unknown preset {settings['preset']!r}; expected one of {sorted(PRESETS)}")
    if "seed" not in settings:
        raise UsageError("a seed is required")
    seed = int(settings["seed"])
    if "graph" in settings:
        dag = read_edge_list(settings["graph"])
    else:
        m = int(settings.get("m", 10))
        dag = random_dag(m, int(settings.get("edges", m)), seed=seed)
    weights = parse_floats(settings["weights"]) if "weights" in settings else preset["weights"]
    variances = parse_variances(settings.get("variances", preset["variances"]), settings.get("rho"))
    n = int(settings.get("n", preset["n"]))
    noise = settings.get("noise", "gaussian")
    exponent = float(settings["exponent"]) if settings.get("exponent") is not None else None
    sem = random_sem(dag, weights, variances, seed=seed)
    data = generate_data(sem, n, seed=seed, noise=noise, exponent=exponent)

    out = _out_dir(args.out)
    write_dataset(out / "data.csv", data)
    write_edge_list(out / "truth.txt", dag.m, dag.edges)
    write_sem(out / "sem.json", sem)
    print(f"wrote {n} samples of {dag.m} variables ({len(dag)} true edges) to {out}")
    return EXIT_OK


# --- superstructure ---------------------------------------------------------------

def _glasso_cfg(args):
    return GlassoConfig(lambda_glasso_sq=args.lambda_glasso_sq, threshold_tau=args.threshold)


def cmd_superstructure(args):
    data = read_dataset(args.data)
    if args.standardize:
        data = data.standardized()
    E = estimate_superstructure(data, _glasso_cfg(args))
    write_edge_list(args.out, E.m, E.pairs)
    print(f"{len(E) // 2} undirected pairs written to {args.out}")
    return EXIT_OK


# --- fit ---------------------------------------------------------------------

def _resolve_source(args, m):
    src = args.superstructure
    if src in ("estimate", "true-moral"):
        return src
    E = read_edge_list(src, acyclic=False)
    if E.m != m:
        raise UsageError(f"superstructure {src} has {E.m} nodes, data has {m}")
    return E.symmetrized()


def _solve_config(args, deterministic):
    return SolveConfig(
        time_limit_secs=args.time_limit,
        relaxation=args.relaxation,
        deterministic=deterministic,
        worker_count=worker_count(args.workers, deterministic),
    )


def cmd_fit(args):
    data = read_dataset(args.data)
    truth = read_edge_list(args.truth) if args.truth else None
    if args.superstructure == "true-moral" and truth is None:
        raise UsageError("--superstructure true-moral needs --truth")
    source = _resolve_source(args, data.m)
    cfg = _solve_config(args, args.deterministic)
    if args.lambda_sq is not None and args.c is not None:
        raise UsageError("give at most one of --lambda-sq and --c")
    lambda_sq = args.lambda_sq
    if args.c is not None:
        lambda_sq = args.c ** 2 * math.log(data.m) / data.n
    result = fit(
        data, superstructure=source, lambda_sq=lambda_sq, cfg=cfg, truth=truth,
        glasso=_glasso_cfg(args), standardize=args.standardize,
        gap_mode=gap_rule(args.gap, data.m),
    )
    timings = not args.deterministic
    out = _out_dir(args.out)
    doc = result.to_dict(timings)
    doc["gap_mode"] = args.gap
    if truth is not None:
        doc["metrics"] = evaluate(truth, result.dag)
    _write_json(out / "report.json", doc)
    write_edge_list(out / "edges.txt", data.m, result.dag.edges)
    write_edge_list(out / "superstructure.txt", data.m, result.superstructure.pairs)
    write_event_log(result.report, out / "events.csv", timings)
    rep = result.report
    print(f"{rep.status}: objective {rep.upper_bound:.10g}, gap {rep.gap:.3g}, "
          f"{rep.nodes_explored} nodes, {len(result.dag)} edges, lambda^2 {result.lambda_sq:.5g}")
    return EXIT_TIME_LIMIT if not result.all_optimal else EXIT_OK


# --- eval --------------------------------------------------------------------

METRIC_FIELDS = ("d_cpdag", "scaled_d_cpdag", "shd_skeleton", "tpr", "fpr")


def _read_dag(path):
    return read_edge_list(path, acyclic=True)


def cmd_eval(args):
    if args.batch:
        pairs = []
        base = Path(args.batch).parent
        with open(args.batch) as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                parts = line.split()
                if len(parts) != 2:
                    raise FileFormatError(args.batch, lineno, "expected 'truth estimate'")
                pairs.append(tuple(base / p for p in parts))
    else:
        if not (args.truth and args.estimate):
            raise UsageError("give TRUTH and ESTIMATE, or --batch")
        pairs = [(Path(args.truth), Path(args.estimate))]
    rows = []
    for t, e in pairs:
        row = {"truth": str(t), "estimate": str(e)}
        row.update(evaluate(_read_dag(t), _read_dag(e)))
        rows.append(row)
    key = "scaled_d_cpdag" if args.scaled else "d_cpdag"
    if args.format == "json":
        doc = {"runs": rows}
        if len(rows) > 1:
            doc["aggregate"] = {f: mean_sd([r[f] for r in rows]) for f in METRIC_FIELDS}
        print(json.dumps(doc, indent=2, sort_keys=True))
    else:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(("truth", "estimate") + METRIC_FIELDS)
        for r in rows:
            w.writerow([r["truth"], r["estimate"]] + [repr(r[f]) for f in METRIC_FIELDS])
        if len(rows) > 1:
            w.writerow(["mean±sd", ""] + [mean_sd([r[f] for r in rows]) for f in METRIC_FIELDS])
    if len(rows) > 1:
        print(f"{key}: {mean_sd([r[key] for r in rows])}", file=sys.stderr)
    return EXIT_OK


# --- bench -------------------------------------------------------------------

BENCH_DEFAULTS = {
    "name": "bench",
    "m": "10",
    "n": "100",
    "edges": "m",
    "seeds": "0",
    "weights": "-0.8, -0.6, 0.6, 0.8",
    "variances": "paper",
    "rho": "",
    "noise": "gaussian",
    "exponent": "",
    "superstructure": "estimate",
    "lambda": "bic",
    "gap_modes": "exact",
    "time_limit": "",
    "relaxation": "parent-set",
}

RUN_FIELDS = (
    "key", "m", "rho", "seed", "gap_mode", "gap_target", "c", "lambda_sq", "status",
    "objective", "lower_bound", "gap", "rgap", "nodes_explored", "oa_cuts",
    "n_true_edges", "superstructure_pairs", "d_cpdag", "scaled_d_cpdag", "shd_skeleton",
    "tpr", "fpr", "wall_secs", "error",
)


def bench_runs(suite):
    """Cross product of the suite's instances, seeds and gap modes, sorted by key."""
    cfg = dict(BENCH_DEFAULTS)
    cfg.update({k.replace("-", "_"): v for k, v in suite.items()})
    unknown = set(cfg) - set(BENCH_DEFAULTS)
    if unknown:
        raise UsageError(f"unknown suite keys: {sorted(unknown)}")
    ms = parse_ints(cfg["m"])
    rhos = parse_floats(cfg["rho"]) if cfg["rho"].strip() else (None,)
    if cfg["variances"].strip() == "rho" and rhos == (None,):
        raise UsageError("variances = rho needs a rho list")
    gaps = [g.strip() for g in cfg["gap_modes"].split(",") if g.strip()]
    for g in gaps:
        parse_gap(g)
    runs = []
    for m in ms:
        for rho in rhos:
            for seed in parse_ints(cfg["seeds"]):
                for g in gaps:
                    key = f"m{m}" + (f"_rho{rho:g}" if rho is not None else "") + f"_s{seed}_{g}"
                    key = key.replace("*", "x").replace("=", "")
                    runs.append(dict(cfg, m=m, rho=rho, seed=seed, gap=g, key=key))
    runs.sort(key=lambda r: (r["m"], r["rho"] if r["rho"] is not None else -1, r["seed"], r["gap"]))
    return runs


def _bench_one(run, events_dir, timings):
    row = {f: "" for f in RUN_FIELDS}
    row.update(key=run["key"], m=run["m"], rho="" if run["rho"] is None else run["rho"],
               seed=run["seed"], gap_mode=run["gap"])
    try:
        m, seed = run["m"], run["seed"]
        n_edges = m if run["edges"].strip() == "m" else int(run["edges"])
        dag = random_dag(m, n_edges, seed=seed)
        variances = parse_variances(run["variances"], run["rho"])
        sem = random_sem(dag, parse_floats(run["weights"]), variances, seed=seed)
        exponent = float(run["exponent"]) if run["exponent"].strip() else None
        data = generate_data(sem, int(run["n"]), seed=seed, noise=run["noise"], exponent=exponent)
        limit = float(run["time_limit"]) if run["time_limit"].strip() else None
        cfg = SolveConfig(time_limit_secs=limit, relaxation=run["relaxation"].strip())
        lam = run["lambda"].strip()
        lambda_sq = c = None
        if lam.startswith("c="):
            c = float(lam[2:])
            lambda_sq = c ** 2 * math.log(m) / data.n
        elif lam.startswith("lambda_sq="):
            lambda_sq = float(lam[len("lambda_sq="):])
        elif lam != "bic":
            raise UsageError(f"lambda must be 'bic', 'c=<value>' or 'lambda_sq=<value>', got {lam!r}")
        rule = gap_rule(run["gap"], m)
        res = fit(data, superstructure=run["superstructure"].strip(), lambda_sq=lambda_sq,
                  cfg=cfg, truth=dag, gap_mode=rule)
        rep = res.report
        row.update(
            gap_target=rep.gap_target, c=res.c if res.c is not None else ("" if c is None else c), lambda_sq=res.lambda_sq,
            status=rep.status, objective=rep.upper_bound, lower_bound=rep.lower_bound,
            gap=rep.gap, rgap=rep.rgap, nodes_explored=rep.nodes_explored, oa_cuts=rep.oa_cuts,
            n_true_edges=len(dag), superstructure_pairs=len(res.superstructure) // 2,
            wall_secs=sum(r.wall_secs for r in res.reports.values()) if timings else "",
        )
        row.update(evaluate(dag, res.dag))
        write_event_log(rep, Path(events_dir) / f"{run['key']}.csv", timings)
    except Exception as exc:  # noqa: BLE001 - a failed run is recorded, the suite continues
        log.warning("run %s failed: %s", run["key"], exc)
        row.update(status="error", error=f"{type(exc).__name__}: {exc}")
    return row


def _fmt(v):
    return repr(v) if isinstance(v, float) else str(v)


def aggregate(rows, timings=True):
    """One row per (m, rho, gap mode): counts, raw means and ``mean±sd`` strings."""
    groups = {}
    for r in rows:
        groups.setdefault((r["m"], str(r["rho"]), r["gap_mode"]), []).append(r)
    out = []
    for (m, rho, g), rs in sorted(groups.items(), key=lambda kv: (kv[0][0], kv[0][1], kv[0][2])):
        ok = [r for r in rs if r["status"] not in ("error", "")]
        rec = {"m": m, "rho": rho, "gap_mode": g, "runs": len(rs),
               "finished": sum(r["status"] != TIME_LIMIT for r in ok),
               "errors": len(rs) - len(ok)}
        for f in ("d_cpdag", "scaled_d_cpdag", "rgap", "nodes_explored") + (("wall_secs",) if timings else ()):
            vals = [float(r[f]) for r in ok if r[f] != "" and math.isfinite(float(r[f]))]
            rec[f + "_mean"] = float(np.mean(vals)) if vals else float("nan")
            rec[f + "_sd"] = float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0
            rec[f] = mean_sd(vals)
        out.append(rec)
    return out


def cmd_bench(args):
    suite = read_config(args.suite)
    runs = bench_runs(suite)
    out = _out_dir(args.out)
    events = _out_dir(out / "events")
    timings = not args.deterministic
    workers = worker_count(args.workers, args.deterministic)
    log.info("%d runs on %d worker(s)", len(runs), workers)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_bench_one, runs, [events] * len(runs), [timings] * len(runs)))
    else:
        rows = [_bench_one(r, events, timings) for r in runs]
    rows.sort(key=lambda r: r["key"])
    fields = [f for f in RUN_FIELDS if timings or f != "wall_secs"]
    with open(out / "runs.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(fields)
        for r in rows:
            w.writerow([_fmt(r[f]) for f in fields])
    agg = aggregate(rows, timings)
    if agg:
        with open(out / "aggregate.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(list(agg[0]))
            for rec in agg:
                w.writerow([_fmt(v) for v in rec.values()])
    for rec in agg:
        print(f"m={rec['m']} rho={rec['rho'] or '-'} gap={rec['gap_mode']}: "
              f"d_cpdag {rec['d_cpdag']}, finished {rec['finished']}/{rec['runs']}")
    failed = sum(r["status"] == "error" for r in rows)
    if failed:
        print(f"{failed} run(s) failed; see the error column of runs.csv", file=sys.stderr)
    return EXIT_OK


# --- oracle ------------------------------------------------------------------

def cmd_oracle(args):
    data = read_dataset(args.data)
    if data.m > MAX_ENUM_NODES:
        raise UsageError(f"oracle enumerates DAGs only up to m = {MAX_ENUM_NODES}, got {data.m}")
    S = sample_covariance(data)
    restrict = None
    if args.superstructure:
        E = read_edge_list(args.superstructure, acyclic=False)
        if E.m != data.m:
            raise UsageError(f"superstructure has {E.m} nodes, data has {data.m}")
        restrict = E.symmetrized()
    best = brute_force_optimum(S, args.lambda_sq, restrict)
    out = _out_dir(args.out)
    doc = dict(best.to_dict(), status=OPTIMAL, lambda_sq=args.lambda_sq)
    _write_json(out / "oracle.json", doc)
    write_edge_list(out / "edges.txt", data.m, best.dag.edges)
    print(f"optimum {best.objective:.10g} with {len(best.dag)} edges")
    return EXIT_OK


# --- entry point ---------------------------------------------------------------

def _add_solver_args(p):
    p.add_argument("--time-limit", type=float, default=None,
                   help="seconds per solve (default 50*m)")
    p.add_argument("--relaxation", choices=("parent-set", "perspective"), default="parent-set")
    p.add_argument("--workers", type=int, default=1, help=f"worker cap (also capped by ${WORKERS_ENV})")
    p.add_argument("--deterministic", action="store_true",
                   help="single worker, no timings in outputs")


def _add_glasso_args(p):
    p.add_argument("--lambda-glasso-sq", type=float, default=None, help="default log(m)/n")
    p.add_argument("--threshold", type=float, default=0.1, help="support threshold on |Theta_ij|")
    p.add_argument("--standardize", action="store_true", help="scale columns to unit variance first")


def build_parser():
    parser = _Parser(prog="dagmip", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help="simulate a dataset from a random or given DAG")
    p.add_argument("--config", help="key-value file with any of the options below")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--graph", help="edge-list file for the true DAG (overrides --m/--edges)")
    p.add_argument("--m", type=int)
    p.add_argument("--edges", type=int, help="number of edges (default m)")
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--weights", help="comma-separated weight set")
    p.add_argument("--variances", help="'paper', 'rho', 'lo:hi' or a comma-separated set")
    p.add_argument("--rho", type=float)
    p.add_argument("--noise", choices=("gaussian", "power"))
    p.add_argument("--exponent", type=float, help="power-noise exponent")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("superstructure", help="graphical-lasso superstructure")
    p.add_argument("data")
    p.add_argument("--out", required=True, help="edge-list file to write")
    _add_glasso_args(p)
    p.set_defaults(func=cmd_superstructure)

    p = sub.add_parser("fit", help="learn a DAG")
    p.add_argument("data")
    p.add_argument("--superstructure", default="estimate",
                   help="'estimate', 'true-moral' or an edge-list file")
    p.add_argument("--truth", help="true DAG edge list (for true-moral and metrics)")
    p.add_argument("--lambda-sq", type=float, help="fixed lambda^2 (default: BIC over the c grid)")
    p.add_argument("--c", type=float, help="fixed lambda^2 = c^2 log(m)/n")
    p.add_argument("--gap", default="exact",
                   help="exact, theorem1, theorem2, custom=<tau>, optionally '*<factor>' or '*m'")
    p.add_argument("--out", required=True, help="output directory")
    _add_solver_args(p)
    _add_glasso_args(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("eval", help="compare estimated and true DAGs")
    p.add_argument("truth", nargs="?")
    p.add_argument("estimate", nargs="?")
    p.add_argument("--batch", help="file with one 'truth estimate' pair per line")
    p.add_argument("--scaled", action="store_true", help="summarize d_cpdag scaled by true edges")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="run a benchmark suite")
    p.add_argument("suite", help="key-value suite file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--deterministic", action="store_true")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("oracle", help=f"brute-force optimum (m <= {MAX_ENUM_NODES})")
    p.add_argument("data")
    p.add_argument("--lambda-sq", type=float, required=True)
    p.add_argument("--superstructure", help="optional edge-list restriction")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
