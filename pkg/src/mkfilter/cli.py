"""Command-line entry point: ``mkfilter <command> [options]``.

Commands
--------
screen       omega_hat and rank of every feature of a dataset
fdr-select   split-based threshold selection
simulate     synthetic screening / FDR study
pool-build   manifest of all q x q principal submatrices of whole covariances
classify     k-NN on selected features over repeated train/test splits

Exit status is 0 on success, 2 when the configuration or the input data is
invalid (one diagnostic line per problem on stderr) and 1 on any other
failure.  Reports are written to a temporary file and renamed, so a failed
run never leaves a partial report behind.
"""
import argparse
import datetime
import json
import logging
import math
import os
import shutil
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .exceptions import MKFilterError
from .knn import STRATEGIES, KnnConfig, evaluate_split
from .metrics import KIND_METRICS
from .mks import screen_all
from .pool import (
    ColumnSpec,
    DatasetManifest,
    atomic_write,
    build_submatrix_pool,
    fmt,
    load_dataset,
    read_csv,
)
from .select import fdr_select, top_s
from .simgen import SimulationConfig, run_simulation

log = logging.getLogger("mkfilter")

# options that change speed or destination but never report content
_NOT_IN_CONFIG = ("threads", "out", "verbose", "func")


class UsageProblems(Exception):
    def __init__(self, problems):
        super().__init__("; ".join(problems))
        self.problems = problems


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def resolved_config(args):
    cfg = {k: v for k, v in vars(args).items() if k not in _NOT_IN_CONFIG}
    cfg["version"] = __version__
    return cfg


def write_json(path, doc):
    doc = dict(doc)
    doc["generated_at"] = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")
    atomic_write(path, json.dumps(_jsonable(doc), indent=1, sort_keys=True) + "\n")


def write_table(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(v) if isinstance(v, float) else str(v) for v in row))
    atomic_write(path, "\n".join(lines) + "\n")


# --- commands ---------------------------------------------------------------

def cmd_screen(args):
    ds = load_dataset(args.manifest)
    log.info("loaded n=%d p=%d", ds.n, ds.p)
    res = screen_all(ds, threads=args.threads)
    log.info("screened %d features", ds.p)
    rank = np.empty(ds.p, dtype=int)
    rank[res.ranking] = np.arange(1, ds.p + 1)
    if args.format == "csv":
        write_table(args.out, ("feature_index", "omega_hat", "rank"),
                    ((j, float(res.omega_hat[j]), int(rank[j])) for j in range(ds.p)))
    else:
        write_json(args.out, {
            "config": resolved_config(args),
            "n": res.n, "n_pos": res.n_pos, "n_neg": res.n_neg,
            "omega_hat": res.omega_hat, "rank": rank, "ranking": res.ranking,
            "top_s": top_s(res, args.s),
        })


def cmd_fdr_select(args):
    ds = load_dataset(args.manifest)
    log.info("loaded n=%d p=%d", ds.n, ds.p)
    sel = fdr_select(ds, alpha=args.alpha, K=args.K, gamma=args.gamma, seed=args.seed, threads=args.threads)
    log.info("threshold %s, %d selected", sel.threshold, sel.selected.size)
    st = sel.stats
    if args.format == "csv":
        chosen = set(sel.selected.tolist())
        write_table(args.out, ("feature_index", "omega1", "omega2", "W", "selected"),
                    ((j, float(st.omega1[j]), float(st.omega2[j]), float(st.W[j]), int(j in chosen))
                     for j in range(ds.p)))
    else:
        write_json(args.out, {
            "config": resolved_config(args),
            "threshold": sel.threshold, "selected": sel.selected, "W": st.W,
            "omega1": st.omega1, "omega2": st.omega2, "n1": st.n1, "n2": st.n2,
        })


def cmd_simulate(args):
    cfg = SimulationConfig(
        scenario=args.scenario, p=args.p, n=args.n, m=args.m, spd_dim=args.spd_dim,
        metric=args.metric, alpha=args.alpha, replicates=args.replicates, seed=args.seed,
        K=args.K, gamma=args.gamma, s=args.s)
    log.info("simulating %d replicates", cfg.replicates)
    report = run_simulation(cfg, threads=args.threads).to_dict()
    if args.format == "csv":
        rows = []
        for r in report["per_replicate"]:
            rows.append((r["replicate"], r["mms"],
                         float(r["fdp"]) if "fdp" in r else "",
                         float(r["threshold"]) if "threshold" in r else "",
                         len(r["selected"]) if "selected" in r else ""))
        write_table(args.out, ("replicate", "mms", "fdp", "threshold", "n_selected"), rows)
    else:
        report["config"] = dict(report["config"], command=args.command, version=__version__)
        write_json(args.out, report)


def cmd_pool_build(args):
    meta, rows = read_csv(args.covariances, expect_kind="spd")
    _, label_rows = read_csv(args.labels, expect_kind="labels")
    R = meta["m"]
    covs = np.array(rows).reshape(len(rows), R, R)
    labels = np.array([r[0] for r in label_rows], dtype=int)
    ds, pool = build_submatrix_pool(covs, labels, args.q, args.metric)
    log.info("pool of %d submatrix features over %d subjects", len(pool), ds.n)
    out = Path(args.out)
    base = out.parent
    base.mkdir(parents=True, exist_ok=True)
    cov_name, lab_name = "covariances.csv", "labels.csv"
    for src, name in ((args.covariances, cov_name), (args.labels, lab_name)):
        dst = base / name
        if not dst.exists() or not os.path.samefile(src, dst):
            tmp = base / f".{name}.tmp"
            shutil.copyfile(src, tmp)
            os.replace(tmp, dst)
    metric = ds.columns[0].metric.value
    specs = [ColumnSpec("spd", metric, cov_name, regions) for regions in pool.index_map]
    write_table(base / "index_map.csv", ("feature_index",) + tuple(f"region{i}" for i in range(args.q)),
                ((j,) + regions for j, regions in enumerate(pool.index_map)))
    atomic_write(out, DatasetManifest(ds.n, len(pool), lab_name, specs).to_json())


def _selected_from(args):
    if args.selected is not None:
        try:
            return tuple(int(v) for v in args.selected.split(",") if v.strip())
        except ValueError:
            raise UsageProblems([f"--selected must be comma-separated integers, got {args.selected!r}"]) from None
    try:
        doc = json.loads(Path(args.selection).read_text())
        return tuple(int(j) for j in doc["selected"])
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise UsageProblems([f"cannot read selected features from {args.selection}: {exc}"]) from None


def cmd_classify(args):
    selected = _selected_from(args)
    ds = load_dataset(args.manifest)
    bad = [j for j in selected if not 0 <= j < ds.p]
    if bad:
        raise UsageProblems([f"selected feature {j} outside [0, {ds.p})" for j in bad])
    cfg = KnnConfig(args.k, args.strategy, selected, args.tie_label)
    out = evaluate_split(ds, cfg, args.train_fraction, args.seed, args.replicates, args.threads)
    log.info("classified %d replicates", args.replicates)
    if args.format == "csv":
        keys = ("accuracy", "recall", "f1", "tp", "fp", "tn", "fn")
        write_table(args.out, ("replicate",) + keys,
                    ((i,) + tuple(r[k] for k in keys) for i, r in enumerate(out["replicates"])))
    else:
        config = resolved_config(args)
        config["selected"] = list(selected)
        write_json(args.out, dict(out, config=config))


# --- parsing ----------------------------------------------------------------

def _default_threads():
    return os.environ.get("MKFILTER_THREADS", "1")


def build_parser():
    p = argparse.ArgumentParser(prog="mkfilter", description="Metric KS feature screening.")
    p.add_argument("--version", action="version", version=f"mkfilter {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, fmt_default="json"):
        sp.add_argument("--out", required=True, help="report path")
        sp.add_argument("--format", choices=("json", "csv"), default=fmt_default)
        sp.add_argument("--threads", default=None,
                        help="worker threads (default: $MKFILTER_THREADS or 1)")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("-v", "--verbose", action="store_true", help="log one line per stage")

    def fdr_opts(sp, alpha_default):
        sp.add_argument("--alpha", type=float, default=alpha_default)
        sp.add_argument("--K", type=int, default=3)
        sp.add_argument("--gamma", type=float, default=0.5)

    sp = sub.add_parser("screen", help="omega_hat and ranking of every feature")
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--s", type=int, default=None, help="model size (default floor(n/ln n))")
    common(sp, "csv")
    sp.set_defaults(func=cmd_screen)

    sp = sub.add_parser("fdr-select", help="split-based FDR threshold selection")
    sp.add_argument("--manifest", required=True)
    fdr_opts(sp, 0.1)
    common(sp)
    sp.set_defaults(func=cmd_fdr_select)

    sp = sub.add_parser("simulate", help="synthetic screening study")
    sp.add_argument("--scenario", choices=("distributional", "spd"), required=True)
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--m", type=int, default=20, help="draws per distribution")
    sp.add_argument("--spd-dim", type=int, default=3, choices=(3, 5))
    sp.add_argument("--metric", default=None)
    sp.add_argument("--replicates", type=int, default=100)
    sp.add_argument("--s", type=int, default=None)
    fdr_opts(sp, None)
    common(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("pool-build", help="submatrix feature pool from whole covariances")
    sp.add_argument("--covariances", required=True, help="spd CSV of R x R matrices")
    sp.add_argument("--labels", required=True, help="labels CSV")
    sp.add_argument("--q", type=int, required=True)
    sp.add_argument("--metric", default="log_cholesky")
    sp.add_argument("--out", required=True, help="manifest path; data files go beside it")
    sp.add_argument("--threads", default=None, help=argparse.SUPPRESS)
    sp.add_argument("-v", "--verbose", action="store_true")
    sp.set_defaults(func=cmd_pool_build)

    sp = sub.add_parser("classify", help="k-NN over selected features")
    sp.add_argument("--manifest", required=True)
    grp = sp.add_mutually_exclusive_group(required=True)
    grp.add_argument("--selected", help="comma-separated feature indices")
    grp.add_argument("--selection", help="fdr-select JSON report")
    sp.add_argument("--k", type=int, default=3)
    sp.add_argument("--strategy", choices=STRATEGIES, default="merging")
    sp.add_argument("--tie-label", type=int, choices=(1, -1), default=-1)
    sp.add_argument("--train-fraction", type=float, default=0.7)
    sp.add_argument("--replicates", type=int, default=400)
    common(sp)
    sp.set_defaults(func=cmd_classify)
    return p


def validate(args):
    """Range checks on the parsed flags; returns a list of problems."""
    problems = []
    raw = args.threads if args.threads is not None else _default_threads()
    try:
        args.threads = int(raw)
        if args.threads < 1:
            raise ValueError
    except ValueError:
        problems.append(f"threads must be a positive integer, got {raw!r}")
    alpha = getattr(args, "alpha", None)
    if alpha is not None and not 0 < alpha < 1:
        problems.append(f"--alpha must lie in (0, 1), got {alpha}")
    if getattr(args, "K", 3) < 3:
        problems.append(f"--K must be at least 3, got {args.K}")
    gamma = getattr(args, "gamma", 1.0)
    if not gamma > 0:
        problems.append(f"--gamma must be positive, got {gamma}")
    if getattr(args, "s", None) is not None and args.s < 1:
        problems.append(f"--s must be positive, got {args.s}")
    if getattr(args, "k", 1) < 1:
        problems.append(f"--k must be positive, got {args.k}")
    if getattr(args, "replicates", 1) < 1:
        problems.append(f"--replicates must be positive, got {args.replicates}")
    tf = getattr(args, "train_fraction", 0.5)
    if not 0 < tf < 1:
        problems.append(f"--train-fraction must lie in (0, 1), got {tf}")
    if getattr(args, "seed", 0) < 0:
        problems.append(f"--seed must be non-negative, got {args.seed}")
    metric = getattr(args, "metric", None)
    if metric is not None:
        kind = "distribution" if getattr(args, "scenario", "spd") == "distributional" else "spd"
        allowed = sorted(m.value for m in KIND_METRICS[kind])
        if metric not in allowed:
            problems.append(f"--metric must be one of {allowed} here, got {metric!r}")
    if args.command == "pool-build" and args.q < 2:
        problems.append(f"--q must be at least 2, got {args.q}")
    return problems


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="mkfilter: %(message)s", stream=sys.stderr)
    problems = validate(args)
    if problems:
        for msg in problems:
            print(f"mkfilter {args.command}: error: {msg}", file=sys.stderr)
        return 2
    try:
        args.func(args)
    except UsageProblems as exc:
        for msg in exc.problems:
            print(f"mkfilter {args.command}: error: {msg}", file=sys.stderr)
        return 2
    except MKFilterError as exc:
        print(f"mkfilter {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"mkfilter {args.command}: failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
