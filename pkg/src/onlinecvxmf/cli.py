"""Command-line front end.

    onlinecvxmf gen       synthetic truncated Gaussian mixture -> CSV + spec sidecar
    onlinecvxmf fit       fit one method -> model JSON, step trace JSONL, metrics JSON
    onlinecvxmf evaluate  recompute metrics for a saved model
    onlinecvxmf bench     wall time and error over a grid of sizes and methods

CSV files hold one sample per row; a trailing ``label`` column is picked up
automatically when the header names it. Exit codes: 0 success, 1 runtime
failure, 2 usage error, 3 resource guard.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .baselines import ResourceGuardError, batch_cvxmf, fit_online_mf
from .core import ModelConfig
from .data import Dataset, MixtureSpec, gen_mixture, random_mixture_spec, read_csv, stream, write_csv
from .metrics import metrics_report
from .online import fit as fit_online

METHODS = ("online-cvxmf", "online-cvxmf-ru", "online-cvxmf-rr", "online-mf", "batch-cvxmf")
BENCH_HEADER = ["method", "n", "seed", "wall_time_s", "l2", "accuracy", "status"]

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, EXIT_GUARD = 0, 1, 2, 3


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# shared helpers


def spec_path_for(data_path) -> Path:
    p = Path(data_path)
    return p.with_name(p.stem + ".spec.json")


def generate(k: int, m: int, n: int, cov: float, seed: int, low=0.0, high=20.0, truncation=3.0):
    """Mixture spec and dataset for one seed; spec and samples use independent streams."""
    spec = random_mixture_spec(k, m, cov, seed=[seed, 0], low=low, high=high, truncation=truncation)
    return spec, gen_mixture(spec, n, seed=[seed, 1])


def load_dataset(path, labels: str = "auto") -> Dataset:
    if labels == "auto":
        with open(path, newline="") as fh:
            first = fh.readline().strip().split(",")
        use = bool(first) and first[-1].strip().lower() == "label"
    else:
        use = labels == "yes"
    return read_csv(path, header="auto", label_column=use)


def load_spec(path) -> Optional[MixtureSpec]:
    p = Path(path)
    if not p.exists():
        return None
    return MixtureSpec.from_dict(json.loads(p.read_text())["spec"])


def build_config(args, m: Optional[int] = None, defaults: Optional[dict] = None) -> ModelConfig:
    """Flags override the --config file, which overrides built-in defaults."""
    d = dict(defaults or {})
    if getattr(args, "config", None):
        d.update(json.loads(Path(args.config).read_text()))
    flag_map = {
        "k": "k",
        "lambda_c": "lambda_c",
        "lam": "lambda",
        "seed": "seed",
        "init_n": "init_sample_count",
        "variant": "variant",
    }
    for attr, key in flag_map.items():
        v = getattr(args, attr, None)
        if v is not None:
            d[key] = v
    method = getattr(args, "method", None)
    if method in ("online-cvxmf-ru", "online-cvxmf-rr"):
        variant = method.rsplit("-", 1)[1]
        if getattr(args, "variant", None) not in (None, variant):
            raise UsageError(f"--method {method} conflicts with --variant {args.variant}")
        d["variant"] = variant
    if "k" not in d:
        raise UsageError("--k is required (directly or through --config)")
    if m is not None:
        d["m"] = m
    try:
        return ModelConfig.from_dict(d)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from exc


@dataclass
class FitOutcome:
    method: str
    config: ModelConfig
    model_doc: dict
    D: np.ndarray
    trace: list = field(default_factory=list)
    wall_time_s: float = 0.0


def run_method(method: str, ds: Dataset, config: ModelConfig, iters: Optional[int] = None,
               order: str = "as-is", timings: bool = False) -> FitOutcome:
    """Fit ``method`` on ``ds``; ``iters`` caps online steps or batch alternations."""
    config = config.with_dim(ds.m)
    tag = None if method.startswith("online-cvxmf") else method
    t0 = time.perf_counter()
    if method.startswith("online-cvxmf"):
        model, reports = fit_online(stream(ds, order, config.seed), config, T=iters)
        wall = time.perf_counter() - t0
        doc, D = model.to_dict(), model.D
    elif method == "online-mf":
        model, reports = fit_online_mf(stream(ds, order, config.seed), config, T=iters)
        wall = time.perf_counter() - t0
        doc, D = model.to_dict(), model.D
    elif method == "batch-cvxmf":
        res = batch_cvxmf(ds.X, config, iters=100 if iters is None else iters)
        wall = time.perf_counter() - t0
        doc, D = res.to_dict(), res.D
        trace = [
            {"t": i, "i_t": None, "l_star": None, "surrogate": float(obj), "alpha_nnz": None,
             "ms_sparse_code": None, "ms_dict_update": None, "method": method}
            for i, obj in enumerate(res.objectives)
        ]
        return FitOutcome(method, config, doc, D, trace, wall)
    else:
        raise UsageError(f"unknown method {method!r}")
    trace = [r.trace_record(timings, tag) for r in reports]
    return FitOutcome(method, config, doc, D, trace, wall)


def evaluate_dictionary(ds: Dataset, D, config: ModelConfig, spec: Optional[MixtureSpec] = None,
                        wall_time_s: Optional[float] = None) -> dict:
    config = config.with_dim(ds.m)
    means = spec.means if spec is not None and spec.means.shape == (D.shape[1], D.shape[0]) else None
    return metrics_report(ds, D, config.lambda_, config.elastic_kappa, labels=ds.labels, means=means,
                          wall_time_s=wall_time_s, settings=config.lasso_settings())


def _dump_json(obj, path):
    Path(path).write_text(json.dumps(obj, indent=None) + "\n")


def _write_jsonl(records, path):
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")


# ---------------------------------------------------------------------------
# commands


def cmd_gen(args) -> int:
    spec, ds = generate(args.k, args.m, args.n, args.cov, args.seed, args.low, args.high, args.truncation)
    write_csv(ds, args.out)
    _dump_json({"spec": spec.to_dict(), "n": args.n, "seed": args.seed, "generator": "truncated_gaussian_mixture"},
               spec_path_for(args.out))
    return EXIT_OK


def cmd_fit(args) -> int:
    ds = load_dataset(args.input, args.labels)
    config = build_config(args, ds.m)
    method = args.method
    out = run_method(method, ds, config, args.iters, args.order, args.timings)
    spec = load_spec(args.spec or spec_path_for(args.input))
    metrics = evaluate_dictionary(ds, out.D, out.config, spec, out.wall_time_s)
    metrics["method"] = method
    if args.out:
        _dump_json(out.model_doc, args.out)
    if args.trace:
        _write_jsonl(out.trace, args.trace)
    if args.metrics:
        _dump_json(metrics, args.metrics)
    if not args.quiet:
        print(json.dumps(metrics))
    return EXIT_OK


def cmd_evaluate(args) -> int:
    doc = json.loads(Path(args.model).read_text())
    config = ModelConfig.from_dict(doc["config"])
    D = np.array(doc["D"], dtype=np.float64)
    ds = load_dataset(args.input, args.labels)
    spec = load_spec(args.spec or spec_path_for(args.input))
    metrics = evaluate_dictionary(ds, D, config, spec)
    metrics["method"] = doc.get("method")
    if args.out:
        _dump_json(metrics, args.out)
    print(json.dumps(metrics))
    return EXIT_OK


def bench_cell(method: str, ds: Dataset, config: ModelConfig, iters=None) -> dict:
    """One (method, n) cell; failures become the row's status instead of raising."""
    row = {"method": method, "n": ds.n, "seed": config.seed, "wall_time_s": None, "l2": None,
           "accuracy": None, "status": "ok"}
    try:
        out = run_method(method, ds, config, iters)
        rep = evaluate_dictionary(ds, out.D, out.config)
        row.update(wall_time_s=out.wall_time_s, l2=rep["l2"], accuracy=rep["accuracy"])
    except ResourceGuardError as exc:
        row["status"] = f"guard: {exc}"
    except (ValueError, RuntimeError, FloatingPointError) as exc:
        row["status"] = f"error: {exc}"
    return row


def _parse_list(text, conv, what):
    try:
        vals = [conv(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"bad {what} list {text!r}") from exc
    if not vals:
        raise UsageError(f"empty {what} list")
    return vals


def cmd_bench(args) -> int:
    sizes = _parse_list(args.sizes, lambda s: int(float(s)), "size")
    methods = _parse_list(args.methods, str.strip, "method")
    for mth in methods:
        if mth not in METHODS:
            raise UsageError(f"unknown method {mth!r}; choose from {', '.join(METHODS)}")
    args.method = None
    config = build_config(args, defaults={"k": 5})
    with open(args.out, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=BENCH_HEADER)
        writer.writeheader()
        fh.flush()
        for n in sizes:
            _, ds = generate(config.k, args.m, n, args.cov, config.seed)
            for mth in methods:
                cfg = config
                if mth in ("online-cvxmf-ru", "online-cvxmf-rr"):
                    cfg = ModelConfig.from_dict({**config.to_dict(), "variant": mth.rsplit("-", 1)[1]})
                row = bench_cell(mth, ds, cfg, args.iters)
                writer.writerow({k: ("" if v is None else v) for k, v in row.items()})
                fh.flush()
                if not args.quiet:
                    print(f"{mth:>16} n={n:<8d} {row['status'][:60]:<10} "
                          f"t={row['wall_time_s'] if row['wall_time_s'] is not None else float('nan'):.3f}s",
                          file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def _add_model_flags(p, with_method=True):
    if with_method:
        p.add_argument("--method", choices=METHODS, default="online-cvxmf")
    p.add_argument("--variant", choices=("ru", "rr"), default=None)
    p.add_argument("--k", type=int, default=None, help="number of bases")
    p.add_argument("--lambda-c", dest="lambda_c", type=float, default=None, help="lambda = c / sqrt(m) (default c=0.2)")
    p.add_argument("--lambda", dest="lam", type=float, default=None, help="explicit lambda; overrides --lambda-c")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--init-n", dest="init_n", type=int, default=None, help="initialization buffer size N (default 150)")
    p.add_argument("--iters", type=int, default=None, help="online steps after initialization, or batch alternations")
    p.add_argument("--config", default=None, help="JSON file with ModelConfig fields; flags take precedence")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="onlinecvxmf", description="Online convex matrix factorization.")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a truncated Gaussian mixture dataset")
    g.add_argument("--k", type=int, required=True)
    g.add_argument("--m", type=int, required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--cov", type=float, default=1.0, help="covariance multiplier of the identity (2.5 for overlapping clusters)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--low", type=float, default=0.0)
    g.add_argument("--high", type=float, default=20.0)
    g.add_argument("--truncation", type=float, default=3.0, help="rejection radius in units of sigma")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    f = sub.add_parser("fit", help="fit a dictionary")
    f.add_argument("--in", dest="input", required=True, help="dataset CSV, one sample per row")
    _add_model_flags(f)
    f.add_argument("--order", choices=("as-is", "shuffled"), default="as-is")
    f.add_argument("--labels", choices=("auto", "yes", "no"), default="auto")
    f.add_argument("--spec", default=None, help="mixture spec sidecar for basis recovery (default: next to --in)")
    f.add_argument("--out", default=None, help="model JSON")
    f.add_argument("--trace", default=None, help="step trace JSONL")
    f.add_argument("--metrics", default=None, help="metrics JSON")
    f.add_argument("--timings", action="store_true", help="record per-phase milliseconds in the trace")
    f.add_argument("--quiet", action="store_true")
    f.set_defaults(func=cmd_fit)

    e = sub.add_parser("evaluate", help="metrics of a saved model on a dataset")
    e.add_argument("--model", required=True)
    e.add_argument("--in", dest="input", required=True)
    e.add_argument("--labels", choices=("auto", "yes", "no"), default="auto")
    e.add_argument("--spec", default=None)
    e.add_argument("--out", default=None)
    e.set_defaults(func=cmd_evaluate)

    b = sub.add_parser("bench", help="wall time and l2 error over sizes and methods")
    b.add_argument("--sizes", default="1000,10000,100000")
    b.add_argument("--methods", default="online-cvxmf-rr,online-mf,batch-cvxmf")
    _add_model_flags(b, with_method=False)
    b.add_argument("--m", type=int, default=10)
    b.add_argument("--cov", type=float, default=1.0)
    b.add_argument("--out", required=True, help="bench CSV")
    b.add_argument("--quiet", action="store_true")
    b.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"onlinecvxmf: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ResourceGuardError as exc:
        print(f"onlinecvxmf: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (OSError, ValueError, RuntimeError, KeyError) as exc:
        print(f"onlinecvxmf: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
