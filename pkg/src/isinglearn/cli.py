"""Command line interface.

Subcommands:
  gen         draw a graph and couplings, write a model file
  sample      Gibbs-sample a model, write a samples file
  fit         estimate a model from a samples file, write a fit file
  eval        score a fit file against the truth model and/or held-out samples
  oracle      exact log-partition / mean parameters for small models
  experiment  run a benchmark protocol from a config file

Exit codes: 0 on success, 1 on usage or input errors, 2 on numerical
domain failures (non-PD matrices, oracle size limit, diverged solves).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys

import numpy as np

from .exact import exact_log_partition, exact_mean_parameters
from .experiments import load_experiment_config, run_experiment
from .model import (
    DomainError,
    edge_set,
    iter_pairs,
    load_model,
    model_payload,
    parameter_vector,
    save_model,
)
from .pseudolikelihood import fit_pseudo, symmetrize
from .solver import (
    SolverConfig,
    auto_lambda,
    fit,
    load_fit_file,
    surrogate_loglik,
    write_fit_result,
)
from .synthetic import (
    GraphSpec,
    SamplerConfig,
    assign_parameters,
    empirical_means,
    gibbs_sample,
    load_samples,
    make_graph,
    save_samples,
)

__all__ = ["main", "build_parser"]


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on usage errors; this CLI reserves 2
    for numerical failures, so usage errors exit 1 instead."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _seed_streams(seed: int, count: int) -> tuple[int, ...]:
    state = np.random.SeedSequence(seed).generate_state(count, np.uint64)
    return tuple(int(s) for s in state)


def _cmd_gen(args) -> None:
    rows, cols = args.rows, args.cols
    if args.kind == "grid4" and rows == 0 and cols == 0:
        side = math.isqrt(args.p)
        if side * side == args.p:
            rows = cols = side
    spec = GraphSpec(
        kind=args.kind,
        p=args.p,
        n_edges=args.n_edges,
        max_degree=args.max_degree,
        rows=rows,
        cols=cols,
        block_size=args.block_size,
        n_blocks=args.n_blocks,
    )
    s_graph, s_param = _seed_streams(args.seed, 2)
    edges = make_graph(spec, s_graph)
    model = assign_parameters(edges, args.p, args.xi, s_param)
    save_model(model, args.out)
    print(f"wrote model with p={model.p}, {len(model.edge_params)} edges to {args.out}")


def _cmd_sample(args) -> None:
    model = load_model(args.model)
    data = gibbs_sample(
        model,
        SamplerConfig(n=args.n, burn_in=args.burn_in, thin=args.thin, seed=args.seed),
    )
    save_samples(data, args.out)
    print(f"wrote {data.n} samples of p={data.p} to {args.out}")


def _parse_lambda(text: str, p: int, n: int) -> float:
    if text == "auto":
        return auto_lambda(p, n)
    try:
        lam = float(text)
    except ValueError:
        raise ValueError(f"--lambda must be 'auto' or a number, got {text!r}") from None
    if lam < 0:
        raise ValueError("--lambda must be nonnegative")
    return lam


def _cmd_fit(args) -> None:
    data = load_samples(args.samples)
    lam = _parse_lambda(args.lam, data.p, data.n)
    if args.method in ("logdet-cut", "logdet"):
        cfg = SolverConfig(
            lam=lam, max_outer_rounds=args.max_rounds, edge_tol=args.edge_tol
        )
        res = fit(
            empirical_means(data), cfg, separate_cuts=(args.method == "logdet-cut")
        )
        write_fit_result(args.out, res, args.method, cfg, seed=args.seed)
        print(
            f"method={args.method} lambda={lam:.6g} rounds={res.rounds} "
            f"cuts={len(res.cuts)} objective={res.objective:.6g}"
        )
    else:
        mode = "min" if args.method == "pl-min" else "max"
        est = fit_pseudo(data, lam)
        model = symmetrize(est, mode=mode, edge_tol=args.edge_tol)
        payload = {
            "method": args.method,
            "seed": args.seed,
            "lambda": lam,
            "penalty_scale": "coupling",
            "model": model_payload(model),
            "cuts": [],
        }
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=1)
            fh.write("\n")
        print(
            f"method={args.method} lambda={lam:.6g} "
            f"edges={len(model.edge_params)}"
        )
    print(f"wrote fit to {args.out}")


_EVAL_COLUMNS = [
    "method", "p", "lambda", "precision", "recall", "edge_count",
    "l2_param_error", "test_surrogate_loglik", "test_surrogate_loglik_nocuts",
    "flags",
]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _cmd_eval(args) -> None:
    if args.truth is None and args.test is None:
        raise ValueError("eval needs --truth and/or --test")
    payload = load_fit_file(args.fit)
    model = payload["model"]
    cuts = payload["cut_objects"]
    row = {
        "method": payload.get("method", ""),
        "p": model.p,
        "lambda": payload.get("lambda", ""),
        "edge_count": len(edge_set(model, args.edge_tol)),
        "flags": "",
    }
    flags = []
    if args.truth is not None:
        from .experiments import precision_recall

        truth = load_model(args.truth)
        if truth.p != model.p:
            raise ValueError(f"truth has p={truth.p}, fit has p={model.p}")
        est_edges = edge_set(model, args.edge_tol)
        true_edges = edge_set(truth, tol=0.0)
        precision, recall = precision_recall(est_edges, true_edges)
        if not est_edges:
            flags.append("empty_estimate")
        if not true_edges:
            flags.append("empty_truth")
        row["precision"] = precision
        row["recall"] = recall
        row["l2_param_error"] = float(
            np.linalg.norm(parameter_vector(model) - parameter_vector(truth))
        )
    if args.test is not None:
        test = load_samples(args.test)
        if test.p != model.p:
            raise ValueError(f"test samples have p={test.p}, fit has p={model.p}")
        eta_test = empirical_means(test)
        row["test_surrogate_loglik"] = surrogate_loglik(model, eta_test, cuts)
        row["test_surrogate_loglik_nocuts"] = surrogate_loglik(model, eta_test, ())
    row["flags"] = ";".join(flags)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_EVAL_COLUMNS)
        writer.writerow([_fmt(row.get(col)) for col in _EVAL_COLUMNS])
    print(f"wrote metrics to {args.out}")


def _cmd_oracle(args) -> None:
    if not args.logz and not args.marginals:
        raise ValueError("oracle needs --logz and/or --marginals")
    model = load_model(args.model)
    if args.logz:
        print(f"logz={exact_log_partition(model)!r}")
    if args.marginals:
        eta = exact_mean_parameters(model)
        for v in range(model.p):
            print(f"eta_v_{v}={float(eta.node_means[v])!r}")
        for u, v in iter_pairs(model.p):
            print(f"eta_uv_{u}_{v}={float(eta.pair(u, v))!r}")


def _cmd_experiment(args) -> None:
    cfg = load_experiment_config(args.config)
    outdir = args.outdir or cfg.outdir
    if outdir is None:
        raise ValueError("no output directory: set --outdir or 'outdir' in the config")
    result = run_experiment(cfg, outdir)
    if cfg.experiment == "rate":
        print(f"rate_slope={result['slope']!r}")
    print(f"wrote {outdir}/results.csv")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="isinglearn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    g = sub.add_parser("gen", help="draw a graph and couplings, write a model file")
    g.add_argument(
        "--kind",
        required=True,
        choices=["grid4", "random_sparse", "dense_subgraphs"],
    )
    g.add_argument("--p", type=int, required=True)
    g.add_argument("--xi", type=float, required=True, help="coupling range (+/- xi)")
    g.add_argument("--n-edges", type=int, default=0)
    g.add_argument("--max-degree", type=int, default=None)
    g.add_argument("--rows", type=int, default=0, help="grid rows (default: square)")
    g.add_argument("--cols", type=int, default=0)
    g.add_argument("--block-size", type=int, default=0)
    g.add_argument("--n-blocks", type=int, default=0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=_cmd_gen)

    s = sub.add_parser("sample", help="Gibbs-sample a model into a samples file")
    s.add_argument("--model", required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--burn-in", type=int, default=1000)
    s.add_argument("--thin", type=int, default=5)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_sample)

    f = sub.add_parser("fit", help="estimate a model from samples")
    f.add_argument("--samples", required=True)
    f.add_argument(
        "--method",
        default="logdet-cut",
        choices=["logdet-cut", "logdet", "pl-min", "pl-max"],
    )
    f.add_argument("--lambda", dest="lam", default="auto", metavar="auto|FLOAT")
    f.add_argument("--max-rounds", type=int, default=10)
    f.add_argument("--edge-tol", type=float, default=1e-4)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--out", required=True)
    f.set_defaults(func=_cmd_fit)

    e = sub.add_parser("eval", help="score a fit against truth and/or test samples")
    e.add_argument("--fit", required=True)
    e.add_argument("--truth")
    e.add_argument("--test")
    e.add_argument("--edge-tol", type=float, default=1e-4)
    e.add_argument("--out", required=True)
    e.set_defaults(func=_cmd_eval)

    o = sub.add_parser("oracle", help="exact quantities for small models")
    o.add_argument("--model", required=True)
    o.add_argument("--logz", action="store_true")
    o.add_argument("--marginals", action="store_true")
    o.set_defaults(func=_cmd_oracle)

    x = sub.add_parser("experiment", help="run a benchmark protocol from a config")
    x.add_argument("--config", required=True)
    x.add_argument("--outdir")
    x.set_defaults(func=_cmd_experiment)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    try:
        args.func(args)
        return 0
    except DomainError as exc:
        print(f"isinglearn: numerical error: {exc}", file=sys.stderr)
        return 2
    except np.linalg.LinAlgError as exc:
        print(f"isinglearn: numerical error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, OSError) as exc:
        print(f"isinglearn: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
