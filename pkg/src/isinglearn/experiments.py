"""Experiment harness: metrics, benchmark protocols, reproducible CSVs.

Three protocols are provided.  The structure experiment measures edge
precision/recall and parameter error across sample sizes and coupling
strengths; the likelihood experiment adds held-out surrogate
log-likelihood (evaluated both under the fit's own final cuts and with
no cuts); the rate experiment measures ||theta_n - theta_ref||_2 against
a near-unpenalized fit on exact moments and reports the log-log slope
versus n.

Every cell (xi, n, replicate) owns a seed derived deterministically from
the base seed and the cell indices; the seed is written into its rows so
any row can be re-run in isolation.  Repeating a config reproduces
results.csv byte-identically except for wall-time columns.
"""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .exact import exact_mean_parameters
from .model import (
    IsingModel,
    edge_set,
    model_payload,
    parameter_vector,
)
from .pseudolikelihood import fit_pseudo, symmetrize
from .solver import (
    SolverConfig,
    auto_lambda,
    fit,
    surrogate_loglik,
    write_fit_result,
)
from .synthetic import (
    Dataset,
    GraphSpec,
    SamplerConfig,
    assign_parameters,
    empirical_means,
    gibbs_sample,
    make_graph,
)

__all__ = [
    "Metrics",
    "ExperimentConfig",
    "precision_recall",
    "run_structure_experiment",
    "run_likelihood_experiment",
    "run_rate_experiment",
    "run_experiment",
    "load_experiment_config",
    "run_single_cell",
]

METHODS = ("logdet-cut", "logdet", "pl-min", "pl-max")


@dataclass
class Metrics:
    """Per-fit evaluation record; NaN entries are accompanied by flags."""

    precision: float
    recall: float
    edge_count: int
    l2_param_error: float
    cuts_added: int
    wall_time: float
    test_surrogate_loglik: float | None = None
    test_surrogate_loglik_nocuts: float | None = None
    flags: str = ""


def precision_recall(estimated_edges, true_edges) -> tuple[float, float]:
    """Edge precision |E_hat & E|/|E_hat| and recall |E_hat & E|/|E|.

    An empty estimated (resp. true) set makes precision (resp. recall)
    NaN; callers flag those rows.
    """
    est = set(estimated_edges)
    true = set(true_edges)
    inter = len(est & true)
    precision = inter / len(est) if est else math.nan
    recall = inter / len(true) if true else math.nan
    return precision, recall


@dataclass
class ExperimentConfig:
    """Declarative experiment description.

    lam is either the string "auto" (2 sqrt(log p / n)) or an explicit
    level applied at every n.  test_n sizes held-out sets for likelihood
    runs and defaults to the train size.  solver holds SolverConfig
    overrides applied to every log-det fit.
    """

    experiment: str
    graph: GraphSpec
    xi_list: list[float]
    n_list: list[int]
    lam: float | str = "auto"
    methods: tuple[str, ...] = METHODS
    replicates: int = 10
    base_seed: int = 0
    burn_in: int = 1000
    thin: int = 5
    edge_tol: float = 1e-4
    test_n: int | None = None
    workers: int = 1
    outdir: str | None = None
    save_fits: bool = False
    solver: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.experiment not in ("structure", "likelihood", "rate"):
            raise ValueError(f"unknown experiment {self.experiment!r}")
        if not self.xi_list or not self.n_list:
            raise ValueError("xi_list and n_list must be nonempty")
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        self.methods = tuple(self.methods)
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ValueError(f"unknown methods {sorted(unknown)}; valid: {METHODS}")
        if isinstance(self.lam, str) and self.lam != "auto":
            raise ValueError(f"lam must be 'auto' or a number, got {self.lam!r}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


def load_experiment_config(path) -> ExperimentConfig:
    """Read an experiment config file (JSON mirroring ExperimentConfig)."""
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    return config_from_payload(payload)


def config_from_payload(payload: dict) -> ExperimentConfig:
    try:
        graph = GraphSpec(**payload["graph"])
        return ExperimentConfig(
            experiment=payload["experiment"],
            graph=graph,
            xi_list=list(payload["xi"]),
            n_list=list(payload["n"]),
            lam=payload.get("lambda", "auto"),
            methods=tuple(payload.get("methods", METHODS)),
            replicates=int(payload.get("replicates", 10)),
            base_seed=int(payload.get("base_seed", 0)),
            burn_in=int(payload.get("burn_in", 1000)),
            thin=int(payload.get("thin", 5)),
            edge_tol=float(payload.get("edge_tol", 1e-4)),
            test_n=payload.get("test_n"),
            workers=int(payload.get("workers", 1)),
            outdir=payload.get("outdir"),
            save_fits=bool(payload.get("save_fits", False)),
            solver=dict(payload.get("solver", {})),
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed experiment config: {exc}") from exc


def config_payload(cfg: ExperimentConfig) -> dict:
    payload = asdict(cfg)
    payload["xi"] = payload.pop("xi_list")
    payload["n"] = payload.pop("n_list")
    payload["lambda"] = payload.pop("lam")
    payload["methods"] = list(payload["methods"])
    return payload


def cell_seed(base_seed: int, xi_index: int, n_index: int, replicate: int) -> int:
    """Deterministic 64-bit seed for one experiment cell."""
    ss = np.random.SeedSequence(base_seed, spawn_key=(xi_index, n_index, replicate))
    return int(ss.generate_state(1, np.uint64)[0])


def _cell_streams(seed: int) -> tuple[int, int, int, int]:
    """Graph, parameter, train-chain, and test-chain seeds for one cell."""
    state = np.random.SeedSequence(seed).generate_state(4, np.uint64)
    return tuple(int(s) for s in state)


def _solver_config(cfg: ExperimentConfig, lam: float) -> SolverConfig:
    return SolverConfig(lam=lam, edge_tol=cfg.edge_tol, **cfg.solver)


def _fit_method(
    method: str,
    eta_hat,
    data: Dataset,
    lam: float,
    cfg: ExperimentConfig,
):
    """Dispatch one method; returns (model, cuts, cuts_added, rounds, result)."""
    if method == "logdet-cut":
        res = fit(eta_hat, _solver_config(cfg, lam), separate_cuts=True)
        return res.model, res.cuts, len(res.cuts), res.rounds, res
    if method == "logdet":
        res = fit(eta_hat, _solver_config(cfg, lam), separate_cuts=False)
        return res.model, [], 0, res.rounds, res
    mode = "min" if method == "pl-min" else "max"
    est = fit_pseudo(data, lam)
    model = symmetrize(est, mode=mode, edge_tol=cfg.edge_tol)
    return model, [], 0, 0, None


def run_single_cell(
    cfg: ExperimentConfig,
    xi: float,
    n: int,
    replicate: int,
    seed: int,
) -> list[dict]:
    """Generate one cell's data and evaluate every configured method.

    The cell is fully determined by (cfg, xi, n, replicate, seed); rows
    carry all five so they can be reproduced independently.
    """
    s_graph, s_param, s_train, s_test = _cell_streams(seed)
    edges = make_graph(cfg.graph, s_graph)
    truth = assign_parameters(edges, cfg.graph.p, xi, s_param)
    train = gibbs_sample(
        truth, SamplerConfig(n=n, burn_in=cfg.burn_in, thin=cfg.thin, seed=s_train)
    )
    eta_hat = empirical_means(train)
    lam = auto_lambda(cfg.graph.p, n) if cfg.lam == "auto" else float(cfg.lam)
    true_edges = edge_set(truth, tol=0.0)
    theta_true = parameter_vector(truth)

    eta_test = None
    if cfg.experiment == "likelihood":
        test = gibbs_sample(
            truth,
            SamplerConfig(
                n=cfg.test_n or n, burn_in=cfg.burn_in, thin=cfg.thin, seed=s_test
            ),
        )
        eta_test = empirical_means(test)

    rows = []
    for method in cfg.methods:
        t0 = time.perf_counter()
        row = {
            "method": method,
            "p": cfg.graph.p,
            "n": n,
            "xi": xi,
            "replicate": replicate,
            "seed": seed,
            "lambda": lam,
        }
        try:
            model, cuts, cuts_added, rounds, res = _fit_method(
                method, eta_hat, train, lam, cfg
            )
            if cfg.save_fits and cfg.outdir is not None:
                _save_cell_fit(cfg, method, xi, n, replicate, lam, model, res)
            est_edges = edge_set(model, cfg.edge_tol)
            precision, recall = precision_recall(est_edges, true_edges)
            flags = []
            if not est_edges:
                flags.append("empty_estimate")
            if not true_edges:
                flags.append("empty_truth")
            row.update(
                precision=precision,
                recall=recall,
                edge_count=len(est_edges),
                l2_param_error=float(
                    np.linalg.norm(parameter_vector(model) - theta_true)
                ),
                cuts_added=cuts_added,
                rounds=rounds,
                flags=";".join(flags),
            )
            if eta_test is not None:
                row["train_surrogate_loglik"] = surrogate_loglik(model, eta_hat, cuts)
                row["test_surrogate_loglik"] = surrogate_loglik(model, eta_test, cuts)
                row["test_surrogate_loglik_nocuts"] = surrogate_loglik(
                    model, eta_test, ()
                )
        except Exception as exc:  # noqa: BLE001 - per-cell failures become rows
            row.update(flags=f"error:{type(exc).__name__}:{exc}")
        row["wall_time"] = time.perf_counter() - t0
        rows.append(row)
    return rows


def _save_cell_fit(cfg, method, xi, n, replicate, lam, model, res) -> None:
    """Optional per-cell fit files under <outdir>/fits/."""
    fits_dir = Path(cfg.outdir) / "fits"
    fits_dir.mkdir(parents=True, exist_ok=True)
    path = fits_dir / f"{method}_xi{xi}_n{n}_rep{replicate}.json"
    if res is not None:
        write_fit_result(path, res, method, _solver_config(cfg, lam))
    else:
        payload = {
            "method": method,
            "lambda": lam,
            "penalty_scale": "coupling",
            "model": model_payload(model),
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=1)
            fh.write("\n")


_STRUCTURE_COLUMNS = [
    "method", "p", "n", "xi", "replicate", "seed", "lambda",
    "precision", "recall", "edge_count", "l2_param_error",
    "cuts_added", "rounds", "flags", "wall_time",
]
_LIKELIHOOD_COLUMNS = [
    "method", "p", "n", "xi", "replicate", "seed", "lambda",
    "precision", "recall", "edge_count", "l2_param_error",
    "train_surrogate_loglik", "test_surrogate_loglik",
    "test_surrogate_loglik_nocuts",
    "cuts_added", "rounds", "flags", "wall_time",
]
_RATE_COLUMNS = [
    "method", "p", "n", "xi", "replicate", "seed", "lambda",
    "l2_ref_error", "edge_count", "cuts_added", "rounds", "flags", "wall_time",
]


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path, rows, columns) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format_cell(row.get(col)) for col in columns])


def _write_manifest(outdir: Path, cfg: ExperimentConfig, extra: dict | None = None):
    from . import __version__
    import scipy

    manifest = {
        "config": config_payload(cfg),
        "package_version": __version__,
        "numpy_version": np.__version__,
        "scipy_version": scipy.__version__,
    }
    if extra:
        manifest.update(extra)
    with open(outdir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1)
        fh.write("\n")


def _cells(cfg: ExperimentConfig):
    for xi_index, xi in enumerate(cfg.xi_list):
        for n_index, n in enumerate(cfg.n_list):
            for replicate in range(cfg.replicates):
                yield xi, n, replicate, cell_seed(
                    cfg.base_seed, xi_index, n_index, replicate
                )


def _cell_worker(args):
    cfg, xi, n, replicate, seed = args
    return run_single_cell(cfg, xi, n, replicate, seed)


def _run_cells(cfg: ExperimentConfig) -> list[dict]:
    tasks = [(cfg, xi, n, rep, seed) for xi, n, rep, seed in _cells(cfg)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            chunks = list(pool.map(_cell_worker, tasks))
    else:
        chunks = [_cell_worker(task) for task in tasks]
    return [row for chunk in chunks for row in chunk]


def _finalize(cfg, rows, columns, outdir, extra=None):
    if outdir is not None:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        _write_csv(outdir / "results.csv", rows, columns)
        _write_manifest(outdir, cfg, extra)
    return rows


def run_structure_experiment(cfg: ExperimentConfig, outdir=None) -> list[dict]:
    """Edge-recovery protocol: one row per (cell, method) with precision,
    recall, edge count, parameter error, and cut diagnostics."""
    if cfg.experiment != "structure":
        raise ValueError(f"config is for {cfg.experiment!r}, expected 'structure'")
    rows = _run_cells(cfg)
    return _finalize(cfg, rows, _STRUCTURE_COLUMNS, outdir or cfg.outdir)


def run_likelihood_experiment(cfg: ExperimentConfig, outdir=None) -> list[dict]:
    """Held-out surrogate log-likelihood protocol; emits both the
    own-final-cuts and the no-cut evaluation per fitted model."""
    if cfg.experiment != "likelihood":
        raise ValueError(f"config is for {cfg.experiment!r}, expected 'likelihood'")
    rows = _run_cells(cfg)
    return _finalize(cfg, rows, _LIKELIHOOD_COLUMNS, outdir or cfg.outdir)


def run_rate_experiment(cfg: ExperimentConfig, outdir=None) -> dict:
    """Error-decay protocol against a reference fit on exact moments.

    The true model (p at most the exact-oracle limit) is drawn once from
    the base seed.  The reference estimate is a near-unpenalized
    cutting-plane fit on the exact mean parameters; each cell fits on
    sampled data at lambda_n = 2 sqrt(log p / n) and records
    ||theta_n - theta_ref||_2.  Returns rows, per-n medians, and the
    fitted log-log slope.
    """
    if cfg.experiment != "rate":
        raise ValueError(f"config is for {cfg.experiment!r}, expected 'rate'")
    method = cfg.methods[0]
    if method not in ("logdet-cut", "logdet"):
        raise ValueError("rate experiment needs a log-det method first in methods")
    xi = cfg.xi_list[0]

    root = np.random.SeedSequence(cfg.base_seed).generate_state(2, np.uint64)
    edges = make_graph(cfg.graph, int(root[0]))
    truth = assign_parameters(edges, cfg.graph.p, xi, int(root[1]))
    eta_exact = exact_mean_parameters(truth)
    ref_cfg = _solver_config(cfg, 1e-6)
    ref = fit(eta_exact, ref_cfg, separate_cuts=(method == "logdet-cut"))
    theta_ref = parameter_vector(ref.model)

    rows = []
    for n_index, n in enumerate(cfg.n_list):
        for replicate in range(cfg.replicates):
            seed = cell_seed(cfg.base_seed, 0, n_index, replicate)
            _, _, s_train, _ = _cell_streams(seed)
            train = gibbs_sample(
                truth,
                SamplerConfig(n=n, burn_in=cfg.burn_in, thin=cfg.thin, seed=s_train),
            )
            eta_hat = empirical_means(train)
            lam = auto_lambda(cfg.graph.p, n) if cfg.lam == "auto" else float(cfg.lam)
            t0 = time.perf_counter()
            row = {
                "method": method,
                "p": cfg.graph.p,
                "n": n,
                "xi": xi,
                "replicate": replicate,
                "seed": seed,
                "lambda": lam,
            }
            try:
                res = fit(
                    eta_hat,
                    _solver_config(cfg, lam),
                    separate_cuts=(method == "logdet-cut"),
                )
                row.update(
                    l2_ref_error=float(
                        np.linalg.norm(parameter_vector(res.model) - theta_ref)
                    ),
                    edge_count=len(edge_set(res.model, cfg.edge_tol)),
                    cuts_added=len(res.cuts),
                    rounds=res.rounds,
                    flags="",
                )
            except Exception as exc:  # noqa: BLE001
                row.update(flags=f"error:{type(exc).__name__}:{exc}")
            row["wall_time"] = time.perf_counter() - t0
            rows.append(row)

    medians = []
    for n in cfg.n_list:
        errs = [
            row["l2_ref_error"]
            for row in rows
            if row["n"] == n and "l2_ref_error" in row
        ]
        medians.append((n, float(np.median(errs)) if errs else math.nan))
    usable = [(n, e) for n, e in medians if math.isfinite(e) and e > 0]
    slope = math.nan
    if len(usable) >= 2:
        slope = float(
            np.polyfit(
                np.log([n for n, _ in usable]), np.log([e for _, e in usable]), 1
            )[0]
        )

    out = outdir or cfg.outdir
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        _write_csv(out / "results.csv", rows, _RATE_COLUMNS)
        _write_csv(
            out / "summary.csv",
            [{"n": n, "median_l2_ref_error": e} for n, e in medians],
            ["n", "median_l2_ref_error"],
        )
        _write_manifest(out, cfg, extra={"rate_slope": slope})
    return {"rows": rows, "medians": medians, "slope": slope}


def run_experiment(cfg: ExperimentConfig, outdir=None):
    """Dispatch on cfg.experiment; writes results into the output directory."""
    if cfg.experiment == "structure":
        return run_structure_experiment(cfg, outdir)
    if cfg.experiment == "likelihood":
        return run_likelihood_experiment(cfg, outdir)
    return run_rate_experiment(cfg, outdir)
