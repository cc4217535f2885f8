"""Synthetic benchmark generation: graphs, parameters, Gibbs sampling.

Three graph families are supported: the 4-nearest-neighbor grid, sparse
random graphs with an optional degree cap, and disjoint dense blocks
(cliques) joined by random cross edges.  Node fields are drawn uniformly
from [-1, 1] and couplings uniformly from [-xi, xi].  Sampling uses a
single systematic-sweep Gibbs chain with burn-in and thinning.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import IsingModel, MeanVector, model_digest, pair_count

__all__ = [
    "GraphSpec",
    "SamplerConfig",
    "Dataset",
    "make_graph",
    "assign_parameters",
    "gibbs_sample",
    "empirical_means",
    "save_samples",
    "load_samples",
]

_KINDS = ("grid4", "random_sparse", "dense_subgraphs")


@dataclass
class GraphSpec:
    """Declarative description of a benchmark graph.

    kind "grid4" uses rows x cols (p must equal rows * cols); kind
    "random_sparse" draws n_edges distinct pairs, rejecting pairs that
    would push a node past max_degree; kind "dense_subgraphs" builds
    n_blocks disjoint cliques of block_size and then adds uniform random
    cross edges until n_edges edges exist in total.
    """

    kind: str
    p: int
    n_edges: int = 0
    max_degree: int | None = None
    rows: int = 0
    cols: int = 0
    block_size: int = 0
    n_blocks: int = 0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown graph kind {self.kind!r}, expected one of {_KINDS}")
        if self.p < 1:
            raise ValueError(f"p must be >= 1, got {self.p}")
        if self.kind == "grid4":
            if self.rows < 1 or self.cols < 1 or self.rows * self.cols != self.p:
                raise ValueError(
                    f"grid4 needs rows*cols == p, got {self.rows}x{self.cols} vs p={self.p}"
                )
        else:
            if self.n_edges < 0 or self.n_edges > pair_count(self.p):
                raise ValueError(f"n_edges={self.n_edges} infeasible for p={self.p}")
        if self.kind == "dense_subgraphs":
            if self.block_size < 1 or self.n_blocks < 1:
                raise ValueError("dense_subgraphs needs block_size >= 1 and n_blocks >= 1")
            if self.block_size * self.n_blocks > self.p:
                raise ValueError("blocks do not fit into p nodes")
            clique = self.n_blocks * pair_count(self.block_size)
            if clique > self.n_edges:
                raise ValueError(
                    f"n_edges={self.n_edges} smaller than the {clique} clique edges"
                )


@dataclass
class SamplerConfig:
    """Gibbs sampler settings: n kept samples, burn-in sweeps, sweeps
    between kept samples, and the chain seed."""

    n: int
    burn_in: int = 1000
    thin: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.burn_in < 0:
            raise ValueError(f"burn_in must be >= 0, got {self.burn_in}")
        if self.thin < 1:
            raise ValueError(f"thin must be >= 1, got {self.thin}")


@dataclass
class Dataset:
    """n samples of p spins, with generation provenance.

    x has shape (n, p) with entries in {-1, +1} (int8).  The metadata
    records the chain seed, sampler settings, generator name, and a hash
    of the generating model, so a dataset is reproducible within one
    build of the package.
    """

    p: int
    n: int
    x: np.ndarray
    seed: int | None = None
    model_hash: str | None = None
    burn_in: int | None = None
    thin: int | None = None
    generator: str = "numpy-pcg64"

    def __post_init__(self):
        self.x = np.asarray(self.x)
        if self.x.shape != (self.n, self.p):
            raise ValueError(
                f"x must have shape ({self.n}, {self.p}), got {self.x.shape}"
            )
        if not np.all(np.abs(self.x.astype(np.int64)) == 1):
            raise ValueError("every dataset entry must be -1 or +1")
        self.x = self.x.astype(np.int8)


def make_graph(spec: GraphSpec, rng_seed) -> list[tuple[int, int]]:
    """Draw an edge list for the given family; deterministic per seed.

    Returns normalized pairs (u < v) in sorted order.
    """
    rng = np.random.default_rng(rng_seed)
    if spec.kind == "grid4":
        edges = []
        for r in range(spec.rows):
            for c in range(spec.cols):
                v = r * spec.cols + c
                if c + 1 < spec.cols:
                    edges.append((v, v + 1))
                if r + 1 < spec.rows:
                    edges.append((v, v + spec.cols))
        return sorted(edges)

    if spec.kind == "random_sparse":
        cap = spec.max_degree if spec.max_degree is not None else spec.p
        degree = np.zeros(spec.p, dtype=np.int64)
        chosen: set[tuple[int, int]] = set()
        attempts = 0
        limit = 100 * max(spec.n_edges, 1)
        while len(chosen) < spec.n_edges:
            attempts += 1
            if attempts > limit:
                raise ValueError(
                    f"could not place {spec.n_edges} edges under max_degree={cap} "
                    f"after {limit} attempts"
                )
            u = int(rng.integers(spec.p))
            v = int(rng.integers(spec.p))
            if u == v:
                continue
            e = (u, v) if u < v else (v, u)
            if e in chosen or degree[e[0]] >= cap or degree[e[1]] >= cap:
                continue
            chosen.add(e)
            degree[e[0]] += 1
            degree[e[1]] += 1
        return sorted(chosen)

    # dense_subgraphs
    chosen = set()
    for b in range(spec.n_blocks):
        base = b * spec.block_size
        for i in range(spec.block_size):
            for j in range(i + 1, spec.block_size):
                chosen.add((base + i, base + j))
    attempts = 0
    limit = 100 * max(spec.n_edges, 1)
    while len(chosen) < spec.n_edges:
        attempts += 1
        if attempts > limit:
            raise ValueError(
                f"could not place {spec.n_edges} edges after {limit} attempts"
            )
        u = int(rng.integers(spec.p))
        v = int(rng.integers(spec.p))
        if u == v:
            continue
        e = (u, v) if u < v else (v, u)
        if e in chosen:
            continue
        chosen.add(e)
    return sorted(chosen)


def assign_parameters(edges, p: int, xi: float, rng_seed) -> IsingModel:
    """Draw theta_v ~ U[-1, 1] per node and theta_uv ~ U[-xi, xi] per edge.

    Nodes are drawn first (in index order), then edges in sorted order,
    so the draw is reproducible given the seed.
    """
    if xi < 0:
        raise ValueError(f"xi must be >= 0, got {xi}")
    rng = np.random.default_rng(rng_seed)
    node_params = rng.uniform(-1.0, 1.0, size=p)
    edge_params = {}
    for u, v in sorted(tuple(e) for e in edges):
        edge_params[(int(u), int(v))] = float(rng.uniform(-xi, xi))
    seed = rng_seed if isinstance(rng_seed, (int, np.integer)) else None
    return IsingModel(
        p=p,
        node_params=node_params,
        edge_params=edge_params,
        seed=int(seed) if seed is not None else None,
    )


def gibbs_sample(model: IsingModel, cfg: SamplerConfig) -> Dataset:
    """Single-chain Gibbs sampler with systematic sweeps.

    One sweep resamples sites v = 0..p-1 in order, each from
    P(x_v = +1 | rest) = 1 / (1 + exp(-2 (theta_v + sum_u theta_uv x_u))).
    The chain discards burn_in sweeps, then runs thin sweeps before each
    of the n kept samples.
    """
    p = model.p
    rng = np.random.default_rng(cfg.seed)
    neighbors: list[list[tuple[int, float]]] = [[] for _ in range(p)]
    for (u, v), w in model.edge_params.items():
        neighbors[u].append((v, w))
        neighbors[v].append((u, w))
    fields = [float(t) for t in model.node_params]
    x = [1 if s else -1 for s in rng.integers(0, 2, size=p)]

    exp = math.exp

    def sweep():
        u01 = rng.random(p)
        for v in range(p):
            h = fields[v]
            for u, w in neighbors[v]:
                h += w * x[u]
            x[v] = 1 if u01[v] < 1.0 / (1.0 + exp(-2.0 * h)) else -1

    for _ in range(cfg.burn_in):
        sweep()
    out = np.empty((cfg.n, p), dtype=np.int8)
    for i in range(cfg.n):
        for _ in range(cfg.thin):
            sweep()
        out[i] = x
    return Dataset(
        p=p,
        n=cfg.n,
        x=out,
        seed=cfg.seed,
        model_hash=model_digest(model),
        burn_in=cfg.burn_in,
        thin=cfg.thin,
    )


def empirical_means(data: Dataset | np.ndarray) -> MeanVector:
    """Empirical mean vector: column means and columnwise product means."""
    x = np.asarray(getattr(data, "x", data), dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError("dataset must be a nonempty (n, p) array")
    n, p = x.shape
    node_means = x.mean(axis=0)
    second = (x.T @ x) / n
    np.fill_diagonal(second, 0.0)
    second = (second + second.T) / 2.0
    return MeanVector(p=p, node_means=node_means, pair_means=second)


def save_samples(data: Dataset, path) -> None:
    """Write a samples file: a `# p=<p> n=<n> seed=<seed>` header line,
    then one row of space-separated -1/1 tokens per sample."""
    header_seed = data.seed if data.seed is not None else 0
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# p={data.p} n={data.n} seed={header_seed}\n")
        for row in data.x:
            fh.write(" ".join(str(int(v)) for v in row))
            fh.write("\n")


def load_samples(path) -> Dataset:
    """Read a samples file; accepts -1/1 with or without explicit plus signs."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header.startswith("#"):
            raise ValueError(f"samples file {path} is missing its header line")
        meta = {}
        for token in header.lstrip("#").split():
            if "=" in token:
                key, val = token.split("=", 1)
                meta[key] = int(val)
        try:
            p, n, seed = meta["p"], meta["n"], meta["seed"]
        except KeyError as exc:
            raise ValueError(f"samples header must carry p, n, seed: {header!r}") from exc
        rows = []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            vals = [int(tok) for tok in line.replace("+", "").split()]
            if len(vals) != p:
                raise ValueError(f"row with {len(vals)} values, expected {p}")
            rows.append(vals)
    if len(rows) != n:
        raise ValueError(f"samples file has {len(rows)} rows, header says n={n}")
    x = np.asarray(rows, dtype=np.int8)
    return Dataset(p=p, n=n, x=x, seed=seed)
