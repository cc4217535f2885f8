"""Core representations for binary pairwise Markov random fields.

A model over p spin variables x in {-1,+1}^p is parameterized by node
fields theta_v and edge couplings theta_uv, with

    P(x) proportional to exp( sum_v theta_v x_v + sum_{u<v} theta_uv x_u x_v ).

This module holds the shared data types (parameters, mean vectors,
suspension-graph edge weights), the (p+1)x(p+1) moment-matrix embedding
used throughout the solver, sufficient statistics, and the model file
format.

Matrix index convention: all (p+1)x(p+1) matrices reserve row/column 0
for the suspension (bias) position; node v maps to row v+1.  Vertex
index convention in the suspension graph G' = (V + one extra vertex):
nodes keep their ids 0..p-1 and the suspension vertex is p.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DomainError",
    "IsingModel",
    "MeanVector",
    "SuspensionWeights",
    "param_matrix",
    "moment_matrix",
    "suspension_weights",
    "sufficient_statistics",
    "edge_set",
    "iter_pairs",
    "pair_count",
    "parameter_vector",
    "save_model",
    "load_model",
    "model_payload",
    "model_from_payload",
    "model_digest",
]


class DomainError(RuntimeError):
    """A numerical routine left its admissible domain (e.g. lost positive
    definiteness, or a brute-force enumeration limit was exceeded)."""


def iter_pairs(p: int):
    """Yield all unordered node pairs (u, v) with u < v in lexicographic order."""
    for u in range(p):
        for v in range(u + 1, p):
            yield u, v


def pair_count(p: int) -> int:
    return p * (p - 1) // 2


def _validate_pair(u: int, v: int, p: int) -> tuple[int, int]:
    if not (isinstance(u, (int, np.integer)) and isinstance(v, (int, np.integer))):
        raise ValueError(f"edge endpoints must be integers, got ({u!r}, {v!r})")
    u, v = int(u), int(v)
    if u == v:
        raise ValueError(f"self-loop ({u}, {v}) is not a valid edge")
    if not (0 <= u < p and 0 <= v < p):
        raise ValueError(f"edge ({u}, {v}) out of range for p={p}")
    return (u, v) if u < v else (v, u)


@dataclass
class IsingModel:
    """Parameters of a pairwise binary MRF.

    Parameters
    ----------
    p : int
        Number of variables, >= 1.
    node_params : ndarray, shape (p,)
        Node fields theta_v.
    edge_params : dict[(int, int), float]
        Couplings theta_uv keyed by normalized pairs u < v.  Pairs absent
        from the map are exactly zero; this is the sparse representation
        of a model whose support may be unknown.
    seed : int or None
        Optional provenance seed recorded when the model was generated.
    """

    p: int
    node_params: np.ndarray
    edge_params: dict[tuple[int, int], float] = field(default_factory=dict)
    seed: int | None = None

    def __post_init__(self):
        if self.p < 1:
            raise ValueError(f"p must be >= 1, got {self.p}")
        self.node_params = np.asarray(self.node_params, dtype=float)
        if self.node_params.shape != (self.p,):
            raise ValueError(
                f"node_params must have shape ({self.p},), got {self.node_params.shape}"
            )
        if not np.all(np.isfinite(self.node_params)):
            raise ValueError("node_params must be finite")
        normalized: dict[tuple[int, int], float] = {}
        for (u, v), w in self.edge_params.items():
            key = _validate_pair(u, v, self.p)
            if key in normalized:
                raise ValueError(f"duplicate edge {key}")
            w = float(w)
            if not math.isfinite(w):
                raise ValueError(f"edge {key} has non-finite parameter {w}")
            normalized[key] = w
        self.edge_params = normalized

    @property
    def d(self) -> int:
        """Dimension of the full statistic/parameter vector, p + p(p-1)/2."""
        return self.p + pair_count(self.p)

    def edge_param(self, u: int, v: int) -> float:
        key = (u, v) if u < v else (v, u)
        return self.edge_params.get(key, 0.0)


@dataclass
class MeanVector:
    """First and second moments eta of a pairwise binary MRF.

    ``pair_means`` stores eta_uv for every pair u < v as a dense symmetric
    (p, p) matrix with zero diagonal; both triangles carry the same value.
    Realizable and empirical vectors satisfy |eta| <= 1 coordinatewise;
    fitted vectors may overshoot the box by small numerical slack, so the
    box is deliberately not enforced here.
    """

    p: int
    node_means: np.ndarray
    pair_means: np.ndarray

    def __post_init__(self):
        if self.p < 1:
            raise ValueError(f"p must be >= 1, got {self.p}")
        self.node_means = np.asarray(self.node_means, dtype=float)
        self.pair_means = np.asarray(self.pair_means, dtype=float)
        if self.node_means.shape != (self.p,):
            raise ValueError(
                f"node_means must have shape ({self.p},), got {self.node_means.shape}"
            )
        if self.pair_means.shape != (self.p, self.p):
            raise ValueError(
                f"pair_means must have shape ({self.p}, {self.p}), "
                f"got {self.pair_means.shape}"
            )
        if not (np.all(np.isfinite(self.node_means)) and np.all(np.isfinite(self.pair_means))):
            raise ValueError("mean vector must be finite")
        if not np.allclose(self.pair_means, self.pair_means.T, atol=1e-12):
            raise ValueError("pair_means must be symmetric")
        if np.any(np.diag(self.pair_means) != 0.0):
            raise ValueError("pair_means diagonal must be zero")

    def pair(self, u: int, v: int) -> float:
        return float(self.pair_means[u, v])

    def pairs_upper(self) -> np.ndarray:
        """All eta_uv, u < v, in lexicographic order; length p(p-1)/2."""
        iu, iv = np.triu_indices(self.p, k=1)
        return self.pair_means[iu, iv]

    def as_vector(self) -> np.ndarray:
        """Full moment vector (nodes first, then pairs in lexicographic order)."""
        return np.concatenate([self.node_means, self.pairs_upper()])


@dataclass
class SuspensionWeights:
    """Edge weights w on the complete suspension graph G'.

    ``weights`` is a symmetric (p+1, p+1) array indexed by G' vertices,
    where vertices 0..p-1 are the model nodes and vertex p is the
    suspension vertex; entry (u, v) is the weight of edge {u, v}.  All
    weights lie in [0, 1] after clamping.
    """

    p: int
    weights: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        n = self.p + 1
        if self.weights.shape != (n, n):
            raise ValueError(
                f"weights must have shape ({n}, {n}), got {self.weights.shape}"
            )
        if np.any(self.weights < 0.0) or np.any(self.weights > 1.0):
            raise ValueError("suspension weights must lie in [0, 1]")

    @property
    def suspension(self) -> int:
        """Vertex id of the suspension vertex in G'."""
        return self.p


def param_matrix(model: IsingModel) -> np.ndarray:
    """Embed parameters into the symmetric (p+1)x(p+1) matrix R(theta).

    Entry (0, v+1) holds theta_v, entry (u+1, v+1) holds theta_uv, and
    the diagonal is zero.
    """
    p = model.p
    R = np.zeros((p + 1, p + 1))
    R[0, 1:] = model.node_params
    R[1:, 0] = model.node_params
    for (u, v), w in model.edge_params.items():
        R[u + 1, v + 1] = w
        R[v + 1, u + 1] = w
    return R


def moment_matrix(eta: MeanVector) -> np.ndarray:
    """Embed a mean vector into the symmetric zero-diagonal matrix R(eta).

    The second-moment matrix M1(eta) is R(eta) + I; callers add the
    identity (or another diagonal) as needed.
    """
    p = eta.p
    R = np.zeros((p + 1, p + 1))
    R[0, 1:] = eta.node_means
    R[1:, 0] = eta.node_means
    R[1:, 1:] = eta.pair_means
    return R


def suspension_weights(eta: MeanVector) -> SuspensionWeights:
    """Map mean parameters to cut-polytope coordinates on G'.

    Spoke edges get w_{v,susp} = (eta_v + 1)/2 and internal edges get
    w_uv = (1 - eta_uv)/2.  Fitted mean vectors can overshoot [-1, 1]
    slightly, so weights are clamped to [0, 1]; separation requires
    genuine cut-polytope coordinates.
    """
    p = eta.p
    w = np.zeros((p + 1, p + 1))
    w[:p, :p] = (1.0 - eta.pair_means) / 2.0
    np.fill_diagonal(w, 0.0)
    spokes = (eta.node_means + 1.0) / 2.0
    w[:p, p] = spokes
    w[p, :p] = spokes
    np.clip(w, 0.0, 1.0, out=w)
    return SuspensionWeights(p=p, weights=w)


def sufficient_statistics(x) -> np.ndarray:
    """Sufficient statistics phi(x) = (x_v for all v, x_u x_v for all u < v).

    Parameters
    ----------
    x : array_like, shape (p,)
        A configuration with every entry in {-1, +1}.

    Returns
    -------
    ndarray, shape (d,)
        Node statistics followed by pair statistics in lexicographic order.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError(f"x must be one-dimensional, got shape {x.shape}")
    if not np.all(np.abs(x) == 1.0):
        raise ValueError("every entry of x must be -1 or +1")
    p = x.shape[0]
    iu, iv = np.triu_indices(p, k=1)
    return np.concatenate([x, x[iu] * x[iv]])


def edge_set(model: IsingModel, tol: float = 1e-4) -> set[tuple[int, int]]:
    """Pairs with |theta_uv| > tol.

    Subgradient solvers leave sub-penalty noise at inactive coordinates,
    so a strictly positive default tolerance is the safe reading of
    "theta_uv = 0 means no edge".
    """
    if tol < 0:
        raise ValueError(f"tol must be >= 0, got {tol}")
    return {pair for pair, w in model.edge_params.items() if abs(w) > tol}


def parameter_vector(model: IsingModel) -> np.ndarray:
    """Full parameter vector theta (nodes, then all pairs lexicographically)."""
    pairs = np.zeros(pair_count(model.p))
    idx = {pair: k for k, pair in enumerate(iter_pairs(model.p))}
    for pair, w in model.edge_params.items():
        pairs[idx[pair]] = w
    return np.concatenate([model.node_params, pairs])


def model_payload(model: IsingModel) -> dict:
    """JSON-ready dict in the model file schema (p, optional seed, nodes, edges)."""
    payload = {
        "p": model.p,
        "nodes": [float(t) for t in model.node_params],
        "edges": [[u, v, float(w)] for (u, v), w in sorted(model.edge_params.items())],
    }
    if model.seed is not None:
        payload["seed"] = int(model.seed)
    return payload


def model_from_payload(payload: dict, context: str = "model payload") -> IsingModel:
    """Inverse of model_payload, rejecting duplicate or out-of-range pairs."""
    try:
        p = int(payload["p"])
        nodes = payload["nodes"]
        edges = payload.get("edges", [])
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed {context}: {exc}") from exc
    edge_params: dict[tuple[int, int], float] = {}
    for entry in edges:
        if len(entry) != 3:
            raise ValueError(f"malformed edge entry {entry!r} in {context}")
        u, v, w = entry
        key = _validate_pair(int(u), int(v), p)
        if key in edge_params:
            raise ValueError(f"duplicate edge {key} in {context}")
        edge_params[key] = float(w)
    return IsingModel(
        p=p,
        node_params=np.asarray(nodes, dtype=float),
        edge_params=edge_params,
        seed=payload.get("seed"),
    )


def save_model(model: IsingModel, path) -> None:
    """Write a model file: JSON with fields p, optional seed, nodes, edges."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_payload(model), fh, indent=1)
        fh.write("\n")


def load_model(path) -> IsingModel:
    """Read a model file, rejecting duplicate or out-of-range edge pairs."""
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    return model_from_payload(payload, context=f"model file {path}")


def model_digest(model: IsingModel) -> str:
    """Short stable content hash of a model, for dataset provenance."""
    canon = json.dumps(model_payload(model), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:12]
