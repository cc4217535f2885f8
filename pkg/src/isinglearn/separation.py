"""Cycle inequalities over the suspension graph and their separation.

For a cycle C in G' and an odd-sized subset F of its edges, the cut
polytope satisfies

    sum_{e in C\\F} w_e + sum_{e in F} (1 - w_e) >= 1.

Substituting the weight map (spokes w = (eta_v+1)/2, internal edges
w = (1-eta_uv)/2) turns this into a linear inequality tr(A R(eta)) >= b
over moment matrices, with b = 1 - |C|/2.  A point violates the
inequality exactly when some odd closed walk is shorter than 1 in the
w/(1-w) edge lengths, so violated inequalities are found with Dijkstra
shortest paths on a doubled graph: two copies of every vertex, same-copy
edges of length w, copy-crossing edges of length 1 - w.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

from .model import SuspensionWeights

__all__ = ["CycleInequality", "cycle_to_matrix", "violation", "separate"]

Edge = tuple[int, int]


def _norm_edge(a: int, b: int) -> Edge:
    return (a, b) if a < b else (b, a)


def _cycle_edges(cycle: tuple[int, ...]) -> list[Edge]:
    n = len(cycle)
    return [_norm_edge(cycle[i], cycle[(i + 1) % n]) for i in range(n)]


@dataclass(frozen=True)
class CycleInequality:
    """One cut tr(A R(eta)) >= b generated by an odd pair (C, F).

    Attributes
    ----------
    coeff : ndarray, shape (p+1, p+1)
        Symmetric coefficient matrix A, nonzero only at cycle-edge
        positions (matrix indices: suspension -> 0, node v -> v+1).
    rhs : float
        Right-hand side b = 1 - |C|/2.
    cycle : tuple of int
        Cycle vertices in G' order (vertex ids: nodes 0..p-1, suspension p).
    odd_set : tuple of Edge
        The odd subset F as sorted normalized vertex pairs.
    signature : tuple
        Canonical identifier (sorted edge list, sorted F) for deduplication.
    """

    coeff: np.ndarray = field(repr=False)
    rhs: float
    cycle: tuple[int, ...]
    odd_set: tuple[Edge, ...]
    signature: tuple


def cycle_to_matrix(cycle, odd_set, p: int) -> CycleInequality:
    """Build the matrix form of the cycle inequality for (cycle, odd_set).

    Each cycle edge e contributes sigma_e * g_e to the coefficient of its
    eta coordinate, where g_e = +1/2 on spoke edges (v, suspension) and
    -1/2 on internal edges, and sigma_e = +1 off F, -1 on F.  A carries
    half the coefficient on each of the two symmetric positions so that
    tr(A R(eta)) equals the full linear form.

    Parameters
    ----------
    cycle : sequence of int
        Distinct G' vertices (suspension vertex is p) in cycle order,
        length >= 3.
    odd_set : iterable of (int, int)
        Edges of the cycle; |odd_set| must be odd.
    p : int
        Node count.
    """
    cycle = tuple(int(v) for v in cycle)
    if len(cycle) < 3:
        raise ValueError(f"cycle must have at least 3 vertices, got {cycle}")
    if len(set(cycle)) != len(cycle):
        raise ValueError(f"cycle has repeated vertices: {cycle}")
    if not all(0 <= v <= p for v in cycle):
        raise ValueError(f"cycle vertex out of range for p={p}: {cycle}")
    edges = _cycle_edges(cycle)
    odd = tuple(sorted(_norm_edge(int(a), int(b)) for a, b in odd_set))
    if len(set(odd)) != len(odd):
        raise ValueError(f"odd_set has repeated edges: {odd}")
    if not set(odd) <= set(edges):
        raise ValueError("odd_set must be a subset of the cycle edges")
    if len(odd) % 2 == 0:
        raise ValueError(f"|F| must be odd, got {len(odd)}")

    A = np.zeros((p + 1, p + 1))
    odd_lookup = set(odd)
    for a, b in edges:
        spoke = b == p  # edges are normalized, so only b can be the suspension
        g = 0.5 if spoke else -0.5
        sigma = -1.0 if (a, b) in odd_lookup else 1.0
        i = 0 if a == p else a + 1
        j = 0 if b == p else b + 1
        A[i, j] += sigma * g / 2.0
        A[j, i] += sigma * g / 2.0
    rhs = 1.0 - len(cycle) / 2.0
    signature = (tuple(sorted(edges)), odd)
    return CycleInequality(coeff=A, rhs=rhs, cycle=cycle, odd_set=odd, signature=signature)


def violation(ineq: CycleInequality, eta_matrix: np.ndarray) -> float:
    """Amount b - tr(A R(eta)); positive means the inequality is violated.

    Equals 1 minus the cycle-inequality left side in w coordinates, i.e.
    1 minus the corresponding doubled-graph path length.
    """
    eta_matrix = np.asarray(eta_matrix, dtype=float)
    if eta_matrix.shape != ineq.coeff.shape:
        raise ValueError(
            f"shape mismatch: cut is {ineq.coeff.shape}, matrix is {eta_matrix.shape}"
        )
    return float(ineq.rhs - np.sum(ineq.coeff * eta_matrix))


def _doubled_graph(weights: np.ndarray) -> coo_matrix:
    """Doubled suspension graph as a sparse length matrix.

    Vertex v of G' becomes v (copy 0) and v + nv (copy 1).  Same-copy
    edges have length w, copy-crossing edges 1 - w.  Zero lengths are
    kept as explicit entries so clamped weights still act as edges.
    """
    nv = weights.shape[0]
    iu, iv = np.triu_indices(nv, k=1)
    w = weights[iu, iv]
    rows = np.concatenate([iu, iu + nv, iu, iv])
    cols = np.concatenate([iv, iv + nv, iv + nv, iu + nv])
    data = np.concatenate([w, w, 1.0 - w, 1.0 - w])
    return coo_matrix((data, (rows, cols)), shape=(2 * nv, 2 * nv)).tocsr()


def separate(
    weights: SuspensionWeights,
    min_violation: float = 1e-4,
    max_cuts: int = 20,
) -> list[CycleInequality]:
    """Find violated cycle inequalities by shortest paths on the doubled graph.

    For every root s, a shortest path from copy-0 s to copy-1 s projects
    to a closed walk in G' whose copy-crossing edges form an odd set F and
    whose length equals the cycle-inequality left side.  Paths of length
    < 1 - min_violation yield cuts; projections with repeated vertices
    (non-simple cycles) are discarded.  Results are deduplicated by
    signature and returned most-violated first (ascending path length,
    then signature), at most max_cuts of them.

    Parameters
    ----------
    weights : SuspensionWeights
        Clamped cut-polytope coordinates of the current mean vector.
    min_violation : float
        Violation threshold below which cuts are ignored.
    max_cuts : int
        Batch size cap.
    """
    nv = weights.p + 1
    graph = _doubled_graph(weights.weights)
    roots = np.arange(nv)
    dist, pred = dijkstra(
        graph, directed=False, indices=roots, return_predecessors=True
    )

    found: dict[tuple, tuple[float, CycleInequality]] = {}
    for k in range(nv):
        s = int(roots[k])
        target = s + nv
        length = float(dist[k, target])
        if not np.isfinite(length) or length >= 1.0 - min_violation:
            continue
        path = []
        node = target
        while node != -9999 and node >= 0:
            path.append(int(node))
            if node == s:
                break
            node = int(pred[k, node])
        else:
            continue
        path.reverse()
        if path[0] != s or path[-1] != target:
            continue
        projected = [v % nv for v in path]
        cycle = projected[:-1]
        if len(cycle) < 3 or len(set(cycle)) != len(cycle):
            continue
        odd = []
        for i in range(len(path) - 1):
            if (path[i] < nv) != (path[i + 1] < nv):
                odd.append(_norm_edge(projected[i], projected[i + 1]))
        if len(odd) % 2 == 0:
            continue
        ineq = cycle_to_matrix(cycle, odd, weights.p)
        best = found.get(ineq.signature)
        if best is None or length < best[0]:
            found[ineq.signature] = (length, ineq)

    ordered = sorted(found.values(), key=lambda item: (item[0], item[1].signature))
    return [ineq for _, ineq in ordered[:max_cuts]]
