"""Cycle-inequality construction and shortest-path separation tests."""

import itertools

import numpy as np
import pytest

from isinglearn.exact import exact_mean_parameters
from isinglearn.model import (
    IsingModel,
    MeanVector,
    SuspensionWeights,
    moment_matrix,
    suspension_weights,
)
from isinglearn.separation import cycle_to_matrix, separate, violation

from oracles import min_cycle_lhs


def _eta(p, node=None, pairs=None):
    pm = np.zeros((p, p))
    for (u, v), val in (pairs or {}).items():
        pm[u, v] = pm[v, u] = val
    nm = np.zeros(p) if node is None else np.asarray(node, dtype=float)
    return MeanVector(p=p, node_means=nm, pair_means=pm)


# ---------------------------------------------------------------------------
# cycle_to_matrix
# ---------------------------------------------------------------------------


def test_internal_triangle_all_odd():
    # Triangle on nodes 0,1,2 with F = all three edges encodes
    # eta_01 + eta_02 + eta_12 >= -1 (coefficients 1/4 per symmetric
    # matrix slot, rhs -1/2).
    edges = [(0, 1), (0, 2), (1, 2)]
    ineq = cycle_to_matrix((0, 1, 2), edges, p=3)
    assert ineq.rhs == -0.5
    for u, v in edges:
        assert ineq.coeff[u + 1, v + 1] == 0.25
    assert np.count_nonzero(ineq.coeff) == 6

    # Every +-1 assignment is realizable, so none may violate the cut.
    for x in itertools.product((-1, 1), repeat=3):
        eta = _eta(3, pairs={(u, v): x[u] * x[v] for u, v in edges})
        assert violation(ineq, moment_matrix(eta)) <= 1e-12


def test_spoke_triangle_gives_local_consistency_inequalities():
    # The four odd subsets of the triangle (u, v, suspension) encode the
    # four local-consistency facets s_u eta_u + s_v eta_v + s_uv eta_uv >= -1.
    p, u, v = 2, 0, 1
    cycle = (u, v, p)
    spoke_u, spoke_v, inner = (u, p), (v, p), (u, v)
    cases = [
        ((inner,), (1, 1, 1)),
        ((spoke_u, spoke_v, inner), (-1, -1, 1)),
        ((spoke_u,), (-1, 1, -1)),
        ((spoke_v,), (1, -1, -1)),
    ]
    basis = [
        moment_matrix(_eta(p, node=[1, 0])),
        moment_matrix(_eta(p, node=[0, 1])),
        moment_matrix(_eta(p, pairs={(u, v): 1.0})),
    ]
    for odd, signs in cases:
        ineq = cycle_to_matrix(cycle, list(odd), p=p)
        assert ineq.rhs == -0.5
        # tr(A R) on a basis mean vector reads off half the coefficient.
        got = tuple(round(2.0 * np.sum(ineq.coeff * R)) for R in basis)
        assert got == signs
        # The opposite corner eta = -s is the one excluded assignment:
        # left side -3 against rhs -1, so the scaled violation is 1.
        su, sv, suv = signs
        corner = _eta(p, node=[-su, -sv], pairs={(u, v): -suv})
        assert violation(ineq, moment_matrix(corner)) == pytest.approx(1.0)
        # All realizable corners satisfy it.
        for xu, xv in itertools.product((-1, 1), repeat=2):
            real = _eta(p, node=[xu, xv], pairs={(u, v): xu * xv})
            assert violation(ineq, moment_matrix(real)) <= 1e-12


def test_violation_values():
    edges = [(0, 1), (0, 2), (1, 2)]
    ineq = cycle_to_matrix((0, 1, 2), edges, p=3)
    # eta = 0: left side 0, rhs -1/2, satisfied with slack 1/2.
    assert violation(ineq, moment_matrix(_eta(3))) == pytest.approx(-0.5)
    # All pair means -1: substitution gives -3 >= -1, violated by 2
    # (scaled by the 1/2 built into the matrix form).
    eta = _eta(3, pairs={e: -1.0 for e in edges})
    assert violation(ineq, moment_matrix(eta)) == pytest.approx(1.0)


def test_cycle_to_matrix_input_validation():
    with pytest.raises(ValueError, match="odd"):
        cycle_to_matrix((0, 1, 2), [(0, 1), (1, 2)], p=3)
    with pytest.raises(ValueError, match="repeated"):
        cycle_to_matrix((0, 1, 0), [(0, 1)], p=3)
    with pytest.raises(ValueError, match="at least 3"):
        cycle_to_matrix((0, 1), [(0, 1)], p=3)
    with pytest.raises(ValueError, match="subset"):
        cycle_to_matrix((0, 1, 2), [(0, 3)], p=4)


def test_violation_shape_mismatch():
    ineq = cycle_to_matrix((0, 1, 2), [(0, 1), (0, 2), (1, 2)], p=3)
    with pytest.raises(ValueError, match="shape"):
        violation(ineq, np.zeros((3, 3)))


# ---------------------------------------------------------------------------
# separate
# ---------------------------------------------------------------------------


def test_separate_finds_the_zero_length_triangle():
    # Internal triangle weights 1 with spokes at 1/2: choosing F = all
    # three internal edges gives a path of length 0, i.e. violation 1.
    p = 3
    w = np.zeros((4, 4))
    for u, v in ((0, 1), (0, 2), (1, 2)):
        w[u, v] = w[v, u] = 1.0
    w[:3, 3] = w[3, :3] = 0.5
    cuts = separate(SuspensionWeights(p=p, weights=w), min_violation=1e-4, max_cuts=5)
    assert cuts
    top = cuts[0]
    assert set(top.cycle) == {0, 1, 2}
    assert top.odd_set == ((0, 1), (0, 2), (1, 2))
    eta = _eta(3, pairs={e: -1.0 for e in ((0, 1), (0, 2), (1, 2))})
    assert violation(top, moment_matrix(eta)) == pytest.approx(1.0)


def test_separate_returns_most_violated_first(rng):
    p = 5
    pm = rng.uniform(-1, 1, size=(p, p))
    pm = (pm + pm.T) / 2.0
    np.fill_diagonal(pm, 0.0)
    eta = MeanVector(p=p, node_means=rng.uniform(-1, 1, size=p), pair_means=pm)
    weights = suspension_weights(eta)
    cuts = separate(weights, min_violation=1e-6, max_cuts=50)
    assert cuts, "this mean vector lies well outside the cycle relaxation"
    R = moment_matrix(eta)
    viols = [violation(c, R) for c in cuts]
    # Sound: everything returned is genuinely violated at the source point
    # (9.9e-7 rather than 1e-6 allows for the difference between the path
    # sum and the trace evaluating the same quantity).
    assert all(v > 9.9e-7 for v in viols)
    # Most-violated first (ascending path length).
    assert all(a >= b - 1e-12 for a, b in zip(viols, viols[1:]))
    # No duplicate signatures within a batch.
    sigs = [c.signature for c in cuts]
    assert len(sigs) == len(set(sigs))


def test_separate_max_cuts_cap():
    # All pair means -1 violates every internal triangle, so the batch
    # cap is the binding constraint.
    p = 6
    pairs = {(u, v): -1.0 for u in range(p) for v in range(u + 1, p)}
    eta = _eta(p, pairs=pairs)
    capped = separate(suspension_weights(eta), min_violation=1e-6, max_cuts=2)
    free = separate(suspension_weights(eta), min_violation=1e-6, max_cuts=1000)
    assert len(capped) == 2
    assert len(free) > 2
    assert [c.signature for c in capped] == [c.signature for c in free[:2]]


def test_exact_means_are_never_separated(rng):
    # Realizable mean vectors satisfy every cycle inequality, so exact
    # moments from random models never produce cuts.
    for p in (3, 4, 5):
        pairs = [(u, v) for u in range(p) for v in range(u + 1, p)]
        model = IsingModel(
            p=p,
            node_params=rng.uniform(-1, 1, size=p),
            edge_params={e: float(rng.uniform(-2, 2)) for e in pairs},
        )
        eta = exact_mean_parameters(model)
        assert separate(suspension_weights(eta), 1e-10, 50) == []
        # And every explicitly constructed triangle cut is satisfied.
        R = moment_matrix(eta)
        for cyc in itertools.combinations(range(p), 3):
            edges = [(cyc[0], cyc[1]), (cyc[0], cyc[2]), (cyc[1], cyc[2])]
            ineq = cycle_to_matrix(cyc, edges, p=p)
            assert violation(ineq, R) <= 1e-10


def test_separation_agrees_with_exhaustive_search(rng):
    # Dual route: shortest-path separation vs brute-force enumeration of
    # every simple cycle and odd subset, on random weight matrices over
    # small suspension graphs.
    for trial in range(10):
        p = int(rng.integers(3, 6))
        nv = p + 1
        w = rng.uniform(0, 1, size=(nv, nv))
        w = (w + w.T) / 2.0
        np.fill_diagonal(w, 0.0)
        weights = SuspensionWeights(p=p, weights=w)
        best, _ = min_cycle_lhs(w)
        cuts = separate(weights, min_violation=1e-12, max_cuts=200)
        if best < 1.0 - 1e-9:
            assert cuts, f"oracle found lhs={best} but separation returned nothing"
            # The most-violated cut's left side equals the brute-force
            # minimum: lhs = 1 - violation in weight coordinates.
            eta_pairs = 1.0 - 2.0 * w[:p, :p]
            np.fill_diagonal(eta_pairs, 0.0)
            eta = MeanVector(
                p=p, node_means=2.0 * w[:p, p] - 1.0, pair_means=eta_pairs
            )
            top = 1.0 - violation(cuts[0], moment_matrix(eta))
            assert top == pytest.approx(best, abs=1e-9)
        elif best > 1.0 + 1e-9:
            assert cuts == []


def test_separate_empty_on_interior_point():
    # eta = 0 maps to all-1/2 weights; every cycle inequality holds with
    # slack, so nothing separates.
    eta = _eta(4)
    assert separate(suspension_weights(eta), 1e-6, 20) == []
