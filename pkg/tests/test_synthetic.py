"""Graph generation, parameter assignment, and Gibbs sampler tests."""

import itertools

import numpy as np
import pytest

from isinglearn.exact import exact_mean_parameters
from isinglearn.model import (
    IsingModel,
    moment_matrix,
    pair_count,
    sufficient_statistics,
)
from isinglearn.separation import separate
from isinglearn.synthetic import (
    Dataset,
    GraphSpec,
    SamplerConfig,
    assign_parameters,
    empirical_means,
    gibbs_sample,
    load_samples,
    make_graph,
    save_samples,
)
from isinglearn.model import suspension_weights


def _degrees(edges, p):
    deg = np.zeros(p, dtype=int)
    for u, v in edges:
        deg[u] += 1
        deg[v] += 1
    return deg


# ---------------------------------------------------------------------------
# graphs
# ---------------------------------------------------------------------------


def test_grid_graph_edge_count_and_degrees():
    spec = GraphSpec(kind="grid4", p=9, rows=3, cols=3)
    edges = make_graph(spec, rng_seed=0)
    # r*(c-1) horizontal + (r-1)*c vertical edges.
    assert len(edges) == 12
    assert edges == sorted(set(edges))
    deg = _degrees(edges, 9)
    assert deg.max() == 4  # center node
    assert deg.min() == 2  # corners
    # Horizontal neighbor of the top-left corner.
    assert (0, 1) in edges and (0, 3) in edges and (0, 4) not in edges


def test_random_sparse_graph_counts_and_degree_cap():
    spec = GraphSpec(kind="random_sparse", p=50, n_edges=100, max_degree=6)
    edges = make_graph(spec, rng_seed=7)
    assert len(edges) == 100
    assert len(set(edges)) == 100
    assert all(0 <= u < v < 50 for u, v in edges)
    assert _degrees(edges, 50).max() <= 6


def test_random_sparse_infeasible_cap_raises():
    # A degree cap of 1 admits at most floor(p/2) edges.
    spec = GraphSpec(kind="random_sparse", p=4, n_edges=3, max_degree=1)
    with pytest.raises(ValueError, match="could not place"):
        make_graph(spec, rng_seed=0)


def test_dense_blocks_contain_their_cliques():
    spec = GraphSpec(
        kind="dense_subgraphs", p=50, n_edges=100, block_size=8, n_blocks=2
    )
    edges = make_graph(spec, rng_seed=3)
    assert len(edges) == 100
    chosen = set(edges)
    for base in (0, 8):
        for i, j in itertools.combinations(range(base, base + 8), 2):
            assert (i, j) in chosen
    # 2 * C(8,2) = 56 clique edges, the rest are cross edges.
    cross = [e for e in edges if not (e[0] // 8 == e[1] // 8 and e[1] < 16)]
    assert len(cross) == 44


def test_graph_spec_validation():
    with pytest.raises(ValueError, match="rows"):
        GraphSpec(kind="grid4", p=10, rows=3, cols=3)
    with pytest.raises(ValueError, match="infeasible"):
        GraphSpec(kind="random_sparse", p=4, n_edges=7)
    with pytest.raises(ValueError, match="do not fit"):
        GraphSpec(kind="dense_subgraphs", p=10, n_edges=30, block_size=6, n_blocks=2)
    with pytest.raises(ValueError, match="clique"):
        GraphSpec(kind="dense_subgraphs", p=20, n_edges=10, block_size=6, n_blocks=2)
    with pytest.raises(ValueError, match="unknown graph kind"):
        GraphSpec(kind="tree", p=5)


def test_graphs_are_deterministic_per_seed():
    spec = GraphSpec(kind="random_sparse", p=30, n_edges=40)
    assert make_graph(spec, 11) == make_graph(spec, 11)
    assert make_graph(spec, 11) != make_graph(spec, 12)


# ---------------------------------------------------------------------------
# parameters
# ---------------------------------------------------------------------------


def test_assign_parameters_ranges_and_zero_xi():
    edges = make_graph(GraphSpec(kind="grid4", p=16, rows=4, cols=4), 0)
    model = assign_parameters(edges, p=16, xi=0.0, rng_seed=5)
    assert set(model.edge_params) == set(edges)
    assert all(v == 0.0 for v in model.edge_params.values())
    assert np.all(np.abs(model.node_params) <= 1.0)

    model = assign_parameters(edges, p=16, xi=0.5, rng_seed=5)
    assert all(abs(v) <= 0.5 for v in model.edge_params.values())


def test_assign_parameters_coupling_magnitude_is_uniform():
    # |U[-1, 1]| has mean 1/2; check it on a large edge set.
    spec = GraphSpec(kind="random_sparse", p=200, n_edges=10000)
    edges = make_graph(spec, 1)
    model = assign_parameters(edges, p=200, xi=1.0, rng_seed=2)
    mags = np.abs(list(model.edge_params.values()))
    assert abs(mags.mean() - 0.5) < 0.02


def test_assign_parameters_deterministic_and_validated():
    edges = [(0, 1), (1, 2)]
    a = assign_parameters(edges, 3, 1.0, 9)
    b = assign_parameters(edges, 3, 1.0, 9)
    assert np.array_equal(a.node_params, b.node_params)
    assert a.edge_params == b.edge_params
    with pytest.raises(ValueError, match="xi"):
        assign_parameters(edges, 3, -0.1, 0)


# ---------------------------------------------------------------------------
# Gibbs sampling
# ---------------------------------------------------------------------------


def _toy_model(p=5, xi=0.5, graph_seed=0, param_seed=1):
    spec = GraphSpec(kind="random_sparse", p=p, n_edges=min(p, pair_count(p)))
    edges = make_graph(spec, graph_seed)
    return assign_parameters(edges, p, xi, param_seed)


def test_gibbs_is_deterministic_per_seed():
    model = _toy_model()
    a = gibbs_sample(model, SamplerConfig(n=40, burn_in=50, thin=2, seed=3))
    b = gibbs_sample(model, SamplerConfig(n=40, burn_in=50, thin=2, seed=3))
    c = gibbs_sample(model, SamplerConfig(n=40, burn_in=50, thin=2, seed=4))
    assert np.array_equal(a.x, b.x)
    assert not np.array_equal(a.x, c.x)
    assert a.model_hash == b.model_hash
    assert a.x.dtype == np.int8


def test_single_sample_means_are_the_statistics():
    x = np.array([[1, -1, 1, -1]])
    eta = empirical_means(x)
    assert np.array_equal(eta.node_means, x[0].astype(float))
    for u, v in itertools.combinations(range(4), 2):
        assert eta.pair_means[u, v] == x[0, u] * x[0, v]


def test_sign_flip_pair_cancels_nodes_not_pairs():
    x = np.array([[1, -1, 1], [-1, 1, -1]])
    eta = empirical_means(x)
    assert np.array_equal(eta.node_means, np.zeros(3))
    assert eta.pair_means[0, 1] == -1.0
    assert eta.pair_means[0, 2] == 1.0
    assert eta.pair_means[1, 2] == -1.0


def test_empirical_means_match_statistic_average(rng):
    # Dual route: the columnwise products must equal the average of the
    # per-sample sufficient statistic vectors.
    x = rng.choice([-1, 1], size=(200, 4))
    eta = empirical_means(x)
    phi = np.mean([sufficient_statistics(row) for row in x], axis=0)
    assert np.allclose(eta.node_means, phi[:4], atol=1e-12)
    for k, (u, v) in enumerate(itertools.combinations(range(4), 2)):
        assert eta.pair_means[u, v] == pytest.approx(phi[4 + k], abs=1e-12)


def test_independent_spins_have_small_means():
    p, n = 6, 10000
    model = IsingModel(p=p, node_params=np.zeros(p), edge_params={})
    data = gibbs_sample(model, SamplerConfig(n=n, burn_in=20, thin=1, seed=0))
    eta = empirical_means(data)
    bound = 4.0 / np.sqrt(n)
    assert np.max(np.abs(eta.node_means)) < bound
    assert np.max(np.abs(eta.pair_means)) < bound


def test_strong_ferromagnet_aligns():
    model = IsingModel(p=2, node_params=np.zeros(2), edge_params={(0, 1): 3.0})
    data = gibbs_sample(model, SamplerConfig(n=500, burn_in=200, thin=3, seed=1))
    eta = empirical_means(data)
    # E[x0 x1] = tanh(3) ~ 0.995.
    assert eta.pair_means[0, 1] > 0.9


def test_chain_moments_match_exact_oracle():
    model = _toy_model(p=5, xi=0.5)
    exact = exact_mean_parameters(model)
    n = 20000
    data = gibbs_sample(model, SamplerConfig(n=n, burn_in=500, thin=5, seed=6))
    est = empirical_means(data)
    # ~7 sigma at worst-case coordinate variance plus thinning slack.
    assert np.max(np.abs(est.node_means - exact.node_means)) < 0.05
    assert np.max(np.abs(est.pair_means - exact.pair_means)) < 0.05


def test_empirical_moment_matrix_is_consistent():
    # Empirical means come from a distribution over sign vectors, so the
    # shifted moment matrix is PSD and no cycle inequality separates them.
    model = _toy_model(p=6, xi=1.0)
    data = gibbs_sample(model, SamplerConfig(n=300, burn_in=200, thin=2, seed=8))
    eta = empirical_means(data)
    m1 = moment_matrix(eta) + np.eye(7)
    assert np.linalg.eigvalsh(m1).min() > -1e-10
    assert separate(suspension_weights(eta), min_violation=1e-9, max_cuts=50) == []


# ---------------------------------------------------------------------------
# dataset files
# ---------------------------------------------------------------------------


def test_samples_file_round_trip(tmp_path):
    model = _toy_model(p=4)
    data = gibbs_sample(model, SamplerConfig(n=25, burn_in=10, thin=1, seed=13))
    path = tmp_path / "samples.txt"
    save_samples(data, path)
    back = load_samples(path)
    assert back.p == 4 and back.n == 25 and back.seed == 13
    assert np.array_equal(back.x, data.x)
    first = path.read_text().splitlines()[0]
    assert first == "# p=4 n=25 seed=13"


def test_samples_file_accepts_plus_signs(tmp_path):
    path = tmp_path / "plus.txt"
    path.write_text("# p=3 n=2 seed=0\n+1 -1 +1\n-1 -1 +1\n")
    data = load_samples(path)
    assert np.array_equal(data.x, [[1, -1, 1], [-1, -1, 1]])


def test_samples_file_errors(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("1 -1\n-1 1\n")
    with pytest.raises(ValueError, match="header"):
        load_samples(path)
    path.write_text("# p=2 n=2\n1 -1\n-1 1\n")
    with pytest.raises(ValueError, match="p, n, seed"):
        load_samples(path)
    path.write_text("# p=2 n=2 seed=0\n1 -1 1\n-1 1\n")
    with pytest.raises(ValueError, match="row with 3 values"):
        load_samples(path)
    path.write_text("# p=2 n=3 seed=0\n1 -1\n-1 1\n")
    with pytest.raises(ValueError, match="header says"):
        load_samples(path)
    path.write_text("# p=2 n=1 seed=0\n1 0\n")
    with pytest.raises(ValueError, match="-1 or \\+1"):
        load_samples(path)


def test_dataset_validation():
    with pytest.raises(ValueError, match="shape"):
        Dataset(p=3, n=2, x=np.ones((2, 2)))
    with pytest.raises(ValueError, match="-1 or \\+1"):
        Dataset(p=2, n=2, x=np.array([[1, 0], [1, -1]]))


def test_sampler_config_validation():
    with pytest.raises(ValueError, match="n must"):
        SamplerConfig(n=0)
    with pytest.raises(ValueError, match="burn_in"):
        SamplerConfig(n=1, burn_in=-1)
    with pytest.raises(ValueError, match="thin"):
        SamplerConfig(n=1, thin=0)


def test_empirical_means_rejects_empty():
    with pytest.raises(ValueError, match="nonempty"):
        empirical_means(np.zeros((0, 3)))
