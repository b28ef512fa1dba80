"""Metric spaces, embeddings and distortion.

Oracles: networkx shortest paths for tree/star distances, a loop-based
pairwise evaluation for Lipschitz constants and distortion.
"""
import itertools

import networkx as nx
import numpy as np
import pytest

from l1lab.errors import DegenerateEmbeddingError, InvalidArgumentError, ResourceLimitError
from l1lab.metric import (
    Embedding,
    FiniteMetricSpace,
    brute_force_distortion,
    distortion,
    infer_kary_tree,
    inverse_lipschitz_constant,
    is_star,
    kary_tree_metric,
    kary_tree_size,
    lipschitz_constant,
    normalize_to_one_lipschitz,
    star_metric,
    uniform_metric,
)


def bfs_distances(graph, n):
    lengths = dict(nx.all_pairs_shortest_path_length(graph))
    return np.array([[lengths[a][b] for b in range(n)] for a in range(n)], dtype=float)


def heap_tree_graph(k, h):
    g = nx.Graph()
    size = kary_tree_size(k, h)
    g.add_nodes_from(range(size))
    for v in range(1, size):
        g.add_edge(v, (v - 1) // k)
    return g


def path_metric(n):
    idx = np.arange(n, dtype=float)
    return FiniteMetricSpace(np.abs(idx[:, None] - idx[None, :]))


# ---------------------------------------------------------------- spaces


def test_star_two_points():
    m = star_metric(2)
    assert m.n == 2 and m.dist[0, 1] == 1.0


def test_star_three_points():
    d = star_metric(3).dist
    assert d[1, 2] == 2.0 and d[0, 1] == d[0, 2] == 1.0


@pytest.mark.parametrize("n", [5, 9, 33])
def test_star_matches_bfs(n):
    expected = bfs_distances(nx.star_graph(n - 1), n)
    np.testing.assert_array_equal(star_metric(n).dist, expected)
    leaves = star_metric(n).dist[1:, 1:]
    assert np.all(leaves[~np.eye(n - 1, dtype=bool)] == 2.0)


def test_star_rejects_one_point():
    with pytest.raises(InvalidArgumentError):
        star_metric(1)


@pytest.mark.parametrize("k,h", [(2, 1), (2, 2), (3, 2), (2, 5), (4, 3), (5, 2)])
def test_kary_tree_matches_bfs(k, h):
    m = kary_tree_metric(k, h)
    assert m.n == (k ** (h + 1) - 1) // (k - 1)
    np.testing.assert_array_equal(m.dist, bfs_distances(heap_tree_graph(k, h), m.n))


def test_kary_tree_examples():
    assert kary_tree_metric(2, 1).dist[1, 2] == 2
    m = kary_tree_metric(2, 2)
    assert m.n == 7 and m.dist.max() == 4 and m.dist[3, 6] == 4
    m = kary_tree_metric(3, 2)
    assert m.n == 13 and m.dist[4, 5] == 2


def test_kary_tree_size_cap():
    with pytest.raises(ResourceLimitError):
        kary_tree_metric(2, 20, max_points=1000)


def test_infer_shape():
    assert infer_kary_tree(kary_tree_metric(3, 3)) == (3, 3)
    assert is_star(star_metric(7)) and not is_star(kary_tree_metric(2, 2))
    # the 1-level k-ary tree is the (k+1)-star
    assert is_star(kary_tree_metric(4, 1))


def test_triangle_inequality_detected():
    d = np.array([[0, 1, 5], [1, 0, 1], [5, 1, 0]], dtype=float)
    assert not FiniteMetricSpace(d).is_valid()
    assert uniform_metric(6).is_valid()


def test_asymmetric_rejected():
    with pytest.raises(InvalidArgumentError):
        FiniteMetricSpace(np.array([[0.0, 1.0], [2.0, 0.0]]))


# ---------------------------------------------------------------- lipschitz / distortion


def test_identity_line_is_one_lipschitz():
    e = Embedding(path_metric(3), np.arange(3.0)[:, None], "l1")
    assert lipschitz_constant(e) == 1.0


def test_constant_map():
    e = Embedding(path_metric(3), np.zeros((3, 2)), "l1")
    assert lipschitz_constant(e) == 0.0
    assert distortion(e) == np.inf


def test_three_star_on_a_line():
    e = Embedding(star_metric(3), np.array([[0.0], [1.0], [-1.0]]), "l1")
    # pairs (0,1): 1/1, (0,2): 1/1, (1,2): 2/2
    assert lipschitz_constant(e) == 1.0
    assert inverse_lipschitz_constant(e) == 1.0
    assert distortion(e) == 1.0


def test_scaling_is_free():
    e = Embedding(path_metric(2), np.array([[0.0], [2.0]]), "l1")
    assert lipschitz_constant(e) == 2.0
    assert inverse_lipschitz_constant(e) == 0.5
    assert distortion(e) == 1.0


def test_distortion_matches_loop_oracle(rng):
    for _ in range(25):
        n, d = rng.integers(2, 9), rng.integers(1, 5)
        pts = rng.normal(size=(n, d))
        src = kary_tree_metric(2, 2) if n == 7 else uniform_metric(n)
        for norm in ("l1", "l2"):
            e = Embedding(src, pts, norm)
            assert distortion(e) == pytest.approx(brute_force_distortion(pts, src.dist, norm), rel=1e-12)


# ---------------------------------------------------------------- normalization


def test_normalize_identity_case():
    e = Embedding(star_metric(3), np.array([[0.0], [1.0], [-1.0]]), "l1")
    out = normalize_to_one_lipschitz(e)
    np.testing.assert_array_equal(out.points, e.points)


def test_normalize_undoes_scale():
    e = Embedding(star_metric(3), np.array([[0.0], [3.0], [-3.0]]), "l1")
    out = normalize_to_one_lipschitz(e)
    np.testing.assert_allclose(out.points, e.points / 3)
    assert distortion(out) == distortion(e)


def test_normalize_preserves_distortion(rng):
    for _ in range(20):
        pts = rng.normal(size=(5, 3)) + 4.0
        e = Embedding(uniform_metric(5), pts, "l1")
        out = normalize_to_one_lipschitz(e)
        assert np.all(out.points[0] == 0)
        assert lipschitz_constant(out) == pytest.approx(1.0, abs=1e-12)
        assert distortion(out) == pytest.approx(distortion(e), abs=1e-9)


def test_normalize_rejects_collapse():
    e = Embedding(star_metric(3), np.array([[0.0], [0.0], [1.0]]), "l1")
    with pytest.raises(DegenerateEmbeddingError):
        normalize_to_one_lipschitz(e)


def test_embedding_shape_checked():
    with pytest.raises(InvalidArgumentError):
        Embedding(star_metric(3), np.zeros((4, 2)), "l1")
    with pytest.raises(InvalidArgumentError):
        Embedding(star_metric(3), np.zeros((3, 2)), "linf")


def test_pair_ratios_cover_all_pairs():
    e = Embedding(star_metric(4), np.eye(4), "l1")
    assert e.pair_ratios().size == len(list(itertools.combinations(range(4), 2)))
