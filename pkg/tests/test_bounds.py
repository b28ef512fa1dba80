"""Dimension lower-bound evaluators, checked against an exact-integer linear
scan over d that shares no code with the evaluator.
"""
import itertools
import math

import numpy as np
import pytest

from l1lab.bounds import _feasible, evaluate_lower_bound, volume_lower_bound
from l1lab.errors import InvalidArgumentError


def scan_lower_bound(n, eps):
    """Smallest d >= 1 with floor((n-1)/14) <= C(2d+1, s) 3^s, exact integers."""
    target = (n - 1) // 14
    d = 1
    while True:
        ground = 2 * d + 1
        s = math.ceil(224 * eps * (2 * eps + 1 / (n - 1)) * ground)
        if s <= 1:
            ok = target <= ground
        else:
            s = min(s, ground)
            ok = target <= math.comb(ground, s) * 3**s
        if ok:
            return d
        d += 1


def random_pairs(count, seed, n_max=200_000):
    rng = np.random.default_rng(seed)
    pairs = []
    while len(pairs) < count:
        n = int(np.exp(rng.uniform(np.log(300), np.log(n_max))))
        eps = float(rng.uniform(1 / math.sqrt(n), 1 / 16))
        pairs.append((n, eps))
    return pairs


def test_million_point_star():
    n = 2**20
    report = evaluate_lower_bound(n, 0.05)
    assert report.d_lower == scan_lower_bound(n, 0.05)
    assert report.branch == "counting-case"
    assert report.intermediate["constant_C"] == 224
    assert report.intermediate["packing_base"] == 3


@pytest.mark.parametrize("n,eps", random_pairs(30, seed=7))
def test_matches_scan(n, eps):
    assert evaluate_lower_bound(n, eps).d_lower == scan_lower_bound(n, eps)


def test_small_eps_large_n():
    assert evaluate_lower_bound(10**6, 0.001).d_lower == scan_lower_bound(10**6, 0.001)


def test_monotone_in_n():
    for eps in (0.02, 0.05, 1 / 16):
        ns = [int(x) for x in np.geomspace(1 / eps**2 + 1, 10**6, 40)]
        values = [evaluate_lower_bound(n, eps).d_lower for n in ns]
        assert values == sorted(values)


def test_single_atom_branch_closed_form():
    # s <= 1 needs eps far below 1/sqrt(n), so the branch is reached through
    # the feasibility test directly rather than the public evaluator
    n, eps = 2001, 1e-5
    target = (n - 1) // 14
    closed = math.ceil((target - 1) / 2)
    ok, branch, info = _feasible(n, eps, closed)
    assert ok and branch == "single-atom-case" and info["s"] <= 1
    assert not _feasible(n, eps, closed - 1)[0]


def test_argument_ranges():
    with pytest.raises(InvalidArgumentError):
        evaluate_lower_bound(10**6, 0.07)
    with pytest.raises(InvalidArgumentError):
        evaluate_lower_bound(10**6, 0.0)
    with pytest.raises(InvalidArgumentError):
        evaluate_lower_bound(100, 0.05)  # n < 1/eps^2
    assert evaluate_lower_bound(256, 1 / 16).d_lower >= 1


@pytest.mark.parametrize("n,D,expected", [(2, 2.0, 1), (17, 2.0, 2), (10**6, 2.0, 10), (5, 1.5, 2)])
def test_volume_bound(n, D, expected):
    assert volume_lower_bound(n, D) == expected


def test_volume_bound_exact_power():
    # (2D)^d == n - 1 exactly: 4^3 = 64
    assert volume_lower_bound(65, 2.0) == 3
    assert volume_lower_bound(66, 2.0) == 4


def test_volume_ranges():
    with pytest.raises(InvalidArgumentError):
        volume_lower_bound(1, 2.0)
    with pytest.raises(InvalidArgumentError):
        volume_lower_bound(10, 1.0)


@pytest.mark.parametrize("q", [1, 2, 3])
def test_packing_count_on_grid(q):
    """Probability measures on q atoms pairwise at TV >= 1/2 number at most 3^q.

    Exact maximum over a 1/12 grid (largest clique of the TV >= 1/2 graph);
    a grid check of the packing count, not a proof of it.
    """
    import networkx as nx

    steps = 12
    pts = np.array([c for c in itertools.product(range(steps + 1), repeat=q) if sum(c) == steps]) / steps
    tv = 0.5 * np.abs(pts[:, None] - pts[None]).sum(-1)
    g = nx.Graph()
    g.add_nodes_from(range(len(pts)))
    g.add_edges_from(zip(*np.nonzero(np.triu(tv >= 0.5 - 1e-12, 1))))
    assert max(len(c) for c in nx.find_cliques(g)) <= 3**q
