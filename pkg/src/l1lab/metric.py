"""Finite metric spaces (stars, complete k-ary trees) and embeddings of them.

Points are identified by their index; labels are for display only.  All
generated trees have unit edge weights, so their distance tables hold exact
integers stored as doubles.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.spatial.distance import pdist

from .errors import (
    DegenerateEmbeddingError,
    InvalidArgumentError,
    ResourceLimitError,
)

DEFAULT_SIZE_LIMIT = 10**5
ABS_TOL = 1e-9

NORMS = ("l1", "l2")


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FiniteMetricSpace:
    """``n`` points with a full symmetric distance table."""

    dist: np.ndarray
    labels: Optional[tuple] = None
    name: str = "metric"

    def __post_init__(self):
        d = np.asarray(self.dist, dtype=float)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise InvalidArgumentError(f"distance table must be square, got {d.shape}")
        object.__setattr__(self, "dist", _frozen(d))
        self._check_table()
        if self.labels is not None:
            if len(self.labels) != d.shape[0]:
                raise InvalidArgumentError("one label per point required")
            object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    def condensed(self) -> np.ndarray:
        """Distances of the pairs (i, j), i < j, in ``pdist`` order."""
        i, j = np.triu_indices(self.n, k=1)
        return self.dist[i, j]

    def _check_table(self, tol: float = ABS_TOL) -> None:
        d = self.dist
        if not np.all(np.isfinite(d)):
            raise InvalidArgumentError("distances must be finite")
        if np.any(np.abs(np.diag(d)) > tol):
            raise InvalidArgumentError("dist(i, i) must be 0")
        if np.any(np.abs(d - d.T) > tol):
            raise InvalidArgumentError("distance table is not symmetric")
        off = ~np.eye(self.n, dtype=bool)
        if np.any(d[off] <= tol):
            raise InvalidArgumentError("distinct points must be at positive distance")

    def validate(self, tol: float = ABS_TOL) -> None:
        """Raise if the table is not a metric (O(n^3) triangle check)."""
        d = self.dist
        self._check_table(tol)
        for m in range(self.n):
            # d[i, j] <= d[i, m] + d[m, j] for all i, j
            if np.any(d > d[:, m : m + 1] + d[m : m + 1, :] + tol):
                raise InvalidArgumentError(f"triangle inequality fails through point {m}")

    def is_valid(self) -> bool:
        try:
            self.validate()
        except InvalidArgumentError:
            return False
        return True


def star_metric(n: int) -> FiniteMetricSpace:
    """The n-point star: point 0 is the center, points 1..n-1 are leaves."""
    if n < 2:
        raise InvalidArgumentError(f"a star needs n >= 2 points, got {n}")
    d = np.full((n, n), 2.0)
    d[0, :] = 1.0
    d[:, 0] = 1.0
    np.fill_diagonal(d, 0.0)
    return FiniteMetricSpace(d, name=f"star({n})")


def uniform_metric(n: int, scale: float = 2.0) -> FiniteMetricSpace:
    """n points at mutual distance ``scale`` (the metric of e_1, ..., e_n in l1)."""
    if n < 2:
        raise InvalidArgumentError(f"need n >= 2 points, got {n}")
    d = np.full((n, n), float(scale))
    np.fill_diagonal(d, 0.0)
    return FiniteMetricSpace(d, name=f"uniform({n})")


def kary_tree_size(k: int, h: int) -> int:
    return (k ** (h + 1) - 1) // (k - 1)


def kary_tree_depths(k: int, h: int) -> np.ndarray:
    """Depth of every node of the complete k-ary tree in heap order (root = 0)."""
    return np.repeat(np.arange(h + 1), [k**level for level in range(h + 1)])


def kary_tree_parent(v: int, k: int) -> int:
    return (v - 1) // k


def kary_tree_first_leaf(v: int, k: int, h: int) -> int:
    """Leaf reached from ``v`` by always descending to the first child."""
    depth = kary_tree_depths(k, h)[v]
    for _ in range(h - depth):
        v = k * v + 1
    return v


def kary_tree_metric(k: int, h: int, max_points: int = DEFAULT_SIZE_LIMIT) -> FiniteMetricSpace:
    """Shortest-path metric of the complete k-ary tree of height ``h``.

    Nodes are numbered in heap order: the root is 0 and the children of node
    ``v`` are ``k*v + 1, ..., k*v + k``.  The root has height (depth) zero.
    """
    if k < 2 or h < 1:
        raise InvalidArgumentError(f"need k >= 2 and h >= 1, got k={k}, h={h}")
    n = kary_tree_size(k, h)
    if n > max_points:
        raise ResourceLimitError(f"tree has {n} nodes, limit is {max_points}")
    depth = kary_tree_depths(k, h)
    # anc[v, l] = ancestor of v at depth l (or -1 when l > depth(v))
    anc = np.full((n, h + 1), -1, dtype=np.int64)
    nodes = np.arange(n)
    for level in range(h, -1, -1):
        at = depth == level
        anc[at, level] = nodes[at]
        if level < h:
            deeper = depth > level
            anc[deeper, level] = (anc[deeper, level + 1] - 1) // k
    common = np.zeros((n, n), dtype=np.int64)
    for level in range(h + 1):
        col = anc[:, level]
        common += (col[:, None] == col[None, :]) & (col[:, None] >= 0)
    lca_depth = common - 1
    dist = depth[:, None] + depth[None, :] - 2 * lca_depth
    labels = tuple(f"d{dp}:{v}" for v, dp in zip(nodes, depth))
    return FiniteMetricSpace(dist.astype(float), labels=labels, name=f"tree(k={k},h={h})")


def infer_kary_tree(metric: FiniteMetricSpace) -> tuple[int, int]:
    """Recover (k, h) from a metric produced by :func:`kary_tree_metric`."""
    d0 = metric.dist[0]
    k = int(np.sum(d0 == 1.0))
    h = int(round(d0.max()))
    if k < 2 or h < 1 or kary_tree_size(k, h) != metric.n:
        raise InvalidArgumentError("metric is not a complete k-ary tree in heap order")
    if not np.array_equal(metric.dist, kary_tree_metric(k, h).dist):
        raise InvalidArgumentError("metric is not a complete k-ary tree in heap order")
    return k, h


def is_star(metric: FiniteMetricSpace) -> bool:
    return metric.n >= 2 and np.array_equal(metric.dist, star_metric(metric.n).dist)


@dataclass(frozen=True, eq=False)
class Embedding:
    """Images of the points of ``source`` in R^dim under the l1 or l2 norm."""

    source: FiniteMetricSpace
    points: np.ndarray
    norm: str = "l1"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        p = np.asarray(self.points, dtype=float)
        if p.ndim == 1:
            p = p[:, None]
        if p.ndim != 2 or p.shape[0] != self.source.n:
            raise InvalidArgumentError(
                f"need one vector per source point ({self.source.n}), got shape {p.shape}"
            )
        if not np.all(np.isfinite(p)):
            raise InvalidArgumentError("embedding coordinates must be finite")
        if self.norm not in NORMS:
            raise InvalidArgumentError(f"norm must be one of {NORMS}, got {self.norm!r}")
        object.__setattr__(self, "points", _frozen(p))

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def image_distances(self) -> np.ndarray:
        """Condensed pairwise image distances, aligned with ``source.condensed()``."""
        metric = "cityblock" if self.norm == "l1" else "euclidean"
        return pdist(self.points, metric=metric)

    def pair_ratios(self) -> np.ndarray:
        return self.image_distances() / self.source.condensed()


def _check_pairs(e: Embedding) -> None:
    if e.source.n < 2:
        raise InvalidArgumentError("source needs at least 2 points")


def lipschitz_constant(e: Embedding) -> float:
    """max over distinct pairs of image distance / source distance."""
    _check_pairs(e)
    return float(e.pair_ratios().max())


def inverse_lipschitz_constant(e: Embedding) -> float:
    _check_pairs(e)
    r = e.pair_ratios()
    if np.any(r == 0.0):
        return float("inf")
    return float((1.0 / r).max())


def distortion(e: Embedding) -> float:
    """Bi-Lipschitz distortion ``||f||_Lip * ||f^-1||_Lip``; ``inf`` if not injective."""
    _check_pairs(e)
    r = e.pair_ratios()
    if np.any(r == 0.0):
        return float("inf")
    return float(r.max() * (1.0 / r).max())


def normalize_to_one_lipschitz(e: Embedding, base: int = 0) -> Embedding:
    """Translate ``base`` to the origin and rescale so the Lipschitz constant is 1."""
    if not 0 <= base < e.n:
        raise InvalidArgumentError(f"base point {base} out of range")
    if distortion(e) == float("inf"):
        raise DegenerateEmbeddingError("cannot normalize a non-injective map")
    shifted = e.points - e.points[base]
    lip = float((e.image_distances() / e.source.condensed()).max())
    return Embedding(e.source, shifted / lip, e.norm, dict(e.meta))


def brute_force_distortion(points: Sequence, dist: np.ndarray, norm: str = "l1") -> float:
    """Pair-by-pair distortion with plain Python loops; a test oracle."""
    pts = [np.asarray(p, dtype=float) for p in points]
    hi, inv_hi = 0.0, 0.0
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            diff = pts[i] - pts[j]
            img = float(np.abs(diff).sum()) if norm == "l1" else float(np.sqrt((diff**2).sum()))
            if img == 0.0:
                return float("inf")
            hi = max(hi, img / dist[i][j])
            inv_hi = max(inv_hi, dist[i][j] / img)
    return hi * inv_hi
