"""Finite measures on the ground set {0, ..., k-1} and total-variation geometry.

Atoms are 0-based.  Total variation between possibly unnormalized measures is
always computed in the overlap form

    TV(mu, nu) = (mu(ground) + nu(ground)) / 2 - min(mu, nu)(ground),

which reduces to ``0.5 * sum|mu_i - nu_i|`` when the two masses agree.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import (
    GroundSetMismatchError,
    InvalidArgumentError,
    InvalidFamilyError,
    ZeroMassError,
)

CLAMP = 1e-15
MASS_TOL = 1e-9
CHECK_TOL = 1e-9


def _clean_weights(w, ndim: int) -> np.ndarray:
    w = np.array(w, dtype=float, copy=True)
    if w.ndim != ndim:
        raise InvalidArgumentError(f"expected a {ndim}-d weight array, got shape {w.shape}")
    if not np.all(np.isfinite(w)):
        raise InvalidArgumentError("weights must be finite")
    if np.any(w < -CLAMP):
        raise InvalidArgumentError("weights must be nonnegative")
    # tiny weights become exact zeros so support sizes are well defined
    w[w < CLAMP] = 0.0
    w.setflags(write=False)
    return w


@dataclass(frozen=True, eq=False)
class FiniteMeasure:
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "weights", _clean_weights(self.weights, 1))

    @property
    def k(self) -> int:
        return self.weights.shape[0]

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    def mass(self, atoms: Iterable[int]) -> float:
        idx = _atom_array(atoms, self.k)
        return float(self.weights[idx].sum())

    def support(self) -> np.ndarray:
        return np.flatnonzero(self.weights > 0)

    def __repr__(self):
        return f"{type(self).__name__}({np.array2string(self.weights, precision=4)})"


class ProbabilityMeasure(FiniteMeasure):
    def __post_init__(self):
        super().__post_init__()
        if abs(self.total_mass - 1.0) > MASS_TOL:
            raise InvalidArgumentError(f"probability measure has mass {self.total_mass}")


def point_mass(atom: int, k: int) -> ProbabilityMeasure:
    w = np.zeros(k)
    w[atom] = 1.0
    return ProbabilityMeasure(w)


def zero_measure(k: int) -> FiniteMeasure:
    return FiniteMeasure(np.zeros(k))


def _same_k(mu: FiniteMeasure, nu: FiniteMeasure) -> None:
    if mu.k != nu.k:
        raise GroundSetMismatchError(f"ground sets differ: k={mu.k} vs k={nu.k}")


def _atom_array(atoms, k: int) -> np.ndarray:
    idx = np.asarray(sorted(set(int(a) for a in atoms)), dtype=np.int64)
    if idx.size and (idx[0] < 0 or idx[-1] >= k):
        raise InvalidArgumentError(f"atom index out of range for k={k}: {idx.tolist()}")
    return idx


def min_measure(mu: FiniteMeasure, nu: FiniteMeasure) -> FiniteMeasure:
    _same_k(mu, nu)
    return FiniteMeasure(np.minimum(mu.weights, nu.weights))


def tv_distance(mu: FiniteMeasure, nu: FiniteMeasure) -> float:
    _same_k(mu, nu)
    overlap = float(np.minimum(mu.weights, nu.weights).sum())
    return 0.5 * (mu.total_mass + nu.total_mass) - overlap


def restrict(mu: FiniteMeasure, atoms: Iterable[int]) -> FiniteMeasure:
    """Keep the weights on ``atoms`` and zero the rest."""
    idx = _atom_array(atoms, mu.k)
    w = np.zeros(mu.k)
    w[idx] = mu.weights[idx]
    return FiniteMeasure(w)


def is_dominated(smaller: FiniteMeasure, larger: FiniteMeasure) -> bool:
    """``smaller(T) <= larger(T)`` for every subset T, i.e. coordinatewise."""
    _same_k(smaller, larger)
    return bool(np.all(smaller.weights <= larger.weights))


def normalize(mu: FiniteMeasure) -> ProbabilityMeasure:
    m = mu.total_mass
    if m <= 0.0:
        raise ZeroMassError("cannot normalize the zero measure")
    return ProbabilityMeasure(mu.weights / m)


def support_size(mu: FiniteMeasure) -> int:
    return int(np.count_nonzero(mu.weights))


@dataclass(frozen=True, eq=False)
class MeasureFamily:
    """Ordered (duplicates allowed) list of measures on a common ground set.

    Stored as a dense ``(len, k)`` weight matrix; row ``a`` is member ``a``.
    """

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim == 1 and w.size == 0:
            w = w.reshape(0, 0)
        object.__setattr__(self, "weights", _clean_weights(w, 2))

    @classmethod
    def from_measures(cls, measures: Sequence[FiniteMeasure], k: Optional[int] = None):
        if not measures:
            if k is None:
                raise InvalidArgumentError("empty family needs an explicit k")
            return cls(np.zeros((0, k)))
        ks = {m.k for m in measures}
        if len(ks) != 1:
            raise GroundSetMismatchError(f"members live on different ground sets: {sorted(ks)}")
        return cls(np.vstack([m.weights for m in measures]))

    @property
    def k(self) -> int:
        return self.weights.shape[1]

    def __len__(self) -> int:
        return self.weights.shape[0]

    def __getitem__(self, a: int) -> FiniteMeasure:
        return FiniteMeasure(self.weights[a])

    def __iter__(self):
        return (self[a] for a in range(len(self)))

    def masses(self) -> np.ndarray:
        return self.weights.sum(axis=1)

    def support_sizes(self) -> np.ndarray:
        return np.count_nonzero(self.weights, axis=1)

    def is_probability_family(self, tol: float = MASS_TOL) -> bool:
        return bool(np.all(np.abs(self.masses() - 1.0) <= tol))

    def subfamily(self, rows: Sequence[int]) -> "MeasureFamily":
        return MeasureFamily(self.weights[np.asarray(rows, dtype=np.int64)].reshape(-1, self.k))


def pairwise_overlap(family: MeasureFamily) -> np.ndarray:
    """Matrix of ``min(mu_a, mu_b)(ground)`` over all pairs of members.

    Sparse families are handled column by column so the cost is the sum of
    squared column supports rather than ``len**2 * k``.
    """
    w = family.weights
    m = w.shape[0]
    out = np.zeros((m, m))
    nnz = np.count_nonzero(w, axis=0)
    if int((nnz.astype(np.int64) ** 2).sum()) <= m * m * w.shape[1]:
        # a column owned by one member only adds to that member's own mass
        out[np.diag_indices(m)] = w.sum(axis=1)
        for i in np.flatnonzero(nnz > 1):
            rows = np.flatnonzero(w[:, i])
            col = w[rows, i]
            block = np.minimum.outer(col, col)
            np.fill_diagonal(block, 0.0)
            out[np.ix_(rows, rows)] += block
    else:
        for a in range(m):
            out[a] = np.minimum(w[a], w).sum(axis=1)
    return out


def pairwise_tv(family: MeasureFamily) -> np.ndarray:
    mass = family.masses()
    return 0.5 * (mass[:, None] + mass[None, :]) - pairwise_overlap(family)


@dataclass(frozen=True)
class Unrelatedness:
    """Outcome of an eps-unrelatedness check.

    ``slack`` is ``TV - ((mass_a + mass_b)/2 - eps)`` at ``pair``: the first
    violating pair when the check fails, the tightest pair otherwise.
    """

    holds: bool
    pair: Optional[tuple]
    slack: float

    def __bool__(self):
        return self.holds


def unrelated_slack(family: MeasureFamily, eps: float) -> np.ndarray:
    """Slack matrix of the unrelatedness inequality (diagonal set to +inf)."""
    mass = family.masses()
    slack = pairwise_tv(family) - (0.5 * (mass[:, None] + mass[None, :]) - eps)
    np.fill_diagonal(slack, np.inf)
    return slack


def is_unrelated(family: MeasureFamily, eps: float, tol: float = CHECK_TOL) -> Unrelatedness:
    if eps < 0:
        raise InvalidArgumentError(f"eps must be nonnegative, got {eps}")
    if len(family) < 2:
        return Unrelatedness(True, None, float("inf"))
    slack = unrelated_slack(family, eps)
    bad = np.argwhere(slack < -tol)
    if bad.size:
        a, b = (int(x) for x in bad[0])
        return Unrelatedness(False, (a, b), float(slack[a, b]))
    a, b = np.unravel_index(int(np.argmin(slack)), slack.shape)
    return Unrelatedness(True, (int(a), int(b)), float(slack[a, b]))


def delta_columns(weights: np.ndarray) -> np.ndarray:
    """Per-atom value of the pairwise-overlap sum over ordered distinct pairs.

    For a column sorted as a_1 >= a_2 >= ... the ordered double sum of
    ``min(a_i, a_j)`` equals ``sum_i 2 (i - 1) a_i``.
    """
    m = weights.shape[0]
    ranked = -np.sort(-weights, axis=0)
    coef = 2.0 * np.arange(m)
    return coef @ ranked


def delta_family(family: MeasureFamily) -> FiniteMeasure:
    """Sum of ``min(mu, nu)`` over ordered pairs of distinct members."""
    if len(family) < 2:
        raise InvalidFamilyError("delta needs at least two members")
    return FiniteMeasure(delta_columns(family.weights))


def check_delta_bound(family: MeasureFamily, eps: float, tol: float = CHECK_TOL) -> bool:
    """For an eps-unrelated probability family: total delta <= eps |S| (|S| - 1)."""
    if not family.is_probability_family():
        raise InvalidFamilyError("delta bound applies to probability families only")
    s = len(family)
    if s < 2:
        return True
    return delta_family(family).total_mass <= eps * s * (s - 1) + tol
