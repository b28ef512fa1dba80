"""From a star embedding to a sparse 1/2-unrelated family, with certificates.

The chain is

    embedding --(positive/negative parts)--> eps-unrelated probability family S1
      --(Markov + top-k column selection)--> S2   (mass <= 1, many atoms pruned)
      --(mass filter + support filter)-----> S3   (mass >= 1/8, small support)
      --(keep heaviest atoms, renormalize)-> S4   (1/2-unrelated, small support)

Every stage records the inequalities it relies on as :class:`Check` rows,
and :func:`verify_certificate` recomputes them from the stored families.
Atoms and member indices are 0-based throughout.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import (
    CertificateViolation,
    InvalidArgumentError,
    InvalidFamilyError,
    InvalidSourceError,
    NotAnEmbeddingError,
)
from .measures import (
    CHECK_TOL,
    MeasureFamily,
    delta_columns,
    is_unrelated,
    unrelated_slack,
)
from .metric import Embedding, distortion, is_star, normalize_to_one_lipschitz

TOP_LEVEL_MAX_EPS = 1 / 16
STAGE_MAX_EPS = 1 / 8
# the constant of the support bound, 16 * 14 as derived in the proof
SUPPORT_CONSTANT = 224


@dataclass(frozen=True)
class Check:
    name: str
    lhs: float
    rhs: float
    relation: str
    passed: bool

    @classmethod
    def make(cls, name: str, lhs, relation: str, rhs, tol: float = CHECK_TOL) -> "Check":
        lhs, rhs = float(lhs), float(rhs)
        if relation == "<=":
            ok = lhs <= rhs + tol
        elif relation == ">=":
            ok = lhs >= rhs - tol
        elif relation == "<":
            ok = lhs < rhs + tol
        else:
            raise ValueError(f"unknown relation {relation!r}")
        return cls(name, lhs, rhs, relation, bool(ok))

    def to_dict(self) -> dict:
        return {"name": self.name, "lhs": self.lhs, "rhs": self.rhs,
                "relation": self.relation, "pass": self.passed}

    @classmethod
    def from_dict(cls, d: dict) -> "Check":
        return cls(d["name"], float(d["lhs"]), float(d["rhs"]), d.get("relation", "<="), bool(d["pass"]))


def _raise_failed(checks: Sequence[Check], stage: str) -> None:
    for c in checks:
        if not c.passed:
            raise CertificateViolation(c, stage)


def _min_slack(family: MeasureFamily, eps: float) -> float:
    if len(family) < 2:
        return 0.0
    return float(unrelated_slack(family, eps).min())


# --------------------------------------------------------------------------
# top-k selection


class Selection(NamedTuple):
    indices: list
    total: float
    precondition_held: bool


def _top_indices(values: np.ndarray, count: int) -> np.ndarray:
    """Indices of the ``count`` largest values, ties broken by lower index."""
    order = np.lexsort((np.arange(values.size), -values))
    return order[:count]


def pairwise_min_sum(values: np.ndarray) -> float:
    """sum over ordered pairs i != j of min(x_i, x_j) = sum_i 2 (i-1) a_i (sorted desc)."""
    return float(delta_columns(np.asarray(values, dtype=float)[:, None])[0])


def sparse_select(values: Sequence[float], delta: float) -> Selection:
    """Keep the ``ceil(delta (|S| - 1))`` largest entries of a multiset.

    ``precondition_held`` reports whether
    ``delta (|S|-1) sum(S) >= sum_{i != j} min(x_i, x_j)``; when it holds the
    kept entries carry at least half of the total, which is asserted.
    """
    x = np.asarray(values, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise InvalidArgumentError("sparse_select needs at least two values")
    if not 0 < delta < 1:
        raise InvalidArgumentError(f"delta must lie in (0, 1), got {delta}")
    if np.any(x < 0):
        raise InvalidArgumentError("values must be nonnegative")
    count = math.ceil(delta * (x.size - 1))
    idx = _top_indices(x, count)
    total = math.fsum(x[idx])
    whole = math.fsum(x)
    held = delta * (x.size - 1) * whole >= pairwise_min_sum(x)
    if held:
        c = Check.make("sparse_select.half_mass", total, ">=", 0.5 * whole)
        if not c.passed:
            raise CertificateViolation(c, "sparse_select")
    return Selection([int(i) for i in idx], total, bool(held))


# --------------------------------------------------------------------------
# entry: embedding -> measures


def embedding_to_measures(e: Embedding, eps: float) -> MeasureFamily:
    """Probability measures on 2k+1 atoms, one per leaf of a star embedding.

    After translating the center (point 0) to the origin and rescaling to
    1-Lipschitz, leaf v gets weights ``max(0, f(v)_i)`` on atoms ``0..k-1``,
    ``max(0, -f(v)_i)`` on atoms ``k..2k-1`` and ``1 - ||f(v)||_1`` on atom 2k.
    The family is eps-unrelated when the distortion is at most 1+eps.
    """
    if e.norm != "l1":
        raise InvalidSourceError("expected an l1 embedding")
    if not is_star(e.source):
        raise InvalidSourceError("embedding source is not a star with center 0")
    dist = distortion(e)
    if not dist <= 1 + eps + CHECK_TOL:
        raise NotAnEmbeddingError(f"distortion {dist} exceeds 1 + {eps}", dist)
    f = normalize_to_one_lipschitz(e, base=0).points[1:]
    k = f.shape[1]
    w = np.empty((f.shape[0], 2 * k + 1))
    w[:, :k] = np.maximum(f, 0.0)
    w[:, k : 2 * k] = np.maximum(-f, 0.0)
    w[:, 2 * k] = np.maximum(1.0 - np.abs(f).sum(axis=1), 0.0)
    return MeasureFamily(w)


def entry_checks(S1: MeasureFamily, eps: float) -> list[Check]:
    return [
        Check.make("I.probability", float(np.abs(S1.masses() - 1.0).max(initial=0.0)), "<=", 0.0),
        Check.make("I.unrelated", _min_slack(S1, eps), ">=", 0.0),
    ]


# --------------------------------------------------------------------------
# stage I => II


def _markov_set(S1: MeasureFamily, eps: float) -> np.ndarray:
    col_mass = S1.weights.sum(axis=0)
    delta = delta_columns(S1.weights)
    # multiplied form: zero columns (0/0) are admitted
    return np.flatnonzero(delta <= 2 * eps * (len(S1) - 1) * col_mass)


def _witness_size(eps: float, size: int) -> int:
    # ceil(2 eps (|S|-1)) is at least 1 for every eps > 0; eps = 0 takes that limit
    return min(size, max(1, math.ceil(2 * eps * (size - 1))))


def _witness_sets(S1: MeasureFamily, A: np.ndarray, eps: float) -> dict:
    size = _witness_size(eps, len(S1))
    W = {}
    for i in A:
        col = S1.weights[:, i]
        if not col.any():
            W[int(i)] = []
            continue
        if 0 < 2 * eps < 1:
            sel = sparse_select(col, 2 * eps)
            W[int(i)] = sorted(sel.indices)
        else:
            W[int(i)] = sorted(int(x) for x in _top_indices(col, size))
    return W


def _restriction_sets(W: dict, members: int) -> list[list]:
    Y = [[] for _ in range(members)]
    for i in sorted(W):
        for a in W[i]:
            Y[a].append(i)
    return Y


def _restrict_rows(weights: np.ndarray, sets: Sequence[Sequence[int]]) -> np.ndarray:
    out = np.zeros_like(weights)
    for a, atoms in enumerate(sets):
        idx = np.asarray(atoms, dtype=np.int64)
        out[a, idx] = weights[a, idx]
    return out


def stage_two_checks(S1, S2, A, W, Y, eps) -> list[Check]:
    n, k = len(S1), S1.k
    A = np.asarray(A, dtype=np.int64)
    A_ref = _markov_set(S1, eps)
    W_ref = _witness_sets(S1, A_ref, eps)
    col = S1.weights.sum(axis=0)
    half = [
        sum(S1.weights[a, i] for a in W[i]) - 0.5 * col[i] for i in A
    ]
    mass = S2.masses()
    return [
        Check.make("II.A_definition", len(set(A.tolist()) ^ set(A_ref.tolist())), "<=", 0),
        Check.make("II.A_mass", S1.weights[:, A].sum() / n, ">=", 0.5),
        Check.make("II.W_definition",
                   sum(W.get(i) != W_ref[i] for i in W_ref) + len(set(W) ^ set(W_ref)), "<=", 0),
        Check.make("II.W_size", max((len(W[i]) for i in W), default=0), "<=",
                   _witness_size(eps, n)),
        Check.make("II.W_half_mass", min(half, default=0.0), ">=", 0.0),
        Check.make("II.Y_definition",
                   sum(sorted(y) != r for y, r in zip(Y, _restriction_sets(W, n))), "<=", 0),
        Check.make("II.restriction",
                   float(np.abs(S2.weights - _restrict_rows(S1.weights, Y)).max(initial=0.0)),
                   "<=", 0.0),
        Check.make("II(a).mass_at_most_one", mass.max(initial=0.0), "<=", 1.0),
        Check.make("II(b).total_mass", mass.sum(), ">=", n / 4),
        Check.make("II(c).total_support", int(S2.support_sizes().sum()), "<", (2 * eps * n + 1) * k),
        Check.make("II.unrelated", _min_slack(S2, eps), ">=", 0.0),
    ]


@dataclass(frozen=True)
class StageTwo:
    family: MeasureFamily
    A: list
    W: dict
    Y: list
    checks: list


def stage_one_to_two(S1: MeasureFamily, eps: float) -> StageTwo:
    """Prune every measure to the atoms where it is among the heaviest few."""
    if len(S1) < 2:
        raise InvalidFamilyError("stage I needs at least two measures")
    if not 0 <= eps <= STAGE_MAX_EPS:
        raise InvalidArgumentError(f"stage eps must lie in [0, 1/8], got {eps}")
    if not S1.is_probability_family():
        raise InvalidFamilyError("stage I expects probability measures")
    pre = is_unrelated(S1, eps)
    if not pre:
        raise CertificateViolation(Check.make("I.unrelated", pre.slack, ">=", 0.0), "I=>II")
    A = _markov_set(S1, eps)
    W = _witness_sets(S1, A, eps)
    Y = _restriction_sets(W, len(S1))
    S2 = MeasureFamily(_restrict_rows(S1.weights, Y))
    checks = stage_two_checks(S1, S2, A, W, Y, eps)
    _raise_failed(checks, "I=>II")
    return StageTwo(S2, [int(i) for i in A], W, Y, checks)


# --------------------------------------------------------------------------
# stage II => III


def _stage_three_selection(S2: MeasureFamily) -> tuple[np.ndarray, np.ndarray]:
    heavy = np.flatnonzero(S2.masses() >= 1 / 8)
    if heavy.size == 0:
        return heavy, heavy
    supp = S2.support_sizes()
    threshold = 2 * supp.sum() / heavy.size
    return heavy, heavy[supp[heavy] <= threshold]


def stage_three_checks(S2, S3, survivors, eps, n) -> list[Check]:
    k = S2.k
    heavy, ref = _stage_three_selection(S2)
    survivors = np.asarray(survivors, dtype=np.int64)
    same = survivors.size == ref.size and np.array_equal(survivors, ref)
    valid = survivors.size == 0 or (survivors.min() >= 0 and survivors.max() < len(S2))
    if valid and S3.weights.shape == (survivors.size, k):
        copy_err = float(np.abs(S3.weights - S2.weights[survivors]).max(initial=0.0))
    else:
        copy_err = float("inf")
    return [
        Check.make("III.selection", 0 if same else 1, "<=", 0),
        Check.make("III.copy", copy_err, "<=", 0.0),
        Check.make("III.heavy_count", heavy.size, ">=", len(S2) / 7),
        Check.make("III.markov_half", len(S3), ">=", heavy.size / 2),
        Check.make("III.size", len(S3), ">=", len(S2) / 14),
        Check.make("III(a).support", S3.support_sizes().max(initial=0), "<", 14 * k * (2 * eps + 1 / n)),
        Check.make("III(b).mass", S3.masses().min(initial=np.inf) if len(S3) else 1.0, ">=", 1 / 8),
        Check.make("III.unrelated", _min_slack(S3, eps), ">=", 0.0),
    ]


@dataclass(frozen=True)
class StageThree:
    family: MeasureFamily
    survivors: list
    checks: list


def stage_two_to_three(S2: MeasureFamily, eps: float, n: int) -> StageThree:
    """Keep measures with mass >= 1/8 and at most twice the average support."""
    if not 0 <= eps <= STAGE_MAX_EPS:
        raise InvalidArgumentError(f"stage eps must lie in [0, 1/8], got {eps}")
    _, survivors = _stage_three_selection(S2)
    S3 = S2.subfamily(survivors)
    checks = stage_three_checks(S2, S3, survivors, eps, n)
    _raise_failed(checks, "II=>III")
    return StageThree(S3, [int(a) for a in survivors], checks)


# --------------------------------------------------------------------------
# stage III => IV


def truncation_size(eps: float, n: int, k: int) -> int:
    """Number of atoms kept per measure: ceil(16 eps * 14 k (2 eps + 1/n)), at least 1."""
    return min(k, max(1, math.ceil(SUPPORT_CONSTANT * eps * (2 * eps + 1 / n) * k)))


def _truncation_sets(S3: MeasureFamily, z: int) -> list[list]:
    return [np.sort(_top_indices(S3.weights[a], z)).tolist() for a in range(len(S3))]


def _normalized_rows(weights: np.ndarray, Z) -> np.ndarray:
    kept = _restrict_rows(weights, Z)
    mass = kept.sum(axis=1, keepdims=True)
    return kept / np.where(mass > 0, mass, 1.0)


def stage_four_checks(S3, S4, Z, eps, n) -> list[Check]:
    k = S3.k
    z = truncation_size(eps, n, k)
    kept_mass = [float(S3.weights[a, list(Zm)].sum()) for a, Zm in enumerate(Z)]
    return [
        Check.make("IV.Z_definition",
                   sum(list(zm) != r for zm, r in zip(Z, _truncation_sets(S3, z))) + abs(len(Z) - len(S3)),
                   "<=", 0),
        Check.make("IV.Z_mass", min(kept_mass, default=1.0), ">=", 2 * eps),
        Check.make("IV.normalization",
                   float(np.abs(S4.weights - _normalized_rows(S3.weights, Z)).max(initial=0.0)),
                   "<=", 0.0),
        Check.make("IV.probability", float(np.abs(S4.masses() - 1.0).max(initial=0.0)), "<=", 0.0),
        Check.make("IV.support", S4.support_sizes().max(initial=0), "<=", z),
        Check.make("IV.size", len(S4), ">=", math.floor(n / 14)),
        Check.make("IV.half_unrelated", _min_slack(S4, 0.5), ">=", 0.0),
    ]


@dataclass(frozen=True)
class StageFour:
    family: MeasureFamily
    Z: list
    checks: list


def stage_three_to_four(S3: MeasureFamily, eps: float, n: int, k: Optional[int] = None) -> StageFour:
    """Keep each measure's heaviest atoms and renormalize to probability measures."""
    if not 0 <= eps <= STAGE_MAX_EPS:
        raise InvalidArgumentError(f"stage eps must lie in [0, 1/8], got {eps}")
    if k is not None and k != S3.k:
        raise InvalidArgumentError(f"k={k} does not match the family's ground set {S3.k}")
    Z = _truncation_sets(S3, truncation_size(eps, n, S3.k))
    S4 = MeasureFamily(_normalized_rows(S3.weights, Z))
    checks = stage_four_checks(S3, S4, Z, eps, n)
    _raise_failed(checks, "III=>IV")
    return StageFour(S4, Z, checks)


# --------------------------------------------------------------------------
# certificates


@dataclass(frozen=True, eq=False)
class PipelineCertificate:
    eps: float
    n: int
    k: int
    families: tuple
    A: list
    W: dict
    Y: list
    survivors: list
    Z: list
    checks: list = field(default_factory=list)

    @property
    def final_family(self) -> MeasureFamily:
        return self.families[3]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "eps": self.eps,
            "n": self.n,
            "k": self.k,
            "stage_families": [{"k": f.k, "measures": f.weights.tolist()} for f in self.families],
            "coordinate_set_A": sorted(self.A),
            "witness_sets_W": {str(i): sorted(self.W[i]) for i in sorted(self.W)},
            "restriction_sets_Y": [sorted(y) for y in self.Y],
            "survivors": list(self.survivors),
            "truncation_sets_Z": [sorted(z) for z in self.Z],
            "checks": [c.to_dict() for c in self.checks],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineCertificate":
        fams = tuple(
            MeasureFamily(np.asarray(f["measures"], dtype=float).reshape(-1, int(f["k"])))
            for f in d["stage_families"]
        )
        return cls(
            eps=float(d["eps"]), n=int(d["n"]), k=int(d["k"]), families=fams,
            A=[int(i) for i in d["coordinate_set_A"]],
            W={int(i): [int(a) for a in v] for i, v in d["witness_sets_W"].items()},
            Y=[[int(i) for i in y] for y in d["restriction_sets_Y"]],
            survivors=[int(a) for a in d["survivors"]],
            Z=[[int(i) for i in z] for z in d["truncation_sets_Z"]],
            checks=[Check.from_dict(c) for c in d["checks"]],
        )


def _cardinality_check(families) -> Check:
    sizes = [len(f) for f in families]
    increases = sum(b > a for a, b in zip(sizes, sizes[1:]))
    return Check.make("cardinality_monotone", increases, "<=", 0)


def run_families(S1: MeasureFamily, eps: float) -> PipelineCertificate:
    """Run the three stages on an eps-unrelated probability family."""
    n = len(S1)
    checks = entry_checks(S1, eps)
    _raise_failed(checks, "entry")
    two = stage_one_to_two(S1, eps)
    three = stage_two_to_three(two.family, eps, n)
    four = stage_three_to_four(three.family, eps, n, S1.k)
    families = (S1, two.family, three.family, four.family)
    checks = checks + two.checks + three.checks + four.checks + [_cardinality_check(families)]
    _raise_failed(checks[-1:], "summary")
    return PipelineCertificate(eps, n, S1.k, families, two.A, two.W, two.Y,
                               three.survivors, four.Z, checks)


def run_pipeline(e: Embedding, eps: float) -> PipelineCertificate:
    """Certified chain from a (1+eps)-embedding of a star to the final family."""
    if not 0 <= eps <= TOP_LEVEL_MAX_EPS:
        raise InvalidArgumentError(f"eps must lie in [0, 1/16], got {eps}")
    S1 = embedding_to_measures(e, eps)
    if len(S1) < 2:
        raise InvalidFamilyError("the star needs at least two leaves")
    return run_families(S1, eps)


class Verification(NamedTuple):
    ok: bool
    failures: list

    def __bool__(self):
        return self.ok


def _recompute(c: PipelineCertificate) -> dict:
    S1, S2, S3, S4 = c.families
    checks = (
        entry_checks(S1, c.eps)
        + stage_two_checks(S1, S2, c.A, c.W, c.Y, c.eps)
        + stage_three_checks(S2, S3, c.survivors, c.eps, c.n)
        + stage_four_checks(S3, S4, c.Z, c.eps, c.n)
        + [_cardinality_check(c.families)]
    )
    return {ch.name: ch for ch in checks}


def verify_certificate(c: PipelineCertificate, tol: float = CHECK_TOL) -> Verification:
    """Recompute every recorded check from the stored families and index sets."""
    if not c.checks:
        return Verification(True, [])
    try:
        fresh = _recompute(c)
    except Exception as exc:  # malformed certificates are reported, not raised
        return Verification(False, [f"recompute: {type(exc).__name__}: {exc}"])
    failures = []
    for rec in c.checks:
        new = fresh.get(rec.name)
        if new is None:
            failures.append(f"{rec.name}: unknown check")
        elif not new.passed:
            failures.append(f"{rec.name}: fails on recomputation (lhs={new.lhs!r}, rhs={new.rhs!r})")
        elif abs(new.lhs - rec.lhs) > tol or abs(new.rhs - rec.rhs) > tol:
            failures.append(f"{rec.name}: recorded values differ from recomputation")
        elif not rec.passed:
            failures.append(f"{rec.name}: recorded as failed")
    return Verification(not failures, failures)
