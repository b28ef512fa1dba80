"""Closed-form dimension lower bounds for (1+eps)-embeddings of the n-star.

``evaluate_lower_bound`` makes the counting step of the lower-bound proof
explicit: after the reduction there are at least floor((n-1)/14) probability
measures on 2d+1 atoms, pairwise at TV distance >= 1/2, each supported on at
most ``s = ceil(224 eps (2 eps + 1/(n-1)) (2d+1))`` atoms.  Counting supports
(``C(2d+1, s)``) times the packing count per support (``3^s``) must be at
least the family size, so the smallest d where that is possible is a lower
bound.  The constants 224 and 3 are used as stated, not optimized.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import InvalidArgumentError
from .pipeline import SUPPORT_CONSTANT

PACKING_BASE = 3
CONSTANTS_NOTE = "as-stated constants, not optimized"


@dataclass(frozen=True)
class BoundReport:
    n: int
    eps: float
    d_lower: int
    branch: str
    intermediate: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"n": self.n, "eps": self.eps, "d_lower": self.d_lower,
                "branch": self.branch, "intermediate": dict(self.intermediate)}


def family_size(n: int) -> int:
    return (n - 1) // 14


def support_bound(n: int, eps: float, d: int) -> int:
    return math.ceil(SUPPORT_CONSTANT * eps * (2 * eps + 1 / (n - 1)) * (2 * d + 1))


def _log_count(ground: int, s: int) -> float:
    s = min(s, ground)
    log_binom = math.lgamma(ground + 1) - math.lgamma(s + 1) - math.lgamma(ground - s + 1)
    return log_binom + s * math.log(PACKING_BASE)


def _feasible(n: int, eps: float, d: int) -> tuple[bool, str, dict]:
    """Whether floor((n-1)/14) measures fit the counting bound at dimension d."""
    target = family_size(n)
    ground = 2 * d + 1
    s = support_bound(n, eps, d)
    info = {"s": s, "ground_set": ground, "family_size": target}
    if s <= 1:
        return target <= ground, "single-atom-case", info
    s_eff = min(s, ground)
    log_count = _log_count(ground, s_eff)
    info["log_count"] = log_count
    if target <= 0:
        return True, "counting-case", info
    gap = log_count - math.log(target)
    if abs(gap) < 1e-9:
        # too close for floating point: settle it with integers
        return math.comb(ground, s_eff) * PACKING_BASE**s_eff >= target, "counting-case", info
    return gap >= 0, "counting-case", info


def evaluate_lower_bound(n: int, eps: float) -> BoundReport:
    """Smallest d at which the counting inequality can hold (at least 1).

    eps = 1/16 is admitted so the evaluator covers the same range as the
    certified reduction.
    """
    if not 0 < eps <= 1 / 16:
        raise InvalidArgumentError(f"eps must lie in (0, 1/16], got {eps}")
    if n * eps * eps < 1:
        raise InvalidArgumentError(f"need n >= 1/eps^2 = {1 / eps**2:.1f}, got n={n}")
    hi = 1
    while not _feasible(n, eps, hi)[0]:
        hi *= 2
    lo = hi // 2  # infeasible, or 0 when hi == 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _feasible(n, eps, mid)[0]:
            hi = mid
        else:
            lo = mid
    _, branch, info = _feasible(n, eps, hi)
    info.update(constant_C=SUPPORT_CONSTANT, packing_base=PACKING_BASE, note=CONSTANTS_NOTE)
    return BoundReport(int(n), float(eps), int(hi), branch, info)


def volume_lower_bound(n: int, D: float) -> int:
    """Smallest d >= 1 with (2D)^d >= n - 1 (ball packing in l1^d)."""
    if n < 2:
        raise InvalidArgumentError(f"need n >= 2, got {n}")
    if not D > 1:
        raise InvalidArgumentError(f"need distortion D > 1, got {D}")
    base = 2.0 * D
    d = max(1, math.ceil(math.log(n - 1) / math.log(base))) if n > 2 else 1
    while d > 1 and base ** (d - 1) >= n - 1:
        d -= 1
    while base**d < n - 1:
        d += 1
    return d


def volume_report(n: int, D: float) -> BoundReport:
    d = volume_lower_bound(n, D)
    return BoundReport(int(n), float(D) - 1.0, d, "volume",
                       {"D": float(D), "packing_count_per_dim": 2.0 * D})
