"""Upper-bound constructions: star and tree embeddings, the tree-to-star
reduction, and the square-root (snowflake) composition into l2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import (
    CalibrationError,
    DegenerateEmbeddingError,
    InvalidArgumentError,
    InvalidSourceError,
    NotAnEmbeddingError,
)
from .metric import (
    Embedding,
    distortion,
    infer_kary_tree,
    kary_tree_depths,
    kary_tree_first_leaf,
    kary_tree_metric,
    lipschitz_constant,
    normalize_to_one_lipschitz,
    star_metric,
    uniform_metric,
)

REL_TOL = 1e-6


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator (Philox) keyed by a 64-bit seed."""
    return np.random.Generator(np.random.Philox(key=int(seed) % 2**64))


# --------------------------------------------------------------------------
# stars


def default_star_parameters(n: int, eps: float) -> tuple[int, int]:
    """Default ``(d, support_size)`` for a (1+eps)-embedding of the n-star.

    Supports of size ``m = ceil(8 ln n / eps)`` inside ``d = ceil(4 m / eps)``
    coordinates: two random supports overlap in ``m^2/d = eps m / 4`` atoms on
    average, leaving room for the maximum over all pairs to stay below
    ``eps/(1+eps)`` of the support.
    """
    if n < 2 or not 0 < eps < 1:
        raise InvalidArgumentError(f"need n >= 2 and 0 < eps < 1, got n={n}, eps={eps}")
    m = math.ceil(8 * math.log(n) / eps)
    return math.ceil(4 * m / eps), m


def default_support_size(n: int, d: int) -> int:
    """Support size used when the caller gives only ``(n, d)``.

    If every leaf fits in its own block of coordinates the supports are
    disjoint (an exact copy of the star); otherwise ``sqrt(2 d ln n)``, the
    size that inverts :func:`default_star_parameters`.
    """
    leaves = n - 1
    if d >= leaves:
        return d // leaves
    m = round(math.sqrt(2 * d * math.log(max(n, 2))))
    return int(min(max(m, 1), max(d // 2, 1)))


def sparse_supports(count: int, d: int, m: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` random m-subsets of range(d), as a boolean (count, d) matrix.

    Atoms are dealt from a stream of independent random permutations, so each
    atom is used about equally often and the supports are disjoint whenever
    ``count * m <= d``.
    """
    if not 1 <= m <= d:
        raise InvalidArgumentError(f"support size must be in [1, {d}], got {m}")
    out = np.zeros((count, d), dtype=bool)
    stream = np.empty(0, dtype=np.int64)
    pos = 0
    for a in range(count):
        taken = 0
        while taken < m:
            if pos == stream.size:
                stream, pos = rng.permutation(d), 0
            x = stream[pos]
            pos += 1
            if not out[a, x]:
                out[a, x] = True
                taken += 1
    return out


def random_sign_star_embedding(
    n: int, d: int, seed: int, support_size: Optional[int] = None
) -> Embedding:
    """Random sparse-support embedding of the n-star into l1^d.

    The center goes to the origin and leaf i to ``indicator(S_i) / m`` for a
    random m-subset ``S_i``.  Center-leaf distances are exactly 1 and
    leaf-leaf distances are ``2 (1 - |S_i & S_j| / m)``.
    """
    if n < 2 or d < 1:
        raise InvalidArgumentError(f"need n >= 2 and d >= 1, got n={n}, d={d}")
    m = default_support_size(n, d) if support_size is None else int(support_size)
    S = sparse_supports(n - 1, d, m, make_rng(seed))
    points = np.zeros((n, d))
    points[1:] = S / m
    meta = {"construction": "sparse-support", "seed": int(seed), "support_size": m}
    return Embedding(star_metric(n), points, "l1", meta)


def equilateral_set(n: int) -> Embedding:
    """Standard basis e_1, ..., e_n of l1^n; every pair at distance 2."""
    if n < 2:
        raise InvalidArgumentError(f"need n >= 2, got {n}")
    return Embedding(uniform_metric(n, 2.0), np.eye(n), "l1", {"construction": "U_n"})


def perturb_within_distortion(e: Embedding, eps: float, seed: int, steps: int = 50) -> Embedding:
    """Add as much seeded uniform noise as a (1+eps) distortion budget allows.

    Bisects the noise amplitude; the returned embedding always satisfies
    ``distortion <= 1 + eps``.
    """
    base = distortion(e)
    if base > 1 + eps:
        raise NotAnEmbeddingError(f"input already has distortion {base}", base)
    noise = make_rng(seed).uniform(-1.0, 1.0, size=e.points.shape)
    scale = float(np.abs(e.points).max()) or 1.0
    lo, hi = 0.0, scale
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        if distortion(Embedding(e.source, e.points + mid * noise, e.norm)) <= 1 + eps:
            lo = mid
        else:
            hi = mid
    meta = dict(e.meta, perturbation=lo, perturb_seed=int(seed))
    return Embedding(e.source, e.points + lo * noise, e.norm, meta)


# --------------------------------------------------------------------------
# trees


def isometric_tree_embedding(k: int, h: int) -> Embedding:
    """Exact l1 embedding of the complete k-ary tree: one coordinate per edge.

    Node v maps to the indicator of the edges on its root path.
    """
    return random_tree_embedding(k, h, d=None, seed=0)


def random_tree_embedding(
    k: int, h: int, d: Optional[int], seed: int, support_size: Optional[int] = None
) -> Embedding:
    """Tree embedding that gives every edge a unit-l1 sparse code.

    Node v maps to the sum of the codes of the edges on its root path.  With
    ``d`` at least the number of edges (or ``d=None``) the codes are
    disjoint and the embedding is isometric.
    """
    metric = kary_tree_metric(k, h)
    edges = metric.n - 1
    if d is None:
        d = edges
    m = default_support_size(edges + 1, d) if support_size is None else int(support_size)
    codes = sparse_supports(edges, d, m, make_rng(seed)) / m
    points = np.zeros((metric.n, d))
    for v in range(1, metric.n):
        points[v] = points[(v - 1) // k] + codes[v - 1]
    meta = {"construction": "edge-codes", "seed": int(seed), "support_size": m, "k": k, "h": h}
    return Embedding(metric, points, "l1", meta)


def tree_to_star_embedding(f: Embedding, eps: float) -> Embedding:
    """Star embedding extracted from an embedding of a complete k-ary tree.

    For every node w at depth ``c = ceil(h/2)`` take the leaf x_w reached by
    first-child descent; the star leaf for w is ``(f(x_w) - f(w)) / (h - c)``
    and the center is the origin.  If f has distortion at most 1+eps with
    eps <= 1/8, the result is 1-Lipschitz with distortion at most 1+4 eps.
    """
    if f.norm != "l1":
        raise InvalidSourceError("tree_to_star_embedding expects an l1 embedding")
    try:
        k, h = infer_kary_tree(f.source)
    except InvalidArgumentError as exc:
        raise InvalidSourceError(str(exc)) from exc
    if h < 2:
        raise InvalidSourceError("the reduction needs height h >= 2")
    if not 0 <= eps <= 0.125:
        raise InvalidArgumentError(f"eps must lie in [0, 1/8], got {eps}")
    dist_f = distortion(f)
    if dist_f > (1 + eps) * (1 + REL_TOL):
        raise NotAnEmbeddingError(f"tree map has distortion {dist_f} > 1 + {eps}", dist_f)
    f = normalize_to_one_lipschitz(f, base=0)

    c = math.ceil(h / 2)
    depth = kary_tree_depths(k, h)
    middle = np.flatnonzero(depth == c)
    leaves = np.array([kary_tree_first_leaf(int(w), k, h) for w in middle])
    points = np.zeros((1 + middle.size, f.dim))
    points[1:] = (f.points[leaves] - f.points[middle]) / (h - c)
    g = Embedding(star_metric(1 + middle.size), points, "l1",
                  {"construction": "tree-to-star", "k": k, "h": h, "eps": eps})

    lip = lipschitz_constant(g)
    if lip > 1 + 1e-9:
        raise NotAnEmbeddingError(f"star map is not 1-Lipschitz (Lip = {lip})")
    dist_g = distortion(g)
    # eps = 0 is the isometric case and gets an absolute tolerance
    slack = 1e-9 if eps == 0 else REL_TOL * (1 + 4 * eps)
    if dist_g > 1 + 4 * eps + slack:
        raise NotAnEmbeddingError(f"star map has distortion {dist_g} > 1 + 4*{eps}", dist_g)
    return g


# --------------------------------------------------------------------------
# snowflake composition

_CAL_QUANTILE = 0.001
_CAL_PAIRS = 10_000
_CAL_SEED = 0


def _phi(t: np.ndarray, freqs: np.ndarray, amps: np.ndarray) -> np.ndarray:
    """Squared helix distance at separation t: sum 4 a^2 sin^2(w t / 2)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    return (4.0 * amps**2 * np.sin(np.multiply.outer(t, freqs) / 2.0) ** 2).sum(axis=-1)


def _ladder(per_octave: int, lo_oct: int, hi_oct: int) -> tuple[np.ndarray, np.ndarray]:
    r = 2.0 ** (1.0 / per_octave)
    j = np.arange(lo_oct * per_octave, hi_oct * per_octave + 1)
    freqs = r**j
    # log-spaced discretization of  t = (1/pi) * integral 4 sin^2(w t/2) / w^2 dw
    amps = np.sqrt(np.log(r) / (np.pi * freqs))
    return freqs, amps


def _sup_ratio(freqs: np.ndarray, amps: np.ndarray) -> float:
    """sup over 0 < t <= 1 of phi(t)/t (dense grid, then local refinement)."""
    t = np.geomspace(1e-9, 1.0, 20001)
    ratio = _phi(t, freqs, amps) / t
    i = int(np.argmax(ratio))
    best = float(ratio[i])
    a, b = t[max(i - 1, 0)], t[min(i + 1, t.size - 1)]
    if b > a:
        res = minimize_scalar(lambda s: -_phi(s, freqs, amps)[0] / s, bounds=(a, b),
                              method="bounded", options={"xatol": 1e-14})
        best = max(best, -float(res.fun))
    return best


def _sample_ratios(freqs, amps) -> np.ndarray:
    rng = make_rng(_CAL_SEED)
    x, y = rng.random((2, _CAL_PAIRS))
    t = np.abs(x - y)
    t = t[t > 0]
    return np.sqrt(_phi(t, freqs, amps) / t)


@lru_cache(maxsize=64)
def _calibrate_unit(eps: float):
    """Smallest ladder on [0, 1] whose sampled ratio quantile reaches 1 - eps."""
    best = None
    candidates = sorted(
        ((q, lo, hi) for q in (1, 2, 3, 4) for lo in (-2, -3, -4, -5, -6)
         for hi in range(8, 27, 2)),
        key=lambda c: (c[0] * (c[2] - c[1]), c),
    )
    for q, lo, hi in candidates:
        freqs, amps = _ladder(q, lo, hi)
        amps = amps / math.sqrt(_sup_ratio(freqs, amps) * (1 + 1e-12))
        achieved = 1.0 - float(np.quantile(_sample_ratios(freqs, amps), _CAL_QUANTILE))
        if best is None or achieved < best[2]:
            best = (freqs, amps, achieved)
        if achieved <= eps:
            return freqs, amps, achieved
    raise CalibrationError(f"no ladder reaches eps={eps}; best achieved {best[2]:.4f}", best[2])


@dataclass(frozen=True, eq=False)
class KahaneMap:
    """Helix x -> (a_j cos(w_j x), a_j sin(w_j x))_j approximating sqrt|x - y|.

    On ``[lo, hi]`` it satisfies ``||K(x) - K(y)||_2 <= sqrt|x - y|`` (up to
    1e-6 relative) and the lower bound ``(1 - eps) sqrt|x - y|`` on at least
    99.9% of a seeded 10^4-pair sample; ``achieved_eps`` is the measured value.
    """

    eps: float
    lo: float
    hi: float
    frequencies: np.ndarray
    amplitudes: np.ndarray
    achieved_eps: float

    @property
    def dim(self) -> int:
        return 2 * self.frequencies.size

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        phase = np.multiply.outer(x, self.frequencies)
        out = np.stack([self.amplitudes * np.cos(phase), self.amplitudes * np.sin(phase)], axis=-1)
        return out.reshape(*x.shape, self.dim)

    def squared_distance(self, t) -> np.ndarray:
        """||K(x) - K(x + t)||^2 as a function of the separation alone."""
        return _phi(np.abs(t), self.frequencies, self.amplitudes)

    def ratio(self, t) -> np.ndarray:
        """||K(x) - K(y)|| / sqrt|x - y| for separations ``t > 0``."""
        t = np.abs(np.asarray(t, dtype=float))
        return np.sqrt(self.squared_distance(t) / t)

    def slack(self, separations) -> float:
        """How far the given separations fall below the (1 - eps) ratio."""
        t = np.abs(np.asarray(separations, dtype=float)).ravel()
        t = t[(t > 0) & (t <= (self.hi - self.lo) * (1 + 1e-12))]
        if t.size == 0:
            return 0.0
        return max(0.0, float((1 - self.eps) - self.ratio(t).min()))

    def to_dict(self) -> dict:
        return {
            "eps": self.eps,
            "range": [self.lo, self.hi],
            "frequencies": self.frequencies.tolist(),
            "amplitudes": self.amplitudes.tolist(),
            "achieved_eps": self.achieved_eps,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "KahaneMap":
        lo, hi = data["range"]
        return cls(float(data["eps"]), float(lo), float(hi),
                   np.asarray(data["frequencies"], dtype=float),
                   np.asarray(data["amplitudes"], dtype=float),
                   float(data["achieved_eps"]))


def kahane_map(eps: float, lo: float, hi: float) -> KahaneMap:
    """Calibrate a square-root snowflake of the interval ``[lo, hi]`` into l2."""
    if not 0 < eps < 1:
        raise InvalidArgumentError(f"eps must lie in (0, 1), got {eps}")
    if not lo < hi:
        raise InvalidArgumentError(f"need lo < hi, got [{lo}, {hi}]")
    freqs, amps, achieved = _calibrate_unit(float(eps))
    span = hi - lo
    # phi_L(t) = L * phi_1(t / L): frequencies scale by 1/L, squared amplitudes by L
    return KahaneMap(float(eps), float(lo), float(hi), freqs / span, amps * math.sqrt(span), achieved)


def compose_sqrt_embedding(f: Embedding, eps: float) -> Embedding:
    """Apply a calibrated snowflake map to every coordinate of an l1 embedding.

    Squared l2 distances of the result are dominated by the l1 distances of
    the (normalized) input; the lower bound
    ``(1 - 2 eps - eps_cal) * sqrt(rho(x, y))`` is asserted on all pairs, where
    ``eps_cal`` is the calibration slack at the separations actually used.
    The result's ``meta`` carries ``eps_cal`` and the map.
    """
    if f.norm != "l1":
        raise InvalidSourceError("compose_sqrt_embedding expects an l1 embedding")
    if distortion(f) == float("inf"):
        raise DegenerateEmbeddingError("input map is not injective")
    f = normalize_to_one_lipschitz(f, base=0)
    dist_f = distortion(f)
    if dist_f > (1 + eps) * (1 + REL_TOL):
        raise NotAnEmbeddingError(f"input has distortion {dist_f} > 1 + {eps}", dist_f)
    lo, hi = float(f.points.min()), float(f.points.max())
    if hi <= lo:
        raise DegenerateEmbeddingError("input has no spread")
    K = kahane_map(eps, lo, hi)
    g_points = K(f.points).reshape(f.n, f.dim * K.dim)

    diffs = np.abs(f.points[:, None, :] - f.points[None, :, :])
    eps_cal = K.slack(diffs)
    g = Embedding(f.source, g_points, "l2",
                  {"construction": "sqrt-composition", "eps": eps, "eps_cal": eps_cal,
                   "kahane": K.to_dict()})

    iu = np.triu_indices(f.n, k=1)
    l1 = diffs.sum(axis=-1)[iu]
    l2 = g.image_distances()
    if np.any(l2**2 > l1 * (1 + REL_TOL)):
        raise CalibrationError("squared l2 distance exceeds the l1 distance", K.achieved_eps)
    floor = (1 - 2 * eps - eps_cal) * np.sqrt(f.source.condensed())
    if np.any(l2 < floor * (1 - 1e-12)):
        raise CalibrationError("composed map violates its lower bound", K.achieved_eps)
    return g
