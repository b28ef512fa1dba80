"""Desk-scale distortion minimization for star embeddings into l1^d.

``min_distortion_star`` is a heuristic (multi-start smoothed subgradient
descent); ``brute_force_min_distortion`` is an exhaustive grid oracle for
the tiniest instances.  Reported distortions are always recomputed exactly.
"""
from __future__ import annotations

import csv
import itertools
import os
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, ResourceLimitError
from .metric import Embedding, distortion, star_metric

MAX_N = 64
MAX_D = 16
DEFAULT_STARTS = 8
DEFAULT_ITERATIONS = 1500
FRONTIER_COLUMNS = ("n", "d", "eps_target", "best_distortion", "seed", "iterations")


@dataclass(frozen=True)
class SearchResult:
    embedding: Embedding
    distortion: float
    start: int


def _pairs(n: int):
    i, j = np.triu_indices(n, k=1)
    src = np.where(i == 0, 1.0, 2.0)
    return i, j, src


def _softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - z.max())
    return e / e.sum()


def _descend(x0: np.ndarray, iterations: int, incidence: np.ndarray, i, j, src,
             lr0: float = 0.05, temp0: float = 0.2, temp_min: float = 1e-3):
    """Minimize smooth-max minus smooth-min of the log pair ratios.

    Schedules depend only on the iteration counter, so a longer run extends a
    shorter one and the best-so-far value can only improve.
    """
    x = x0.copy()
    best_val, best_x = float("inf"), x.copy()
    for t in range(iterations + 1):
        diff = x[i] - x[j]
        norms = np.abs(diff).sum(axis=1)
        if norms.min() > 0:
            r = norms / src
            val = float(r.max() / r.min())
            if val < best_val:
                best_val, best_x = val, x.copy()
        if t == iterations:
            break
        temp = max(temp_min, temp0 * 0.995**t)
        logr = np.log(np.maximum(norms, 1e-12) / src)
        coef = (_softmax(logr / temp) - _softmax(-logr / temp)) / np.maximum(norms, 1e-12)
        grad = incidence.T @ (coef[:, None] * np.sign(diff))
        grad[0] = 0.0
        gnorm = np.linalg.norm(grad)
        if gnorm == 0:
            break
        x = x - lr0 / np.sqrt(1.0 + t / 50.0) * grad / gnorm
        # the objective is scale invariant; pin the mean center-leaf distance to 1
        x /= np.abs(x[1:]).sum(axis=1).mean()
    return best_val, best_x


def min_distortion_star(n: int, d: int, iterations: int = DEFAULT_ITERATIONS, seed: int = 0,
                        starts: int = DEFAULT_STARTS, max_n: int = MAX_N,
                        max_d: int = MAX_D) -> SearchResult:
    """Best star embedding found by multi-start descent, center pinned at 0."""
    if n < 2 or d < 1:
        raise InvalidArgumentError(f"need n >= 2 and d >= 1, got n={n}, d={d}")
    if n > max_n or d > max_d:
        raise ResourceLimitError(f"(n={n}, d={d}) exceeds the caps ({max_n}, {max_d})")
    if iterations < 0 or starts < 1:
        raise InvalidArgumentError("iterations must be >= 0 and starts >= 1")
    i, j, src = _pairs(n)
    incidence = np.zeros((i.size, n))
    incidence[np.arange(i.size), i] = 1.0
    incidence[np.arange(i.size), j] = -1.0
    best = None
    for s in range(starts):
        rng = _start_rng(seed, s)
        x0 = np.zeros((n, d))
        x0[1:] = rng.normal(size=(n - 1, d))
        x0 /= np.abs(x0[1:]).sum(axis=1).mean()
        val, x = _descend(x0, iterations, incidence, i, j, src)
        if best is None or val < best[0]:
            best = (val, x, s)
    emb = Embedding(star_metric(n), best[1], "l1",
                    {"construction": "search", "seed": int(seed), "iterations": int(iterations)})
    return SearchResult(emb, distortion(emb), best[2])


def _start_rng(seed: int, start: int) -> np.random.Generator:
    child = np.random.SeedSequence(int(seed)).spawn(start + 1)[start]
    return np.random.Generator(np.random.Philox(child))


def brute_force_min_distortion(n: int, d: int = 1, grid_step: float = 0.05) -> float:
    """Minimum distortion over leaf positions on a grid in [-2, 2]^((n-1) d)."""
    if n < 2 or n > 4 or d != 1:
        raise ResourceLimitError("grid search is limited to n <= 4 and d = 1")
    if grid_step <= 0:
        raise InvalidArgumentError("grid_step must be positive")
    steps = int(round(4.0 / grid_step))
    grid = np.linspace(-2.0, 2.0, steps + 1)
    leaves = n - 1
    mesh = np.stack(np.meshgrid(*([grid] * leaves), indexing="ij"), axis=-1).reshape(-1, leaves)
    pts = np.concatenate([np.zeros((mesh.shape[0], 1)), mesh], axis=1)
    ratios = []
    for a, b in itertools.combinations(range(n), 2):
        src = 1.0 if a == 0 else 2.0
        ratios.append(np.abs(pts[:, a] - pts[:, b]) / src)
    r = np.stack(ratios, axis=1)
    lo = r.min(axis=1)
    ok = lo > 0
    return float((r.max(axis=1)[ok] / lo[ok]).min())


def append_frontier_csv(path, rows) -> None:
    """Append rows (dicts keyed by ``FRONTIER_COLUMNS``) to a frontier CSV."""
    new = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=FRONTIER_COLUMNS)
        if new:
            writer.writeheader()
        for row in rows:
            writer.writerow({c: row[c] for c in FRONTIER_COLUMNS})
