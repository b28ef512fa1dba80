"""Complete k-ary trees reduce to stars; square-root snowflakes move l1 to l2.

Run: python3 demos/04_trees_and_snowflakes.py
"""
import numpy as np

from l1lab import (
    compose_sqrt_embedding,
    distortion,
    equilateral_set,
    isometric_tree_embedding,
    kahane_map,
    perturb_within_distortion,
    tree_to_star_embedding,
)

# A (1+eps)-embedding of the height-h tree hides a (1+4eps)-embedding of a
# star with 1 + k^ceil(h/2) points.
f = perturb_within_distortion(isometric_tree_embedding(3, 4), 0.1, seed=0)
eps = distortion(f) - 1
g = tree_to_star_embedding(f, eps)
print(f"tree: {f.n} points, distortion {1 + eps:.4f} -> star: {g.n} points, distortion {distortion(g):.4f}")

# A helix whose chord lengths follow sqrt(|x - y|) up to 1 - eps.
K = kahane_map(0.1, 0.0, 1.0)
t = np.array([1e-3, 1e-2, 0.1, 0.5, 1.0])
print("dims:", K.dim, "ratios:", np.round(K.ratio(t), 3))

# Applied coordinatewise to U_16 (all pairs at l1 distance 2) it gives an l2
# set with all distances near sqrt 2.
h = compose_sqrt_embedding(equilateral_set(16), 0.1)
print("U_16 in l2:", h.dim, "dims, distances in", np.round([h.image_distances().min(), h.image_distances().max()], 4),
      "eps_cal =", h.meta["eps_cal"])
