"""Embedding the n-star into l1^d and measuring distortion.

Run: python3 demos/01_star_embeddings.py
"""
import numpy as np

from l1lab import distortion, random_sign_star_embedding, star_metric
from l1lab.constructions import default_star_parameters

# The n-star: one center (point 0) at distance 1 from n-1 leaves, leaves
# pairwise at distance 2.
m = star_metric(6)
print(m.dist)

# With d >= n-1 every leaf gets its own block of coordinates and the map is
# exact.
e = random_sign_star_embedding(64, 63, seed=0)
print("n=64, d=63:", distortion(e))

# Fewer coordinates than leaves: leaves share atoms, leaf-leaf distances
# shrink to 2 (1 - overlap/m) and distortion grows.
for d in (8, 16, 32):
    print(f"n=64, d={d}:", round(distortion(random_sign_star_embedding(64, d, seed=0)), 3))

# The default parameters for a target eps: supports of size m = 8 ln n / eps
# in d = 4 m / eps coordinates.  Most seeds land within 1 + eps.
n, eps = 256, 0.25
d, m = default_star_parameters(n, eps)
values = np.array([distortion(random_sign_star_embedding(n, d, s, support_size=m)) for s in range(20)])
print(f"n={n}, eps={eps}: d={d}, m={m}, distortion range [{values.min():.3f}, {values.max():.3f}]")
