"""How small can distortion get in very few dimensions?  A multi-start
descent compared with an exhaustive grid.

Run: python3 demos/05_search.py
"""
from l1lab import brute_force_min_distortion, min_distortion_star

print("4-star on a line, grid:", brute_force_min_distortion(4, 1, 0.05))
print("4-star on a line, search:", round(min_distortion_star(4, 1, seed=0).distortion, 4))

for n, d in [(8, 2), (8, 3), (8, 4), (16, 4), (16, 8)]:
    res = min_distortion_star(n, d, iterations=800, seed=0, starts=4)
    print(f"n={n:>2} d={d}: best distortion {res.distortion:.4f}")
