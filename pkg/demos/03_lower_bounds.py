"""Dimension lower bounds: the counting argument with its constants as
stated, next to the packing bound for large distortion.

Run: python3 demos/03_lower_bounds.py
"""
from l1lab import evaluate_lower_bound, volume_lower_bound

for n, eps in [(2**20, 0.05), (10**6, 0.01), (10**6, 0.001), (10**9, 0.001)]:
    r = evaluate_lower_bound(n, eps)
    print(f"n={n:>12,d} eps={eps:<6} d >= {r.d_lower:<6} ({r.branch}, s={r.intermediate['s']})")

# The constants (224 for the support size, 3 for the packing count) are far
# from optimal, so the bound only bites for very large n.
for D in (2, 4, 16):
    print(f"D={D:>2}: n=10^6 needs d >= {volume_lower_bound(10**6, D)}")
