"""A short tour of the simplex projection and why it replaces softmax.

Run:  python3 demos/simplex_projection_tour.py
"""

import numpy as np

from convexattn import (
    nonexpansiveness_sweep,
    simplex_project,
    softmax_counterexample,
    softmax_ref,
)
from convexattn.numutil import RngStream

# Project a few score vectors and watch the sparsity appear. Softmax
# always spreads mass over every entry; the Euclidean projection zeroes
# out entries that fall below the water line.
print("scores -> projection vs softmax")
for s in ([2.0, 0.0], [1.0, 0.5], [0.3, 0.2, 0.1], [5.0, -5.0, 0.0, 0.1]):
    s = np.array(s)
    print(f"  {s}  ->  {np.round(simplex_project(s), 4)}"
          f"   (softmax {np.round(softmax_ref(s), 4)})")

# The projection is 1-Lipschitz: moving the scores a little can never
# move the attention weights more. Sweep random pairs and report the
# worst observed ratio.
sweep = nonexpansiveness_sweep(pairs=2000, dim=10, rng=RngStream(0))
print(f"\nnonexpansiveness over {sweep.pairs} random pairs:")
print(f"  max ||proj(v)-proj(w)|| / ||v-w|| = {sweep.max_ratio:.6f}")
print(f"  firm inequality held every time: {sweep.firm_ok}")

# Softmax has no such convexity story. The classic two-point
# counterexample: the midpoint output exceeds the interpolated output.
ce = softmax_counterexample()
print("\nsoftmax Jensen counterexample at z=(0,0), z'=(2,0):")
print(f"  softmax(midpoint)[0]     = {ce.midpoint_first:.3f}")
print(f"  interpolated softmax[0]  = {ce.interpolated_first:.3f}")
print(f"  convexity violated: {ce.jensen_violated}")
print(f"  same points, squared simplex distance stays convex: "
      f"{ce.distance_convex_ok}")
