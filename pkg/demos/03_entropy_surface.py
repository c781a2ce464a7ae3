"""Estimate topological entropy over both parameter squares.

Lap counts of iterated compositions grow like e^(h k); the estimator reads
the growth rate off the last few levels and cross-checks it against the
growth of negative-type fixed point counts.  Writes a CSV table and a PGM
heatmap next to this script.
"""

import math
import pathlib

from mapbones import (
    Dyadic, entropy_estimate, entropy_grid, grid_to_csv, grid_to_pgm,
    lap_profile, q_param, st_param,
)

out = pathlib.Path(__file__).parent / "output"
out.mkdir(exist_ok=True)

print("anchor values:")
for label, p in (("stunted (1,1)", st_param(1, 1)),
                 ("logistic (1,1)", q_param(1.0, 1.0)),
                 ("stunted (1,1/2)", st_param(1, Dyadic(1, 1))),
                 ("logistic (0.1,0.1)", q_param(0.1, 0.1))):
    est = entropy_estimate(p, kmax=12)
    print(f"  {label:<18} h = {est.h:.6f} +- {est.err:.4f} "
          f"(laps {est.laps[-3:]})")
print(f"  log 4 = {math.log(4):.6f}, log 2 = {math.log(2):.6f}")

laps, negs = lap_profile(q_param(0.9, 0.95), 12)
print(f"\nlap growth at (0.9, 0.95): {laps}")
print(f"negative fixed points:      {negs}")

for family in ("st", "q"):
    grid = entropy_grid(family, 64, kmax=12, lap_budget=200_000)
    (out / f"entropy_{family}_64.csv").write_text(grid_to_csv(grid))
    (out / f"entropy_{family}_64.pgm").write_bytes(grid_to_pgm(grid))
    print(f"\n{family}: 64x64 grid written to demos/output/, "
          f"h range [{grid.values.min():.3f}, {grid.values.max():.3f}]")
