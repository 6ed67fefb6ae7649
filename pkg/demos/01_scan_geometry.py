"""Why continuous scanning: a walk through the four snake paths.

Renders the boustrophedon traversals next to the raster baselines and
shows where the raster orders tear the image apart.  Run with:

    python3 demos/01_scan_geometry.py
"""

import numpy as np

from plainscan import generate_continuous_paths, generate_raster_paths
from plainscan.paths import Direction, render_ascii

H, W = 4, 6

print(f"=== continuous (snake) paths on a {H}x{W} grid ===\n")
continuous = generate_continuous_paths(H, W)
names = ["row snake", "column snake", "row snake reversed", "column snake reversed"]
for name, path in zip(names, continuous.paths):
    print(f"{name}: every consecutive pair of cells is adjacent")
    print(render_ascii(path))
    labels = [Direction(d).name for d in path.directions[:8]]
    print("first direction labels:", " ".join(labels), "...\n")

print(f"=== raster baselines on the same grid ===\n")
raster = generate_raster_paths(H, W)
for name, path in zip(["row-major", "column-major"], raster.paths[:2]):
    gaps = path.discontinuities()
    print(f"{name}: wraps at scan positions {gaps}")
    print(render_ascii(path))
    cells = path.cells()
    for g in gaps[:2]:
        a, b = cells[g - 1], cells[g]
        jump = int(np.abs(b - a).sum())
        print(f"  step {g}: ({a[0]},{a[1]}) -> ({b[0]},{b[1]}), distance {jump}")
    print()

print(
    "The recurrence carries state from each token to the next; a raster\n"
    "wrap forces it across the full image width, while the snake orders\n"
    "keep every transition local.  The four directions of travel are\n"
    "exposed to the model through the per-step labels above."
)
