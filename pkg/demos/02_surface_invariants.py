"""Induced geometry of the catalog surfaces.

Each catalog entry carries a list of facts (flat induced metric, vanishing
mean curvature, H = -2q on the light cone, ...). ``verify`` evaluates them
at the quadrature nodes and reports the worst residual of each.
"""

import numpy as np

from nullvol import CATALOG_IDS, build, verify, volume
from nullvol.immersion import surface_data

for eid in CATALOG_IDS + ("sphere-slice",):
    rec = build(eid)
    grid = rec.grid()
    H = surface_data(rec.immersion, grid.nodes).H
    print(f"{eid}: area {volume(rec.immersion, grid):.6f}, max|H| {np.max(np.abs(H)):.3e}")
    for fact in verify(rec, grid):
        flag = "ok  " if fact.passed else "FAIL"
        print(f"    {flag} {fact.name:26s} residual {fact.residual:.2e} (tol {fact.tol:g})")
