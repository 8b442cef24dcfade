"""Null normal frames, expansions and the marginally trapped test.

With ``l+ = T + N`` and ``l- = T - N`` we have ``<l+, l-> = -2``. The
expansion ``theta+ = tr A+`` vanishes on every catalog surface, while the
round sphere in a time slice has ``theta+ = 2`` and is rejected.
"""

import numpy as np

from nullvol import CATALOG_IDS, build, shape_operator, theta
from nullvol.nullframe import frame_residuals, marginally_trapped_check

for eid in CATALOG_IDS + ("sphere-slice", "plane-slice"):
    rec = build(eid)
    grid = rec.grid(12)
    x = grid.nodes
    res = max(frame_residuals(rec.immersion, rec.frame, x).values())
    Ap = shape_operator(rec.immersion, rec.frame, x, "+")
    tp = theta(rec.immersion, rec.frame, x, "+", check=False)
    tm = theta(rec.immersion, rec.frame, x, "-", check=False)
    mt = marginally_trapped_check(rec.immersion, rec.frame, grid)
    print(f"{eid:24s} frame {res:.1e}  |A+| {np.max(np.abs(Ap)):.3f}  "
          f"theta+ {np.max(np.abs(tp)):.2e}  theta- in [{tm.min():+.3f}, {tm.max():+.3f}]  "
          f"marginally trapped: {mt.passed}")
