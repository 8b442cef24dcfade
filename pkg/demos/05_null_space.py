"""The null space swept by l+ and area-maximizing inner variations.

``Phi(t, x) = exp_f(x)(t l+)`` has a rank-n differential with kernel
``d/dt`` until the first focal point, which sits at ``t = 1 / mu`` for the
eigenvalues ``mu`` of A+. Inner variations ``G = (tau, alpha)`` of the null
space are reparametrized into variations of the surface with the same
areas, and the area is stationary and maximal at ``s = 0``.
"""

import numpy as np

from nullvol import NullSpaceMap, build, degeneracy_report, reparametrize, theorem_suite
from nullvol.nullspace import find_delta, focal_report, random_inner_variation, volume_f, volume_g

rec = build("lightcone-flat")
nmap = NullSpaceMap(rec.immersion, rec.frame, t_window=(-6.0, 6.0))
focal = focal_report(nmap, rec.grid(4).nodes, (-6.0, 6.0))
print(f"focal-free window {focal.window[0]:+.4f} .. {focal.window[1]:+.4f}, "
      f"detected vs predicted mismatch {focal.max_mismatch:.1e}")
for s in degeneracy_report(nmap, rec.grid(8), np.linspace(-0.8, 0.8, 5)):
    print(f"  t = {s.t:+.2f}  min rank {s.min_rank}  kernel residual {s.kernel_residual:.1e}")

nmap = NullSpaceMap(rec.immersion, rec.frame)
grid = rec.grid()
iv = random_inner_variation(rec.domain, np.random.default_rng(3))
delta = find_delta(iv, grid)
spec = reparametrize(nmap, iv, grid, delta)
print(f"\ninner variation admissible for |s| <= {delta:.4f}")
for s in np.linspace(-delta, delta, 5):
    print(f"  s = {s:+.4f}  Vol_G {volume_g(nmap, iv, s, grid):.10f}  Vol_F {volume_f(nmap, spec, s, grid):.10f}")

report = theorem_suite(rec, range(4), grid)
print()
print(report.table())
