"""Curvature and geodesics of the ambient spacetimes.

Flat Minkowski space has a vanishing Riemann tensor. The plane wave
``ds^2 = 2 du dv + a (x^2 + y^2) du^2 + dx^2 + dy^2`` with ``a < 0`` has
``Ric(d_u, d_u) = -2a > 0``, so it satisfies the null energy condition
and focuses null rays. A null geodesic integrated by RK4 keeps
``<v, v> = 0`` to round-off.
"""

import numpy as np

from nullvol.ambient import chart_from_name, exp_map, nec_check, riemann

rng = np.random.default_rng(0)
for name in ("minkowski(4)", "ppwave(-1)", "conformal(linear)"):
    chart = chart_from_name(name)
    pts = rng.uniform(-0.5, 0.5, size=(16, chart.dim))
    curv = riemann(chart, pts)
    nec = nec_check(chart, pts)
    worst = max(curv.symmetry_residuals().values())
    print(f"{name:18s} max|Riem| {np.max(np.abs(curv.riemann)):.3e}  "
          f"min Ric(k,k) {nec.min_value:+.3e}  NEC {'ok' if nec.passed else 'violated'}  "
          f"symmetry residual {worst:.1e}")

chart = chart_from_name("ppwave(-1)")
p = np.array([0.0, 0.0, 0.3, -0.2])
v = np.array([1.0, 0.0, 0.1, 0.0])
G = chart.metric(p)
# pick v^v so that g_uu + 2 v^v + |v_perp|^2 = 0
v[1] = -(G[0, 0] + v[2] ** 2 + v[3] ** 2) / 2.0
end = exp_map(chart, p, v, 1.0)
print("\nnull geodesic from", p, "ends at", np.round(end.position, 6))
print(f"<v, v> at the endpoint: {end.velocity @ chart.metric(end.position) @ end.velocity:.2e}")
