"""First and second variation of area along the null direction l+.

For a characteristic variation ``V = tau l+`` the first variation vanishes
and the second is ``-int tau^2 (|A+|^2 + Ric(l+, l+))``. The closed form is
compared with the general second-variation formula and with a Richardson
finite difference of the deformed areas.
"""

import warnings

import numpy as np

from nullvol import (
    build,
    first_variation_fd,
    second_variation_characteristic_formula,
    second_variation_fd,
    second_variation_general_formula,
)
from nullvol.variation import random_admissible, random_characteristic, vol_curve

# the horosphere has A+ = 0 and Ric(l+, l+) = 0, so its FD sits at the noise floor
warnings.simplefilter("ignore", RuntimeWarning)

rng = np.random.default_rng(7)
for eid in ("lightcone-flat", "horosphere", "ppwave-slice"):
    rec = build(eid)
    grid = rec.grid()
    spec = random_characteristic(rec.domain, rng, t_range=(-0.25, 0.25))
    closed = second_variation_characteristic_formula(rec.immersion, spec, rec.frame, grid)
    general = second_variation_general_formula(rec.immersion, spec, rec.frame, grid)
    fd = second_variation_fd(rec.immersion, spec, rec.frame, grid)
    adm = random_admissible(rec.domain, rng, rec.chart.dim, t_range=(-0.2, 0.2))
    first = first_variation_fd(rec.immersion, adm, rec.frame, grid)
    print(f"{eid}")
    print(f"  first variation (admissible, FD)  {first.value:+.3e}")
    print(f"  second variation closed form      {closed:+.10f}")
    print(f"  general formula                   {general.total:+.10f}")
    print(f"  finite difference                 {fd.value:+.10f}  (noise floor {fd.noise_floor:.1e})")

rec = build("lightcone-flat")
spec = random_characteristic(rec.domain, np.random.default_rng(0), t_range=(-0.25, 0.25))
print("\nlight cone area along the variation:")
for t, v in vol_curve(rec.immersion, spec, rec.frame, rec.grid(), np.linspace(-0.25, 0.25, 5)):
    print(f"  t = {t:+.3f}  area = {v:.8f}")
