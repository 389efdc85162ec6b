"""Charge-density wave under two different hopping models.

With nearest-neighbour hopping the alternating pattern melts towards a flat
density of 1/2.  With next-nearest-neighbour hopping only, particles on odd
sites can only reach odd sites, so the pattern never moves at all.
"""

import numpy as np

from quenchlab.bounds import classify_resilience
from quenchlab.covariance import Evolution, charge_density_wave, equilibrium_covariance, max_norm_distance
from quenchlab.model import nearest_neighbour, next_nearest_neighbour

L = 100
g0 = charge_density_wave(L)
g_eq = equilibrium_covariance(g0)

print("nearest-neighbour chain, L = 100")
ev = Evolution(g0, nearest_neighbour(L))
for t in (0.1, 0.5, 1.0, 3.0, 10.0):
    g = ev.at(t)
    occ = np.real(np.diag(g))
    print(f"  t = {t:5.1f}   odd-site density {occ[0]:.3f}   distance to I/2 {max_norm_distance(g, g_eq):.3f}")

print("\nnext-nearest-neighbour only")
ev = Evolution(g0, next_nearest_neighbour(L))
for t in (0.5, 1.5, 5.0):
    print(f"  t = {t:3.1f}   change since t = 0: {max_norm_distance(ev.at(t), g0):.1e}")

# the classifier sees the difference without running any dynamics
for name, model in (("NN", nearest_neighbour(L)), ("NNN", next_nearest_neighbour(L))):
    rep = classify_resilience(g0, model)
    print(f"\n{name}: {rep.verdict}  (resilient weight {rep.max_W_res():.2f}, dephasing weight {rep.max_W_ok():.2f})")
