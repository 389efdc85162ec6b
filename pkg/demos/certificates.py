"""Dephasing certificates for the nearest-neighbour propagator.

The certificate promises |G_xy(t)| <= C t^(-1/3) inside a time window.  The
constant is large, so at desk scale the promise is loose, but it is never
broken.
"""

import numpy as np

from quenchlab.bounds import certificate, exponential_sum, propagator_phase
from quenchlab.model import HoppingModel, nearest_neighbour
from quenchlab.propagator import propagate

L = 1000
model = nearest_neighbour(L)
cert = certificate(propagator_phase(model, 1.0), L)
print("stationary points of omega':", np.round(cert.structure.S1, 4))
print("stationary points of omega'':", np.round(cert.structure.S2, 4))
print(f"C = {cert.C_sharp:g}, gamma = {cert.gamma:.4f}, window [{cert.t0:g}, {cert.tR:g}]")

print("\n  t      max |G_xy|   |G_00|     bound")
for t in (2.0, 10.0, 50.0, 120.0):
    emp = abs(exponential_sum(propagator_phase(model, t), L))
    print(f"{t:6.1f}   {propagate(model, t).max_abs():.4f}     {emp:.4f}    {cert.bound(t):.1f}")

# a third-neighbour term tuned so omega'' and omega''' vanish together
flat = certificate(propagator_phase(HoppingModel(L, [0, 1.0, 0, -1 / 9]), 1.0), 10**6)
print(f"\ndegenerate model: generic = {flat.generic}, gamma = {flat.gamma:.4f} (slower decay)")
