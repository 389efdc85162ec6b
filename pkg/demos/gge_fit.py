"""Fitting a generalized Gibbs ensemble to a quench steady state.

A thermal state of a weakly disordered chain is released into the clean
chain.  Its steady state is nearly circulant, and the circulant part is fixed
by the currents.  Matching more currents with maximum entropy shrinks the
error in step with the decay of the initial correlations.  What is left over
is the O(1/L) non-circulant part, which no GGE can capture.
"""

from quenchlab.covariance import (
    circulant_from_currents,
    clustering_fit,
    currents,
    dephase,
    max_norm_distance,
    thermal_covariance,
)
from quenchlab.gge import fit_gge, gge_covariance, relevant_range
from quenchlab.model import coupling_matrix, nearest_neighbour, sample_anderson

L = 256
pre = sample_anderson(L, 2.0, seed=7)
g0 = thermal_covariance(coupling_matrix(pre), 2.0, 0.3)
g_inf = dephase(g0, nearest_neighbour(L))
circ = circulant_from_currents(currents(g_inf))

cf = clustering_fit(g0)
print(f"initial correlations decay as {cf.C:.2f} exp(-z / {cf.xi:.2f})")
print("  eps    currents   to circulant part   to steady state")
for eps in (1e-1, 1e-2, 1e-4, 1e-8):
    z = relevant_range(cf.C, cf.xi, eps)
    g = gge_covariance(fit_gge(currents(g_inf), z), L)
    print(f"{eps:7.0e}   {z + 1:4d}       {max_norm_distance(g, circ):.1e}            {max_norm_distance(g, g_inf):.1e}")
