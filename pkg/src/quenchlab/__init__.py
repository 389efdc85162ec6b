"""Equilibration of quadratic fermionic lattice models after a quench.

Covariance-matrix dynamics on a ring, dephasing certificates from exponential
sum bounds, generalized Gibbs ensembles, and a brute-force Fock-space oracle.
"""

__version__ = "0.1.0"
