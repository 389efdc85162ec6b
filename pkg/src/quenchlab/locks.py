"""Convention locks: each check compares a fast routine with the Fock-space oracle.

Every lock fails if the corresponding sign or transpose convention flips.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .covariance import currents, evolve, thermal_covariance
from .model import HoppingModel, coupling_matrix
from .oracle import FockSpace, build_hamiltonian, covariance_of, evolve_state, gibbs_state, wick_deviation
from .propagator import propagate

__all__ = ["LockResult", "convention_locks"]


@dataclass(frozen=True)
class LockResult:
    name: str
    deviation: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.deviation <= self.tol


def _complex_coupling(L: int, rng) -> np.ndarray:
    # NN chain with a complex hopping so that transposes and conjugates matter
    h = np.zeros((L, L), dtype=complex)
    for x in range(L):
        h[x, (x + 1) % L] = 0.7 * np.exp(0.4j)
        h[(x + 1) % L, x] = 0.7 * np.exp(-0.4j)
        h[x, x] = rng.normal(scale=0.3)
    return h


def _lock_propagator_expm(rng) -> LockResult:
    model = HoppingModel(16, [0.3, 1.0, -0.4])
    t = 1.7
    G = propagate(model, t).matrix()
    ref = expm(1j * t * coupling_matrix(model))
    return LockResult("propagator = exp(+i h t)", float(np.max(np.abs(G - ref))), 1e-10)


def _lock_single_particle(rng) -> LockResult:
    L, t = 8, 0.9
    model = HoppingModel(L, [0.0, 1.0, 0.35])
    H = build_hamiltonian(model)
    G = propagate(model, t).matrix()
    dev = 0.0
    for y in range(L):
        psi = np.zeros(1 << L, dtype=complex)
        psi[1 << y] = 1.0
        out = evolve_state(psi, H, t).data
        amp = np.array([out[1 << x] for x in range(L)])
        # the wavefunction amplitude on x is conj(G)[y, x]
        dev = max(dev, float(np.max(np.abs(amp - np.conj(G[y, :])))))
    return LockResult("single-particle sector = conj(G)^T", dev, 1e-10)


def _lock_thermal(rng) -> LockResult:
    L = 6
    h = _complex_coupling(L, rng)
    beta, mu = 0.8, 0.2
    ref = covariance_of(gibbs_state(build_hamiltonian(h), beta, mu))
    dev = float(np.max(np.abs(thermal_covariance(h, beta, mu) - ref)))
    return LockResult("thermal covariance = f_FD(h)^T", dev, 1e-10)


def _lock_evolution(rng) -> LockResult:
    L, t = 8, 1.3
    model = HoppingModel(L, [0.1, 1.0, -0.5])
    occ = np.array([1, 1, 0, 1, 0, 0, 1, 0])
    psi = np.zeros(1 << L, dtype=complex)
    psi[int(np.sum(occ << np.arange(L)))] = 1.0
    # a superposition gives coherences, so phases of Gamma are tested
    occ2 = np.array([1, 0, 1, 1, 0, 0, 1, 0])
    psi[int(np.sum(occ2 << np.arange(L)))] = 1.0j
    psi /= np.linalg.norm(psi)
    H = build_hamiltonian(model)
    g0 = covariance_of(psi)
    ref = covariance_of(evolve_state(psi, H, t))
    dev = float(np.max(np.abs(evolve(g0, propagate(model, t)) - ref)))
    return LockResult("Gamma(t) = G Gamma G^dagger", dev, 1e-10)


def _lock_currents(rng) -> LockResult:
    L = 6
    h = _complex_coupling(L, rng)
    rho = gibbs_state(build_hamiltonian(h), 1.1, 0.0)
    space = FockSpace(L)
    direct = 0.0
    for x in range(L):
        op = space.creator(x) @ space.annihilator((x + 1) % L)
        direct += complex(op.multiply(rho.data.T).sum())
    direct /= L
    I1 = currents(covariance_of(rho)).I[1]
    return LockResult("I_1 = mean <f_x^dag f_(x+1)>", float(abs(I1 - direct)), 1e-10)


def _lock_wick(rng) -> LockResult:
    L = 6
    h = _complex_coupling(L, rng)
    rho = gibbs_state(build_hamiltonian(h), 0.9, 0.1)
    quartets = [(a, b, c, d) for a in range(3) for b in range(3) for c in range(3) for d in range(3)]
    return LockResult("Wick rule vanishes on Gibbs states", wick_deviation(rho, quartets), 1e-10)


_LOCKS = (_lock_propagator_expm, _lock_single_particle, _lock_thermal, _lock_evolution, _lock_currents, _lock_wick)


def convention_locks(seed: int = 0) -> list[LockResult]:
    rng = np.random.default_rng(seed)
    return [lock(rng) for lock in _LOCKS]
