"""Brute-force many-body reference for tiny lattices.

Fock basis states are integers whose bit ``x`` (0-based) is the occupation of
site ``x + 1``.  Annihilators carry Jordan-Wigner signs
``(-1)^(number of occupied sites below x)``.  Everything here is exact up to
floating point and is meant for pinning conventions, not for scaling.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .model import DisorderedModel, HoppingModel, coupling_matrix

__all__ = [
    "MAX_SITES",
    "MAX_SITES_DENSITY",
    "FockSpace",
    "ManyBodyState",
    "Spectrum",
    "build_hamiltonian",
    "diagonalize",
    "evolve_state",
    "covariance_of",
    "gibbs_state",
    "wick_deviation",
    "fock_state",
    "paired_state",
]

MAX_SITES = 14
MAX_SITES_DENSITY = 12


def _popcount(a: np.ndarray) -> np.ndarray:
    a = a.astype(np.uint32)
    c = np.zeros(a.shape, dtype=np.int64)
    while np.any(a):
        c += a & 1
        a = a >> 1
    return c


class FockSpace:
    """Sparse fermionic operators on ``L`` modes."""

    def __init__(self, L: int):
        if L > MAX_SITES:
            raise ValueError(f"Fock oracle limited to L <= {MAX_SITES}, got {L}")
        self.L = L
        self.dim = 1 << L
        self.states = np.arange(self.dim)
        self.occupations = (self.states[:, None] >> np.arange(L)[None, :]) & 1
        self.particle_number = self.occupations.sum(axis=1)
        self._ann = {}

    def annihilator(self, x: int) -> sp.csr_matrix:
        """``f_x`` for 0-based site ``x``."""
        if x not in self._ann:
            s = self.states[(self.states >> x) & 1 == 1]
            sign = np.where(_popcount(s & ((1 << x) - 1)) % 2, -1.0, 1.0)
            self._ann[x] = sp.csr_matrix((sign, (s ^ (1 << x), s)), shape=(self.dim, self.dim))
        return self._ann[x]

    def creator(self, x: int) -> sp.csr_matrix:
        return self.annihilator(x).T.tocsr()

    def number(self) -> sp.csr_matrix:
        return sp.diags(self.particle_number.astype(float)).tocsr()

    def parity(self) -> np.ndarray:
        """Diagonal of ``(-1)^N``."""
        return np.where(self.particle_number % 2, -1.0, 1.0)

    def check_anticommutation(self, tol: float = 1e-12) -> float:
        """Largest CAR violation; raises if it exceeds ``tol``."""
        worst = 0.0
        eye = sp.identity(self.dim, format="csr")
        for x in range(self.L):
            fx = self.annihilator(x)
            for y in range(self.L):
                fy = self.annihilator(y)
                acc = fx @ fy.T + fy.T @ fx - (eye if x == y else 0 * eye)
                aa = fx @ fy + fy @ fx
                for m in (acc, aa):
                    if m.nnz:
                        worst = max(worst, float(np.max(np.abs(m.data))))
        if worst > tol:
            raise AssertionError(f"anticommutation violated by {worst:.3g}")
        return worst


@dataclass
class ManyBodyState:
    """A state vector (``ndim == 1``) or density matrix (``ndim == 2``)."""

    data: np.ndarray
    L: int

    @property
    def is_vector(self) -> bool:
        return self.data.ndim == 1

    @property
    def parity(self) -> str:
        space_par = np.where(_popcount(np.arange(1 << self.L)) % 2, -1, 1)
        if self.is_vector:
            w = np.abs(self.data) ** 2
            even, odd = w[space_par == 1].sum(), w[space_par == -1].sum()
            if odd < 1e-20:
                return "even"
            if even < 1e-20:
                return "odd"
            return "mixed"
        mix = self.data[np.ix_(space_par == 1, space_par == -1)]
        if mix.size and np.max(np.abs(mix)) > 1e-10:
            return "mixed"
        return "mixed-but-parity-commuting"

    def norm(self) -> float:
        if self.is_vector:
            return float(np.linalg.norm(self.data))
        return float(np.trace(self.data).real)


def _as_state(state) -> ManyBodyState:
    if isinstance(state, ManyBodyState):
        return state
    data = np.asarray(state, dtype=complex)
    L = int(round(np.log2(data.shape[0])))
    return ManyBodyState(data, L)


def build_hamiltonian(model: HoppingModel | DisorderedModel | np.ndarray) -> sp.csr_matrix:
    """``sum_{x,y} h_{xy} f_x^dagger f_y`` as a sparse ``2^L x 2^L`` matrix."""
    h = coupling_matrix(model) if not isinstance(model, np.ndarray) else model
    L = h.shape[0]
    space = FockSpace(L)
    H = sp.csr_matrix((space.dim, space.dim), dtype=complex)
    for x in range(L):
        for y in range(L):
            if h[x, y] != 0:
                H = H + h[x, y] * (space.creator(x) @ space.annihilator(y))
    return H.tocsr()


class Spectrum:
    """Eigendecomposition of a number-conserving operator, sector by sector."""

    def __init__(self, H):
        H = sp.csr_matrix(H)
        self.dim = H.shape[0]
        self.L = int(round(np.log2(self.dim)))
        N = _popcount(np.arange(self.dim))
        coo = H.tocoo()
        leak = np.abs(coo.data[N[coo.row] != N[coo.col]])
        if leak.size and leak.max() > 1e-12:
            raise ValueError("operator does not conserve particle number")
        self.sectors = []
        for n in range(self.L + 1):
            idx = np.flatnonzero(N == n)
            E, V = np.linalg.eigh(H[idx][:, idx].toarray())
            self.sectors.append((n, idx, E, V))

    @cached_property
    def energies(self) -> np.ndarray:
        return np.sort(np.concatenate([E for _, _, E, _ in self.sectors]))

    def unitary_blocks(self, t: float):
        for n, idx, E, V in self.sectors:
            yield idx, (V * np.exp(-1j * E * t)) @ V.conj().T


def diagonalize(H) -> Spectrum:
    return H if isinstance(H, Spectrum) else Spectrum(H)


def evolve_state(state, H, t: float) -> ManyBodyState:
    """``e^{-iHt} psi`` or ``e^{-iHt} rho e^{iHt}``."""
    st = _as_state(state)
    spec = diagonalize(H)
    if st.is_vector:
        out = np.zeros_like(st.data)
        for idx, U in spec.unitary_blocks(t):
            out[idx] = U @ st.data[idx]
        return ManyBodyState(out, st.L)
    U = np.zeros((spec.dim, spec.dim), dtype=complex)
    for idx, Ub in spec.unitary_blocks(t):
        U[np.ix_(idx, idx)] = Ub
    return ManyBodyState(U @ st.data @ U.conj().T, st.L)


def covariance_of(state) -> np.ndarray:
    """``Gamma_{x,y} = <f_x^dagger f_y>``."""
    st = _as_state(state)
    space = FockSpace(st.L)
    L = st.L
    if st.is_vector:
        A = np.stack([space.annihilator(x) @ st.data for x in range(L)])
        return A.conj() @ A.T
    rho = st.data
    g = np.empty((L, L), dtype=complex)
    for x in range(L):
        for y in range(L):
            op = space.creator(x) @ space.annihilator(y)
            # tr(rho O) = sum_ij rho_ji O_ij
            g[x, y] = (op.multiply(rho.T)).sum()
    return g


def gibbs_state(H, beta: float, mu: float) -> ManyBodyState:
    """Density matrix ``e^{-beta (H - mu N)} / Z``, computed with a spectral shift."""
    dim = H.dim if isinstance(H, Spectrum) else H.shape[0]
    if dim > 1 << MAX_SITES_DENSITY:
        raise ValueError(f"density matrices limited to L <= {MAX_SITES_DENSITY}")
    spec = diagonalize(H)
    shift = min(np.min(E - mu * n) for n, _, E, _ in spec.sectors)
    rho = np.zeros((spec.dim, spec.dim), dtype=complex)
    for n, idx, E, V in spec.sectors:
        w = np.exp(-beta * (E - mu * n - shift))
        rho[np.ix_(idx, idx)] = (V * w) @ V.conj().T
    rho /= np.trace(rho).real
    return ManyBodyState(rho, spec.L)


def _quartet_value(space: FockSpace, st: ManyBodyState, q) -> complex:
    x1, x2, x3, x4 = q
    if st.is_vector:
        ket = space.annihilator(x3) @ (space.annihilator(x4) @ st.data)
        bra = space.annihilator(x2) @ (space.annihilator(x1) @ st.data)
        return complex(np.vdot(bra, ket))
    op = space.creator(x1) @ space.creator(x2) @ space.annihilator(x3) @ space.annihilator(x4)
    return complex(op.multiply(st.data.T).sum())


def wick_deviation(state, quartets, gamma: np.ndarray | None = None) -> float:
    """Largest violation of Wick's rule for ``<f1^dag f2^dag f3 f4>`` over ``quartets``.

    Quartets are 0-based site 4-tuples.  The Gaussian value is
    ``Gamma_14 Gamma_23 - Gamma_13 Gamma_24``.
    """
    st = _as_state(state)
    space = FockSpace(st.L)
    g = covariance_of(st) if gamma is None else gamma
    worst = 0.0
    for q in quartets:
        x1, x2, x3, x4 = q
        wick = g[x1, x4] * g[x2, x3] - g[x1, x3] * g[x2, x4]
        worst = max(worst, abs(_quartet_value(space, st, q) - wick))
    return float(worst)


def fock_state(occ) -> ManyBodyState:
    occ = np.asarray(occ, dtype=int)
    L = occ.size
    psi = np.zeros(1 << L, dtype=complex)
    psi[int(np.sum(occ << np.arange(L)))] = 1.0
    return ManyBodyState(psi, L)


def paired_state(blocks: int) -> ManyBodyState:
    """Product over 4-site blocks of ``(|1100> + |0011>)/sqrt(2)``."""
    L = 4 * blocks
    psi = np.zeros(1 << L, dtype=complex)
    for choice in range(1 << blocks):
        s = 0
        for b in range(blocks):
            pair = 0b0011 if (choice >> b) & 1 == 0 else 0b1100
            s |= pair << (4 * b)
        psi[s] = 1.0
    psi /= np.linalg.norm(psi)
    return ManyBodyState(psi, L)
