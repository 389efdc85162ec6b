"""Second-moment (covariance) matrices of number-conserving fermionic states.

A covariance is a plain complex ``L x L`` ndarray with
``gamma[x - 1, y - 1] = <f_x^dagger f_y>``.  Bands, currents and momentum
occupations follow 1-based labels with periodic wraparound, so ``band(g, d)[j]``
is ``Gamma_{z + d, z}`` at ``z = j + 1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import as_strided
from scipy.special import expit

from .model import DisorderedModel, HoppingModel, fft_ordered_eigenvalues
from .propagator import Propagator

__all__ = [
    "BandSpectrum",
    "CurrentTable",
    "ClusteringFit",
    "Evolution",
    "check_admissible",
    "from_occupations",
    "thermal_covariance",
    "evolve",
    "band",
    "band_matrix",
    "band_means",
    "band_spectrum",
    "equilibrium_covariance",
    "circulant_from_means",
    "circulant_from_currents",
    "dephase",
    "currents",
    "momentum_occupations",
    "max_norm_distance",
    "clustering_fit",
    "charge_density_wave",
    "half_block",
    "periodic_occupations",
]


@dataclass(frozen=True)
class BandSpectrum:
    """Fourier weights of one band: ``Gamma_{z+d,z} = sum_n X[n-1] e^{2 pi i n z / L}``."""

    d: int
    X: np.ndarray

    @property
    def conserved(self) -> complex:
        """``X_L``, the band average."""
        return complex(self.X[-1])


@dataclass(frozen=True)
class CurrentTable:
    """Band averages ``I_d = (1/L) sum_x Gamma_{x,x+d}`` for ``d = 0..floor(L/2)``."""

    I: np.ndarray
    eta: np.ndarray
    L: int

    @property
    def z_max(self) -> int:
        return len(self.I) - 1

    def truncated(self, z_xi: int) -> "CurrentTable":
        return CurrentTable(self.I[: z_xi + 1].copy(), self.eta[: z_xi + 1].copy(), self.L)


@dataclass(frozen=True)
class ClusteringFit:
    """Exponential envelope ``max_x |Gamma_{x,x+z}| <= C e^{-z/xi}``."""

    C: float
    xi: float
    reliable: bool
    n_points: int

    def envelope(self, z):
        z = np.asarray(z, dtype=float)
        if self.xi == 0:
            return np.where(z == 0, self.C, 0.0)
        return self.C * np.exp(-z / self.xi)


def _as_cov(gamma) -> np.ndarray:
    g = np.asarray(gamma)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise ValueError(f"covariance must be square, got shape {g.shape}")
    return g


def check_admissible(gamma, tol: float = 1e-10) -> None:
    """Raise ``ValueError`` unless ``gamma`` is Hermitian with spectrum in [0, 1]."""
    g = _as_cov(gamma)
    herm = np.max(np.abs(g - g.conj().T)) if g.size else 0.0
    if herm > tol:
        raise ValueError(f"covariance not Hermitian (defect {herm:.3g})")
    ev = np.linalg.eigvalsh((g + g.conj().T) / 2)
    if ev.size and (ev[0] < -tol or ev[-1] > 1 + tol):
        raise ValueError(f"covariance spectrum [{ev[0]:.3g}, {ev[-1]:.3g}] not inside [0, 1]")


# ---------------------------------------------------------------- construction


def from_occupations(occ) -> np.ndarray:
    occ = np.asarray(occ)
    if not np.all((occ == 0) | (occ == 1)):
        raise ValueError("occupations must be 0 or 1")
    return np.diag(occ.astype(complex))


def periodic_occupations(L: int, pattern) -> np.ndarray:
    """Occupation vector repeating ``pattern`` from site 1 (truncated at ``L``)."""
    pattern = np.asarray(pattern, dtype=int)
    return np.resize(pattern, L)


def charge_density_wave(L: int) -> np.ndarray:
    """``diag(1, 0, 1, 0, ...)``: odd sites filled."""
    return from_occupations(periodic_occupations(L, (1, 0)))


def half_block(L: int) -> np.ndarray:
    """First ``L // 2`` sites filled, the rest empty."""
    occ = np.zeros(L, dtype=int)
    occ[: L // 2] = 1
    return from_occupations(occ)


def thermal_covariance(h, beta: float, mu: float) -> np.ndarray:
    """Grand-canonical covariance of ``H = sum h_{xy} f_x^dagger f_y``.

    ``Gamma = f_FD(h)^T`` with ``f_FD(w) = 1/(1 + e^{beta (w - mu)})``.
    """
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    h = np.asarray(h)
    w, V = np.linalg.eigh(h)
    occ = expit(-beta * (w - mu))
    return ((V * occ) @ V.conj().T).T.astype(complex)


# ---------------------------------------------------------------- dynamics


def _to_fourier(g: np.ndarray) -> np.ndarray:
    # F Gamma F^{-1}: the covariance in the momentum basis, FFT-ordered
    return np.fft.fft(np.fft.ifft(g, axis=1), axis=0)


def _from_fourier(m: np.ndarray) -> np.ndarray:
    return np.fft.ifft(np.fft.fft(m, axis=1), axis=0)


def evolve(gamma, G: Propagator) -> np.ndarray:
    """``Gamma(t) = G Gamma G^dagger``."""
    g = _as_cov(gamma)
    if g.shape[0] != G.L:
        raise ValueError(f"dimension mismatch: covariance L={g.shape[0]}, propagator L={G.L}")
    if G.kind == "circulant":
        ph = G.phases
        return _from_fourier(ph[:, None] * _to_fourier(g) * ph.conj()[None, :])
    U = G.matrix()
    return U @ g @ U.conj().T


class Evolution:
    """Repeated evolution of one covariance under a clean model.

    The momentum-space form is computed once; each time then costs two FFT
    passes.
    """

    def __init__(self, gamma, model: HoppingModel):
        g = _as_cov(gamma)
        if g.shape[0] != model.L:
            raise ValueError("dimension mismatch")
        self.model = model
        self.omega = fft_ordered_eigenvalues(model)
        self._tilde = _to_fourier(g)

    def at(self, t: float) -> np.ndarray:
        ph = np.exp(1j * self.omega * t)
        return _from_fourier(ph[:, None] * self._tilde * ph.conj()[None, :])


def dephase(gamma, omega, tol: float | None = None, basis: np.ndarray | None = None) -> np.ndarray:
    """Infinite-time average ``Gamma^(infinity)``.

    Parameters
    ----------
    gamma : ndarray
    omega : HoppingModel, DisorderedModel or array
        The post-quench Hamiltonian.  An array is read as eigenvalues; with
        ``basis=None`` it is taken in ``k = 1..L`` order for the Fourier basis,
        otherwise it pairs with the columns of ``basis``.
    tol : float, optional
        Energies closer than ``tol`` count as degenerate.  Default
        ``1e-9 * (max(omega) - min(omega))``.
    basis : ndarray, optional
        Orthonormal eigenvectors (columns) when not diagonal in momentum.
    """
    g = _as_cov(gamma)
    if isinstance(omega, DisorderedModel):
        omega, basis = omega.eigensystem()
    elif isinstance(omega, HoppingModel):
        omega = np.roll(fft_ordered_eigenvalues(omega), -1)
    omega = np.asarray(omega, dtype=float)
    if omega.shape != (g.shape[0],):
        raise ValueError("omega must have one entry per site")
    if tol is None:
        tol = 1e-9 * float(np.ptp(omega))
    if basis is None:
        w = np.roll(omega, 1)  # FFT order
        keep = np.abs(w[:, None] - w[None, :]) <= tol
        return _from_fourier(np.where(keep, _to_fourier(g), 0))
    V = np.asarray(basis)
    keep = np.abs(omega[:, None] - omega[None, :]) <= tol
    return V @ np.where(keep, V.conj().T @ g @ V, 0) @ V.conj().T


# ---------------------------------------------------------------- bands


def band(gamma, d: int) -> np.ndarray:
    """``z -> Gamma_{z+d, z}`` for ``z = 1..L``."""
    g = _as_cov(gamma)
    L = g.shape[0]
    z = np.arange(L)
    return g[(z + d) % L, z]


def band_matrix(gamma) -> np.ndarray:
    """Read-only view ``B[d, j] = Gamma_{j+d, j}`` (0-based, ``d`` mod ``L``)."""
    g = np.ascontiguousarray(_as_cov(gamma))
    L = g.shape[0]
    g2 = np.concatenate([g, g])
    s0, s1 = g2.strides
    return as_strided(g2, shape=(L, L), strides=(s0, s0 + s1), writeable=False)


def band_means(gamma) -> np.ndarray:
    """``m[d] = (1/L) sum_z Gamma_{z+d, z}`` for ``d = 0..L-1``."""
    return band_matrix(gamma).mean(axis=1)


def band_spectrum(gamma, d: int) -> BandSpectrum:
    b = band(gamma, d)
    L = b.size
    n = np.arange(1, L + 1)
    X = np.exp(-2j * np.pi * n / L) * np.fft.fft(b)[n % L] / L
    return BandSpectrum(int(d), X)


def circulant_from_means(m) -> np.ndarray:
    """Circulant ``Gamma[x, y] = m[(x - y) mod L]``."""
    m = np.asarray(m)
    L = m.size
    x = np.arange(L)
    return m[(x[:, None] - x[None, :]) % L]


def equilibrium_covariance(gamma) -> np.ndarray:
    """Real-space average: every band replaced by its mean."""
    return circulant_from_means(band_means(gamma))


def currents(gamma, tiny: float = 1e-14) -> CurrentTable:
    g = _as_cov(gamma)
    L = g.shape[0]
    m = band_means(g)
    d = np.arange(L // 2 + 1)
    I = m[(-d) % L]
    I[0] = I[0].real
    eta = np.where(np.abs(I) > tiny, np.angle(I), 0.0)
    return CurrentTable(I, eta, L)


def circulant_from_currents(table: CurrentTable, L: int | None = None) -> np.ndarray:
    """Circulant covariance with ``Gamma_{x,x+d} = I_d``; missing currents are zero."""
    L = table.L if L is None else L
    m = np.zeros(L, dtype=complex)
    for d, Id in enumerate(table.I[: L // 2 + 1]):
        m[(-d) % L] = Id
        m[d % L] = np.conj(Id)
    if L % 2 == 0 and len(table.I) > L // 2:
        m[L // 2] = table.I[L // 2]
    m[0] = table.I[0]
    return circulant_from_means(m)


def momentum_occupations(gamma) -> np.ndarray:
    """``n_k`` for ``k = 1..L`` (array index ``k - 1``)."""
    n = np.fft.fft(band_means(gamma)).real
    return np.roll(n, -1)


def max_norm_distance(a, b) -> float:
    a, b = _as_cov(a), _as_cov(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.max(np.abs(a - b)))


def clustering_fit(gamma, floor: float = 1e-12) -> ClusteringFit:
    """Fit ``max_x |Gamma_{x,x+z}| <= C e^{-z/xi}`` over ring distances ``z``.

    The decay rate comes from least squares on the log band maxima; the
    prefactor is then raised until the curve bounds every band, so the pair
    is a valid envelope.  A diagonal covariance gives ``xi = 0``.
    """
    g = _as_cov(gamma)
    L = g.shape[0]
    B = np.abs(band_matrix(g))
    z = np.arange(L // 2 + 1)
    # distance z collects bands d = z and d = -z (equal maxima by Hermiticity)
    mx = np.maximum(B[z].max(axis=1), B[(-z) % L].max(axis=1))
    use = mx > floor
    if not use.any():
        return ClusteringFit(0.0, 0.0, False, 0)
    if not use[1:].any():
        return ClusteringFit(float(mx[0]), 0.0, True, int(use.sum()))
    zz, ly = z[use].astype(float), np.log(mx[use])
    if zz.size < 2:
        return ClusteringFit(float(mx.max()), np.inf, False, int(zz.size))
    slope = np.polyfit(zz, ly, 1)[0]
    reliable = zz.size >= 3
    if slope >= 0:
        return ClusteringFit(float(mx.max()), np.inf, reliable, int(zz.size))
    xi = -1.0 / slope
    C = float(np.exp(np.max(ly + zz / xi)))
    return ClusteringFit(C, float(xi), reliable, int(zz.size))
