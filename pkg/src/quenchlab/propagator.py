"""One-particle propagators ``G(t) = exp(i t h)``.

Clean (translation-invariant) models give circulant propagators, stored as the
sequence ``g[d] = G_{x,y}`` with ``d = (x - y) mod L``.  Disordered models give
dense matrices.  The stored object satisfies ``Gamma(t) = G Gamma G^dagger``;
the Heisenberg-picture propagator acting on annihilation operators is its
complex conjugate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import jv

from .model import DisorderedModel, HoppingModel, fft_ordered_eigenvalues

__all__ = [
    "Propagator",
    "propagate",
    "propagate_disordered",
    "bessel_approximation",
    "bessel_error_bound",
]


@dataclass(frozen=True, eq=False)
class Propagator:
    """Propagator at a fixed time.

    Attributes
    ----------
    t : float
    L : int
    kind : {"circulant", "dense"}
    g : ndarray or None
        For circulant propagators, ``g[d] = G_{x,y}`` with ``d = (x - y) mod L``.
    matrix_ : ndarray or None
        For dense propagators, the full ``L x L`` matrix.
    phases : ndarray or None
        ``exp(i omega t)`` in FFT order (circulant only); multiplying phases
        composes propagators.
    """

    t: float
    L: int
    kind: str
    g: np.ndarray | None = None
    matrix_: np.ndarray | None = None
    phases: np.ndarray | None = None

    def entry(self, x: int, y: int) -> complex:
        """``G_{x,y}`` with 1-based, periodically wrapped site labels."""
        if self.kind == "circulant":
            return complex(self.g[(x - y) % self.L])
        return complex(self.matrix_[(x - 1) % self.L, (y - 1) % self.L])

    def matrix(self) -> np.ndarray:
        """Dense ``L x L`` matrix (0-based rows and columns)."""
        if self.kind == "dense":
            return self.matrix_
        x = np.arange(self.L)
        return self.g[(x[:, None] - x[None, :]) % self.L]

    def __matmul__(self, other: "Propagator") -> "Propagator":
        if self.L != other.L:
            raise ValueError("propagators on different lattices")
        if self.kind == other.kind == "circulant":
            ph = self.phases * other.phases
            return Propagator(self.t + other.t, self.L, "circulant", np.fft.ifft(ph), None, ph)
        return Propagator(self.t + other.t, self.L, "dense", None, self.matrix() @ other.matrix())

    def max_abs(self) -> float:
        if self.kind == "circulant":
            return float(np.max(np.abs(self.g)))
        return float(np.max(np.abs(self.matrix_)))

    def unitarity_defect(self) -> float:
        """``max_x |sum_y |G_{x,y}|^2 - 1|``."""
        if self.kind == "circulant":
            return abs(float(np.sum(np.abs(self.g) ** 2)) - 1.0)
        return float(np.max(np.abs(np.sum(np.abs(self.matrix_) ** 2, axis=1) - 1.0)))


def propagate(model: HoppingModel, t: float) -> Propagator:
    """Circulant propagator of a clean model via one inverse FFT."""
    if isinstance(model, DisorderedModel):
        return propagate_disordered(model, t)
    ph = np.exp(1j * fft_ordered_eigenvalues(model) * t)
    return Propagator(float(t), model.L, "circulant", np.fft.ifft(ph), None, ph)


def propagate_disordered(model: DisorderedModel, t: float) -> Propagator:
    """Dense propagator ``V exp(i omega t) V^T`` from the cached eigensystem."""
    w, V = model.eigensystem()
    G = (V * np.exp(1j * w * t)) @ V.T
    return Propagator(float(t), model.L, "dense", None, G)


def bessel_approximation(d: int, t: float) -> complex:
    """Large-``L`` propagator ``i^d J_d(-2t)`` of the nearest-neighbour chain.

    This approximates the Heisenberg-picture propagator, i.e. the complex
    conjugate of ``propagate(model, t).entry(x, y)`` with ``d = x - y`` and
    ``J_1 = 1``.  For other ``J_1`` substitute ``t -> J_1 t``.
    """
    return complex((1j) ** (d % 4) * jv(d, -2.0 * t))


def bessel_error_bound(d: int, t: float, L: int) -> float:
    """Error bound ``pi |d - 2t| / L`` for :func:`bessel_approximation`."""
    if L <= 0:
        raise ValueError("L must be positive")
    return float(np.pi * abs(d - 2.0 * t) / L)
