"""Hopping Hamiltonians on a ring and their dispersion relations.

Sites and momentum labels are 1-based in all formulas (``k = 1..L``) with
periodic wraparound; arrays are stored 0-based, so ``omega[k - 1]`` holds the
eigenvalue at momentum ``p_k = 2 pi k / L``.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "HoppingModel",
    "DisorderedModel",
    "dispersion",
    "dispersion_derivative",
    "eigenvalues",
    "coupling_matrix",
    "sample_anderson",
    "shift_symmetries",
    "nearest_neighbour",
    "next_nearest_neighbour",
    "RNG_NAME",
]

# Disorder realizations are drawn with numpy's PCG64 bit generator; the name is
# written into run manifests so a realization can be regenerated.
RNG_NAME = "numpy.random.PCG64"


@dataclass(frozen=True)
class HoppingModel:
    """Translation-invariant real hopping model on an ``L``-site ring.

    ``J[0]`` is the on-site energy and ``J[z]`` the amplitude for hopping a
    distance ``z``; the range is ``R = len(J) - 1``.
    """

    L: int
    J: tuple[float, ...]

    def __init__(self, L: int, J: Sequence[float]):
        J = tuple(float(j) for j in J)
        if len(J) < 1:
            raise ValueError("J needs at least the on-site term J_0")
        if int(L) != L or L < 1:
            raise ValueError(f"L must be a positive integer, got {L}")
        R = len(J) - 1
        if not L > 2 * R:
            raise ValueError(f"need L > 2R for the ring dispersion, got L={L}, R={R}")
        object.__setattr__(self, "L", int(L))
        object.__setattr__(self, "J", J)

    @property
    def R(self) -> int:
        return len(self.J) - 1

    @property
    def J_max(self) -> float:
        return max((abs(j) for j in self.J[1:]), default=0.0)

    def with_size(self, L: int) -> "HoppingModel":
        return HoppingModel(L, self.J)


@dataclass(frozen=True, eq=False)
class DisorderedModel:
    """A clean hopping model plus on-site potentials ``xi`` (Anderson model)."""

    base: HoppingModel
    xi: np.ndarray
    w: float = 0.0
    seed: int | None = None
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def __post_init__(self):
        xi = np.asarray(self.xi, dtype=float).copy()
        if xi.shape != (self.base.L,):
            raise ValueError(f"xi must have length L={self.base.L}")
        xi.setflags(write=False)
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "_eig", None)

    @property
    def L(self) -> int:
        return self.base.L

    def eigensystem(self) -> tuple[np.ndarray, np.ndarray]:
        """Eigenvalues and orthonormal eigenvectors of the coupling matrix.

        Computed once; later calls (from any thread) return the cached pair.
        """
        if self._eig is None:
            with self._lock:
                if self._eig is None:
                    w, V = np.linalg.eigh(coupling_matrix(self))
                    w.setflags(write=False)
                    V.setflags(write=False)
                    object.__setattr__(self, "_eig", (w, V))
        return self._eig


def nearest_neighbour(L: int, J1: float = 1.0) -> HoppingModel:
    return HoppingModel(L, (0.0, J1))


def next_nearest_neighbour(L: int, J2: float = 1.0) -> HoppingModel:
    """Pure next-nearest-neighbour hopping (``J_1 = 0``)."""
    return HoppingModel(L, (0.0, 0.0, J2))


def dispersion(model: HoppingModel, p):
    """``E(p) = J_0 + 2 sum_z J_z cos(z p)``; vectorized over ``p``."""
    p = np.asarray(p, dtype=float)
    out = np.full(p.shape, model.J[0])
    for z, Jz in enumerate(model.J[1:], start=1):
        if Jz:
            out = out + 2.0 * Jz * np.cos(z * p)
    return out if out.ndim else float(out)


def dispersion_derivative(model: HoppingModel, order: int, p):
    """Exact ``order``-th derivative of the dispersion relation."""
    if order < 1:
        raise ValueError("order must be >= 1")
    p = np.asarray(p, dtype=float)
    out = np.zeros(p.shape)
    shift = order * np.pi / 2
    for z, Jz in enumerate(model.J[1:], start=1):
        if Jz:
            out = out + 2.0 * Jz * z**order * np.cos(z * p + shift)
    return out if out.ndim else float(out)


def eigenvalues(model: HoppingModel) -> np.ndarray:
    """``omega_k = E(2 pi k / L)`` for ``k = 1..L`` (array index ``k - 1``)."""
    k = np.arange(1, model.L + 1)
    return dispersion(model, 2 * np.pi * k / model.L)


def fft_ordered_eigenvalues(model: HoppingModel) -> np.ndarray:
    """Eigenvalues indexed like numpy's FFT output: entry ``j`` is ``omega_{j mod L}``."""
    return dispersion(model, 2 * np.pi * np.arange(model.L) / model.L)


def coupling_matrix(model: HoppingModel | DisorderedModel) -> np.ndarray:
    """Dense real symmetric ``L x L`` coupling matrix ``h``."""
    if isinstance(model, DisorderedModel):
        h = coupling_matrix(model.base)
        h[np.diag_indices(model.L)] += model.xi
        return h
    L = model.L
    row = np.zeros(L)
    row[0] = model.J[0]
    for z, Jz in enumerate(model.J[1:], start=1):
        row[z] += Jz
        row[-z] += Jz
    # h[x, y] = row[(y - x) mod L]
    x = np.arange(L)
    return row[(x[None, :] - x[:, None]) % L]


def sample_anderson(L: int, w: float, J: Sequence[float] = (0.0, 1.0), seed: int = 0) -> DisorderedModel:
    """Anderson model with i.i.d. on-site potentials uniform on ``[-w, w]``."""
    if w < 0:
        raise ValueError("disorder strength w must be non-negative")
    rng = np.random.Generator(np.random.PCG64(seed))
    xi = rng.uniform(-w, w, size=L) if w > 0 else np.zeros(L)
    return DisorderedModel(HoppingModel(L, J), xi, float(w), seed)


def shift_symmetries(model: HoppingModel, tol: float | None = None) -> set[int]:
    """All ``n`` in ``1..L-1`` with ``omega_{k+n} = omega_k`` for every ``k``."""
    omega = eigenvalues(model)
    if tol is None:
        tol = 1e-9 * float(np.max(np.abs(omega)))
    if tol < 0:
        raise ValueError("tol must be positive")
    return {
        n for n in range(1, model.L) if np.max(np.abs(np.roll(omega, -n) - omega)) <= tol
    }
