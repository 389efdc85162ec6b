"""Dephasing certificates for exponential sums via the Kusmin-Landau bound.

A phase function ``Phi_t(p) = drift * p + t * sum_z A_z cos(z p + a_z)`` is
summed over the momentum grid ``p_k = 2 pi k / L``.  Its stationary structure
(roots of the first two derivatives and their degeneracy orders) fixes a
certificate ``(C_sharp, gamma, t0, tR)`` with
``|(1/L) sum_k exp(i Phi_t(p_k))| <= C_sharp * t**(-gamma)`` for
``t0 <= t <= tR``.

Two phase families are used throughout:

* propagator phases ``omega(p) t + drift p`` (amplitudes ``2 J_z``),
* band phases ``omega(p + 2 alpha) t - omega(p) t + drift p`` with
  ``alpha = n pi / L`` (amplitudes ``4 J_z sin(z alpha)``, phases
  ``z alpha + pi / 2``), which control the Fourier weight ``X_n`` of a band.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .covariance import band_matrix, band_spectrum, clustering_fit
from .model import HoppingModel, eigenvalues

__all__ = [
    "PhaseFunction",
    "StationaryStructure",
    "DephasingCertificate",
    "NoCertificate",
    "StructuralDegeneracy",
    "trig_roots",
    "stationary_structure",
    "certificate",
    "exponential_sum",
    "kusmin_landau_bound",
    "propagator_phase",
    "band_phase",
    "bound_f_n",
    "f_n",
    "propagator_bound",
    "resilience_constant",
    "default_threshold",
    "resilient_set",
    "ResilienceReport",
    "classify_resilience",
    "equilibration_bound",
    "EquilibrationBound",
]

UNIT_CIRCLE_TOL = 1e-7
CLUSTER_TOL = 1e-9
# np.roots resolves a double root only to about sqrt(machine eps); after Newton
# polishing both copies land within ~1e-8 of each other
DOUBLE_ROOT_TOL = 1e-6
DEGENERACY_RTOL = 1e-8


class NoCertificate(ValueError):
    """Requested time lies outside the certified window (or the window is empty)."""


class StructuralDegeneracy(ValueError):
    """A stationary point with no non-vanishing derivative up to order 2R + 3."""


# ---------------------------------------------------------------- phases


@dataclass(frozen=True)
class PhaseFunction:
    """``Phi_t(p) = drift * p + t * sum_z amps[z-1] cos(z p + phases[z-1])``."""

    drift: float
    t: float
    amps: tuple[float, ...]
    phases: tuple[float, ...]

    def __init__(self, drift: float, t: float, amps, phases=None):
        amps = tuple(float(a) for a in amps)
        phases = tuple(0.0 for _ in amps) if phases is None else tuple(float(a) for a in phases)
        if len(phases) != len(amps):
            raise ValueError("amps and phases must have equal length")
        object.__setattr__(self, "drift", float(drift))
        object.__setattr__(self, "t", float(t))
        object.__setattr__(self, "amps", amps)
        object.__setattr__(self, "phases", phases)

    @property
    def R(self) -> int:
        return len(self.amps)

    @property
    def trivial(self) -> bool:
        """True if every harmonic vanishes (pure drift)."""
        return all(a == 0 for a in self.amps)

    def at(self, t: float) -> "PhaseFunction":
        return PhaseFunction(self.drift, t, self.amps, self.phases)

    def c_max(self, order: int) -> float:
        """``C^(order)_max = sum_z z^order |A_z|``."""
        return float(sum(z**order * abs(a) for z, a in enumerate(self.amps, start=1)))

    def __call__(self, p):
        p = np.asarray(p, dtype=float)
        out = self.drift * p
        for z, (a, ph) in enumerate(zip(self.amps, self.phases), start=1):
            if a:
                out = out + self.t * a * np.cos(z * p + ph)
        return out

    def unscaled_derivative(self, order: int, p):
        """``Phi_t^(order)(p) / t``; for ``order == 1`` this includes ``drift / t``."""
        p = np.asarray(p, dtype=float)
        out = np.zeros(p.shape)
        if order == 1:
            out = out + self.drift / self.t
        for z, (a, ph) in enumerate(zip(self.amps, self.phases), start=1):
            if a:
                out = out + a * z**order * np.cos(z * p + ph + order * np.pi / 2)
        return out if out.ndim else float(out)

    def derivative(self, order: int, p):
        """``Phi_t^(order)(p)``."""
        if order == 0:
            return self(p)
        p = np.asarray(p, dtype=float)
        out = np.zeros(p.shape)
        if order == 1:
            out = out + self.drift
        for z, (a, ph) in enumerate(zip(self.amps, self.phases), start=1):
            if a:
                out = out + self.t * a * z**order * np.cos(z * p + ph + order * np.pi / 2)
        return out if out.ndim else float(out)

    def fourier(self, order: int) -> tuple[float, np.ndarray, np.ndarray]:
        """Cosine/sine coefficients ``(c0, c, s)`` of ``Phi_t^(order) / t``."""
        c0 = self.drift / self.t if order == 1 else 0.0
        c = np.zeros(self.R)
        s = np.zeros(self.R)
        for z, (a, ph) in enumerate(zip(self.amps, self.phases), start=1):
            th = ph + order * np.pi / 2
            c[z - 1] = a * z**order * np.cos(th)
            s[z - 1] = -a * z**order * np.sin(th)
        return c0, c, s


def propagator_phase(model: HoppingModel, t: float, drift: float = 0.0) -> PhaseFunction:
    """Phase of ``G_{x,y}(t)`` with ``drift = x - y`` (the constant ``J_0 t`` dropped)."""
    return PhaseFunction(drift, t, [2.0 * J for J in model.J[1:]])


def band_phase(model: HoppingModel, alpha: float, t: float, drift: float = 0.0) -> PhaseFunction:
    """Phase of ``f_n(t)`` at ``alpha = n pi / L``."""
    amps, phases = [], []
    for z, J in enumerate(model.J[1:], start=1):
        a = 4.0 * J * math.sin(z * alpha)
        amps.append(a if abs(a) > 1e-15 * max(1.0, abs(J)) else 0.0)
        phases.append(z * alpha + np.pi / 2)
    return PhaseFunction(drift, t, amps, phases)


# ---------------------------------------------------------------- roots


def _polish(f, df, p: float, iters: int = 60) -> float:
    for _ in range(iters):
        d = df(p)
        if d == 0:
            break
        step = f(p) / d
        p -= step
        if abs(step) < 1e-15:
            break
    return p


def trig_roots(c0: float, c, s, *, unit_tol: float = UNIT_CIRCLE_TOL) -> np.ndarray:
    """Real roots in ``[0, 2 pi)`` of ``c0 + sum_z c_z cos(z p) + s_z sin(z p)``.

    Uses the companion matrix of the degree-``2R`` polynomial obtained by
    substituting ``u = e^{ip}`` and multiplying by ``u^R``, keeps eigenvalues
    near the unit circle, polishes them with Newton's method on the real
    function and merges clusters.
    """
    c = np.asarray(c, dtype=float)
    s = np.asarray(s, dtype=float)
    R = c.size
    if c0 == 0 and not np.any(c) and not np.any(s):
        raise ValueError("trig_roots: all-zero trigonometric polynomial")
    if R == 0 or (not np.any(c) and not np.any(s)):
        return np.empty(0)
    z = np.arange(1, R + 1)
    a = (c - 1j * s) / 2  # coefficient of e^{izp}
    b = (c + 1j * s) / 2  # coefficient of e^{-izp}
    poly = np.zeros(2 * R + 1, dtype=complex)  # poly[j] multiplies u^j
    poly[R] = c0
    poly[R + z] = a
    poly[R - z] = b
    u = np.roots(poly[::-1])
    u = u[np.abs(np.abs(u) - 1) <= unit_tol]

    def f(p):
        return c0 + np.sum(c * np.cos(z * p) + s * np.sin(z * p))

    def df(p):
        return np.sum(-c * z * np.sin(z * p) + s * z * np.cos(z * p))

    scale = abs(c0) + np.sum(np.abs(c) + np.abs(s))
    roots = []
    for p in np.mod(np.angle(u), 2 * np.pi):
        p = _polish(f, df, float(p))
        if abs(f(p)) <= 1e-9 * scale:
            roots.append(float(np.mod(p, 2 * np.pi)))
    return _merge(sorted(roots))


def _merge(roots: list[float]) -> np.ndarray:
    out: list[float] = []
    for r in roots:
        if out and (r - out[-1]) <= DOUBLE_ROOT_TOL:
            continue
        out.append(r)
    if len(out) > 1 and (out[0] + 2 * np.pi - out[-1]) <= DOUBLE_ROOT_TOL:
        out.pop()
    return np.array(out)


# ---------------------------------------------------------------- structure


@dataclass(frozen=True)
class StationaryStructure:
    S1: np.ndarray
    S2: np.ndarray
    kappa1: np.ndarray
    kappa2: np.ndarray
    d1: np.ndarray  # |Phi^(kappa+1)(r)| over S1, unscaled
    d2: np.ndarray  # |Phi^(kappa+2)(r)| over S2, unscaled
    M: float

    @property
    def kappa0(self) -> int:
        k = np.concatenate([self.kappa1, self.kappa2])
        return int(k.max()) if k.size else 1

    @property
    def generic(self) -> bool:
        """No point with ``Phi'' = Phi''' = 0``."""
        return bool(np.all(self.kappa2 == 1))

    def kappa(self) -> dict[float, int]:
        out = {float(r): int(k) for r, k in zip(self.S2, self.kappa2)}
        out.update({float(r): int(k) for r, k in zip(self.S1, self.kappa1)})
        return out


def _kappa(phi: PhaseFunction, r: float, offset: int, tol_rel: float) -> tuple[int, float]:
    for kappa in range(1, 2 * phi.R + 4 - offset):
        m = kappa + offset
        v = abs(phi.unscaled_derivative(m, r))
        if v > tol_rel * phi.c_max(m):
            return kappa, v
    raise StructuralDegeneracy(
        f"stationary point p={r:.12g} has all derivatives up to order {2 * phi.R + 3} below tolerance"
    )


def stationary_structure(phi: PhaseFunction, tol: float = DEGENERACY_RTOL) -> StationaryStructure:
    """Roots of ``Phi_t'`` and ``Phi_t''`` with their degeneracy orders.

    ``tol`` is relative: ``Phi^(m)(r)`` counts as zero when
    ``|Phi^(m)(r)| <= tol * C^(m)_max`` (derivatives of ``Phi_t / t``).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if phi.trivial:
        raise StructuralDegeneracy("phase function has no harmonics (pure drift)")
    if phi.t <= 0:
        raise ValueError("stationary structure needs t > 0")
    S1 = trig_roots(*phi.fourier(1))
    S2 = trig_roots(*phi.fourier(2))
    k1, d1 = zip(*[_kappa(phi, r, 1, tol) for r in S1]) if S1.size else ((), ())
    k2, d2 = zip(*[_kappa(phi, r, 2, tol) for r in S2]) if S2.size else ((), ())
    k1, d1, k2, d2 = (np.asarray(v) for v in (k1, d1, k2, d2))
    third = np.abs(phi.unscaled_derivative(3, S2)) if S2.size else np.empty(0)
    cands = [d1.min()] if d1.size else []
    if third.size:
        cands.append(third.min() ** 2)
    M = 0.25 * min(cands) if cands else np.inf
    return StationaryStructure(S1, S2, k1.astype(int), k2.astype(int), d1.astype(float), d2.astype(float), float(M))


# ---------------------------------------------------------------- certificate


@dataclass(frozen=True)
class DephasingCertificate:
    C_sharp: float
    gamma: float
    t0: float
    tR: float
    structure: StationaryStructure
    generic: bool
    C0: float
    C1: float
    C_sharp_general: float
    L: int
    extras: dict = field(default_factory=dict, compare=False)

    @property
    def window_empty(self) -> bool:
        return not self.t0 < self.tR

    def in_window(self, t: float) -> bool:
        return self.t0 <= t <= self.tR

    def bound(self, t: float) -> float:
        if not self.in_window(t):
            raise NoCertificate(f"t={t} outside certified window [{self.t0:.6g}, {self.tR:.6g}]")
        return self.C_sharp * t ** (-self.gamma)

    def as_dict(self) -> dict:
        st = self.structure
        return {
            "C_sharp": self.C_sharp,
            "C_sharp_general": self.C_sharp_general,
            "gamma": self.gamma,
            "t0": self.t0,
            "tR": self.tR,
            "C0": self.C0,
            "C1": self.C1,
            "generic": self.generic,
            "roots": {"S1": st.S1.tolist(), "S2": st.S2.tolist()},
            "kappa": {"S1": st.kappa1.tolist(), "S2": st.kappa2.tolist()},
            "kappa0": st.kappa0,
            "M": st.M,
            "L": self.L,
        }


def _min_circular_separation(points) -> float:
    pts = np.sort(np.mod(np.asarray(points, dtype=float), 2 * np.pi))
    if pts.size <= 1:
        return 2 * np.pi
    gaps = np.diff(np.concatenate([pts, [pts[0] + 2 * np.pi]]))
    return float(gaps.min())


def certificate(phi: PhaseFunction, L: int, tol: float = DEGENERACY_RTOL) -> DephasingCertificate:
    """Constants of the dephasing bound for ``phi`` on an ``L``-point grid."""
    st = stationary_structure(phi, tol)
    R = phi.R
    C3 = phi.c_max(3)
    fact1 = np.array([math.factorial(k) for k in st.kappa1], dtype=float)
    fact2 = np.array([math.factorial(k) for k in st.kappa2], dtype=float)

    C0 = float(np.min(st.d2 / (2 * C3 * fact2))) if st.S2.size else 1.0
    parts = []
    if st.S1.size:
        parts.append(np.min(st.d1 / fact1))
    if st.S2.size:
        parts.append(np.min(st.d2 * C0 / fact2))
    C1 = 0.25 * min(parts) if parts else np.inf

    t0_terms = [1.0]
    for r, k, v in zip(st.S2, st.kappa2, st.d2):
        ratio = abs(phi.unscaled_derivative(k + 3, r)) / ((k + 1) * v)
        t0_terms.append(ratio ** (3 * k))
    for k, v in zip(st.kappa1, st.d1):
        t0_terms.append((phi.c_max(k + 2) / ((k + 1) * v)) ** (3 * k))
    all_pts = np.concatenate([st.S1, st.S2])
    # a point that is both in S1 and S2 is one stationary point, not two
    sep = _min_circular_separation(_merge(sorted(np.mod(all_pts, 2 * np.pi).tolist()))) if all_pts.size else 2 * np.pi
    t0_terms.append(((C0 + 1) / sep) ** (2 * R + 2))
    t0 = float(max(t0_terms))
    tR = float(L / (4 * max(phi.c_max(1), C1)))

    general = [1.0, C0]
    if st.S2.size:
        general.append(float(np.max(8 * fact2**2 * C3 / st.d2**2)))
    if st.S1.size:
        general.append(float(np.max(4 * fact1 / st.d1)))
    C_general = 6 * (2 * R + 1) * max(general)

    generic = st.generic
    if generic:
        C_sharp = 6 * (2 * R + 1) * max(1.0, 8 * C3 / st.M**2)
        gamma = 1.0 / 3.0
    else:
        C_sharp = C_general
        gamma = 1.0 / (3 * st.kappa0)
    return DephasingCertificate(float(C_sharp), gamma, t0, tR, st, generic, C0, float(C1), float(C_general), int(L))


def exponential_sum(phi: PhaseFunction, L: int) -> complex:
    """``(1/L) sum_{k=1..L} exp(i Phi_t(2 pi k / L))``."""
    p = 2 * np.pi * np.arange(1, L + 1) / L
    return complex(np.mean(np.exp(1j * phi(p))))


def kusmin_landau_bound(phases) -> float:
    """``cot(lambda/4)`` bound on ``|sum_n exp(i phi_n)|`` for monotone gaps.

    The gaps ``phi_{n+1} - phi_n`` must be non-decreasing (or non-increasing,
    by conjugation) and lie in ``[lambda, 2 pi - lambda]`` for some
    ``lambda > 0``.
    """
    gaps = np.diff(np.asarray(phases, dtype=float))
    if gaps.size == 0:
        return 1.0
    if not np.all(np.diff(gaps) >= 0):
        if not np.all(np.diff(gaps) <= 0):
            raise ValueError("Kusmin-Landau needs monotone gaps")
        gaps = -gaps  # complex conjugate sum, same modulus
    # adding 2 pi k n to phi_n leaves the sum unchanged and shifts every gap
    gaps = gaps - 2 * np.pi * np.floor(gaps.min() / (2 * np.pi))
    lam = min(gaps.min(), 2 * np.pi - gaps.max())
    if lam <= 0:
        raise ValueError("gaps not separated from multiples of 2 pi")
    return float(1.0 / np.tan(lam / 4))


# ---------------------------------------------------------------- band and propagator bounds


def trivial_horizon(R: int) -> float:
    """Times below which every certificate bound is at least 1.

    Any ``C_sharp >= 6 (2R + 1)`` and ``gamma <= 1/3``, so
    ``C_sharp t^-gamma >= 1`` for ``t <= (6 (2R + 1))^3``.
    """
    return float((6 * (2 * R + 1)) ** 3)


def _reduce_drift(D: int, L: int) -> int:
    D = D % L
    return D - L if D > L // 2 else D


def f_n(model: HoppingModel, n: int, drift: int, t: float) -> complex:
    """``(1/L) sum_s exp(i (omega_{s+n} - omega_s) t + 2 pi i s drift / L)`` evaluated directly."""
    L = model.L
    w = eigenvalues(model)
    s = np.arange(1, L + 1)
    return complex(np.mean(np.exp(1j * (np.roll(w, -n) - w) * t + 2j * np.pi * s * drift / L)))


def _drift_only_value(drift: int, L: int) -> float:
    return 1.0 if drift % L == 0 else 0.0


def bound_f_n(model: HoppingModel, n: int, drift: int, t: float, C_th: float | None = None) -> float:
    """Upper bound on ``|f_n(t)|`` at the given drift ``x - y - d``.

    Returns 1 (the trivial bound) for the conserved component ``n = L``, when
    the certificate constant reaches ``C_th``, or when ``t`` is outside the
    certificate window.
    """
    L = model.L
    if not 1 <= n <= L:
        raise ValueError("n must be in 1..L")
    if n == L:
        return 1.0
    alpha = n * np.pi / L
    D = _reduce_drift(int(drift), L)
    phi0 = band_phase(model, alpha, 1.0, 0.0)
    if phi0.trivial:
        return _drift_only_value(D, L)
    if t <= trivial_horizon(model.R):
        return 1.0
    if C_th is not None and resilience_constant(model, n, L) >= C_th:
        return 1.0
    try:
        cert = certificate(band_phase(model, alpha, t, D), L)
    except StructuralDegeneracy:
        return 1.0
    if not cert.in_window(t):
        return 1.0
    return float(min(1.0, cert.bound(t)))


def _propagator_window(model: HoppingModel) -> DephasingCertificate:
    if model.J_max == 0:
        raise ValueError("flat band: the propagator never decays (|G_xx| = 1)")
    return certificate(propagator_phase(model, 1.0, 0.0), model.L)


def propagator_bound(model: HoppingModel, t: float) -> float:
    """Uniform bound on ``max_{x,y} |G_{x,y}(t)|``.

    The window comes from the zero-drift certificate.  Drifts whose own
    certificate does not cover ``t`` contribute the trivial value 1.
    """
    cert0 = _propagator_window(model)
    if not cert0.in_window(t):
        raise NoCertificate(f"t={t} outside certified window [{cert0.t0:.6g}, {cert0.tR:.6g}]")
    L = model.L
    worst = 0.0
    for D in range(-(L // 2), L // 2 + 1):
        try:
            c = certificate(propagator_phase(model, t, D), L)
            val = c.C_sharp * t ** (-c.gamma) if c.in_window(t) else 1.0
        except StructuralDegeneracy:
            val = 1.0
        worst = max(worst, val)
    return float(worst)


# ---------------------------------------------------------------- resilience


@lru_cache(maxsize=65536)
def _resilience_constant_cached(J: tuple, n: int, L: int) -> float:
    model = HoppingModel(L, J)
    phi = band_phase(model, n * np.pi / L, 1.0, 0.0)
    if phi.trivial:
        return np.inf
    try:
        return certificate(phi, L).C_sharp
    except StructuralDegeneracy:
        return np.inf


def resilience_constant(model: HoppingModel, n: int, L: int | None = None) -> float:
    """``C_sharp(n pi / L)`` of the drift-free band phase (``inf`` if it never dephases)."""
    L = model.L if L is None else L
    if n % L == 0:
        return np.inf
    return _resilience_constant_cached(model.J, int(n), int(L))


def default_threshold(model: HoppingModel, L: int | None = None) -> float:
    """Ten times the band constant at ``alpha = pi / 2``.

    If that point never dephases (a shift symmetry such as the pure
    next-nearest-neighbour chain), the smallest constant on a grid of
    ``alpha`` values is used instead.
    """
    L = model.L if L is None else L
    phi = band_phase(model, np.pi / 2, 1.0)
    c = np.inf
    if not phi.trivial:
        try:
            c = certificate(phi, L).C_sharp
        except StructuralDegeneracy:
            c = np.inf
    if not np.isfinite(c):
        vals = []
        for a in np.linspace(0.05, np.pi - 0.05, 64):
            ph = band_phase(model, a, 1.0)
            if ph.trivial:
                continue
            try:
                vals.append(certificate(ph, L).C_sharp)
            except StructuralDegeneracy:
                pass
        c = min(vals)
    return 10.0 * c


def resilient_set(model: HoppingModel, L: int | None = None, C_th: float | None = None) -> set[int]:
    """``{n in 1..L-1 : C_sharp(n pi / L) >= C_th}``."""
    L = model.L if L is None else L
    if C_th is None:
        C_th = default_threshold(model, L)
    if C_th <= 0:
        raise ValueError("C_th must be positive")
    return {n for n in range(1, L) if resilience_constant(model, n, L) >= C_th}


@dataclass
class ResilienceReport:
    verdict: str
    C_th: float
    c_RS: float
    c_NRS: float
    L: int
    resilient: set
    W_res: dict
    W_ok: dict

    @property
    def non_resilient(self) -> bool:
        return self.verdict == "NON-RESILIENT"

    def max_W_res(self) -> float:
        return max(self.W_res.values(), default=0.0)

    def max_W_ok(self) -> float:
        return max(self.W_ok.values(), default=0.0)

    def as_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "C_th": self.C_th,
            "c_RS": self.c_RS,
            "c_NRS": self.c_NRS,
            "L": self.L,
            "max_W_res": self.max_W_res(),
            "max_W_ok": self.max_W_ok(),
            "W_res": {str(k): v for k, v in self.W_res.items()},
            "W_ok": {str(k): v for k, v in self.W_ok.items()},
            "n_resilient": len(self.resilient),
        }


def band_offsets(L: int) -> range:
    return range(-((L - 1) // 2), L // 2 + 1)


def _active_bands(gamma, tiny: float) -> list[int]:
    L = gamma.shape[0]
    mx = np.abs(band_matrix(gamma)).max(axis=1)
    return [d for d in band_offsets(L) if mx[d % L] > tiny]


def classify_resilience(
    gamma,
    model: HoppingModel,
    C_th: float | None = None,
    c_RS: float = 1.0,
    c_NRS: float = 10.0,
    tiny: float = 1e-12,
) -> ResilienceReport:
    """Split each band's Fourier weight into resilient and dephasing parts."""
    L = gamma.shape[0]
    if C_th is None:
        C_th = default_threshold(model.with_size(L), L)
    res = resilient_set(model.with_size(L), L, C_th)
    mask = np.zeros(L, dtype=bool)  # mask[n-1] for n in resilient set
    for n in res:
        mask[n - 1] = True
    W_res, W_ok = {}, {}
    for d in _active_bands(gamma, tiny):
        X = np.abs(band_spectrum(gamma, d).X)
        W_res[d] = float(X[:-1][mask[:-1]].sum())
        W_ok[d] = float(X[:-1][~mask[:-1]].sum())
    nonres = max(W_res.values(), default=0.0) <= c_RS / L and max(W_ok.values(), default=0.0) <= c_NRS
    return ResilienceReport(
        "NON-RESILIENT" if nonres else "RESILIENT", float(C_th), c_RS, c_NRS, L, res, W_res, W_ok
    )


# ---------------------------------------------------------------- equilibration


@dataclass
class EquilibrationBound:
    value: float
    t: float
    d_xi: float
    band_terms: dict
    tail: float
    window: tuple[float, float]


def equilibration_bound(
    gamma,
    model: HoppingModel,
    t: float,
    C_th: float | None = None,
    report: ResilienceReport | None = None,
    details: bool = False,
    force: bool = False,
):
    """Certified upper bound on ``max_{x,y} |Gamma(t) - Gamma^(eq)|``.

    Bands with ``|d| <= d_xi(t) = xi ln(t^gamma)`` are bounded through their
    Fourier weights: resilient weight counts fully, the rest is multiplied by
    the drift-uniform ``f_n`` bound.  Each band term is also capped at twice
    the band's largest entry.  Farther bands are bounded by the exponential
    clustering envelope of the initial state.
    """
    gamma = np.asarray(gamma)
    L = gamma.shape[0]
    model = model.with_size(L)
    cert0 = _propagator_window(model)
    if not cert0.in_window(t):
        raise NoCertificate(f"t={t} outside certified window [{cert0.t0:.6g}, {cert0.tR:.6g}]")
    if report is None:
        report = classify_resilience(gamma, model, C_th)
    if not report.non_resilient and not force:
        raise ValueError("equilibration bound needs non-resilient second moments")
    fit = clustering_fit(gamma)
    g = 1.0 / (3 * cert0.structure.kappa0) if not cert0.generic else 1.0 / 3.0
    d_xi = fit.xi * math.log(t**g) if fit.xi > 0 else 0.0
    if not np.isfinite(d_xi):
        d_xi = L
    mask = np.zeros(L, dtype=bool)
    for n in report.resilient:
        mask[n - 1] = True
    B = np.abs(band_matrix(gamma)).max(axis=1)
    fn = None
    band_terms = {}
    for d in band_offsets(L):
        if abs(d) > d_xi or B[d % L] == 0:
            continue
        X = np.abs(band_spectrum(gamma, d).X)[:-1]
        if fn is None:
            fn = np.array(
                [max(bound_f_n(model, n, D, t, report.C_th) for D in _drift_samples(model, t)) for n in range(1, L)]
            )
        term = X[mask[:-1]].sum() + np.sum(X[~mask[:-1]] * fn[~mask[:-1]])
        band_terms[d] = float(min(term, 2 * B[d % L]))
    tail = 0.0
    if fit.xi > 0:
        d_start = math.floor(d_xi) + 1
        if np.isfinite(fit.xi):
            q = math.exp(-1.0 / fit.xi)
            tail = 2 * 2 * fit.C * q**d_start / (1 - q)
        else:
            tail = float(2 * sum(B[d % L] for d in band_offsets(L) if abs(d) > d_xi))
    value = float(sum(band_terms.values()) + tail)
    if details:
        return EquilibrationBound(value, t, d_xi, band_terms, tail, (cert0.t0, cert0.tR))
    return value


def _drift_samples(model: HoppingModel, t: float):
    # below the trivial horizon every drift gives the same answer
    if t <= trivial_horizon(model.R):
        return (0,)
    L = model.L
    return range(-(L // 2), L // 2 + 1)
