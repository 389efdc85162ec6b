"""Generalized Gibbs ensembles built from conserved currents, and thermal fits.

A GGE with multipliers ``lam`` and Peierls angles ``eta`` is diagonal in
momentum with occupations ``n_k = 1/(1 + exp(eps_k))`` where

    eps_k = lam[0] + 2 sum_{z>=1} lam[z] cos(2 pi k z / L + eta[z]).

The ``1/L`` normalization of the current operators is absorbed into ``lam``,
which keeps the multipliers intensive.  A thermal state of a clean model is
the GGE with ``lam[0] = beta (J_0 - mu)`` and ``lam[z] = beta J_z``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog, minimize_scalar
from scipy.special import expit, log_expit

from .covariance import CurrentTable, band_matrix, circulant_from_means, thermal_covariance
from .model import DisorderedModel, HoppingModel, coupling_matrix, fft_ordered_eigenvalues

__all__ = [
    "GGEParams",
    "ThermalFit",
    "Infeasible",
    "NotConverged",
    "gge_occupations",
    "gge_covariance",
    "thermal_params",
    "fit_gge",
    "fit_thermal",
    "relevant_range",
]

log = logging.getLogger(__name__)


class Infeasible(ValueError):
    """Target currents cannot be produced by any occupations strictly inside (0, 1)."""

    def __init__(self, msg: str, slack: float):
        super().__init__(msg)
        self.slack = slack


class NotConverged(RuntimeError):
    def __init__(self, msg: str, residual: float, params: "GGEParams"):
        super().__init__(msg)
        self.residual = residual
        self.params = params


@dataclass(frozen=True)
class GGEParams:
    lam: np.ndarray
    eta: np.ndarray | None = None

    def __post_init__(self):
        lam = np.atleast_1d(np.asarray(self.lam, dtype=float))
        if not np.all(np.isfinite(lam)):
            raise ValueError("multipliers must be finite")
        eta = np.zeros_like(lam) if self.eta is None else np.asarray(self.eta, dtype=float)
        if eta.shape != lam.shape:
            raise ValueError("eta must match lam")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "eta", eta)

    @property
    def z_xi(self) -> int:
        return self.lam.size - 1

    def mode_energies(self, L: int) -> np.ndarray:
        """``eps_k`` for ``k = 1..L``."""
        k = np.arange(1, L + 1)
        eps = np.full(L, self.lam[0])
        for z in range(1, self.lam.size):
            eps += 2 * self.lam[z] * np.cos(2 * np.pi * k * z / L + self.eta[z])
        return eps


@dataclass(frozen=True)
class ThermalFit:
    beta: float
    mu: float
    residual: float
    boundary_hit: bool = False
    search: dict = field(default_factory=dict, compare=False)


def gge_occupations(params: GGEParams, L: int) -> np.ndarray:
    return expit(-params.mode_energies(L))


def _covariance_from_occupations(n: np.ndarray) -> np.ndarray:
    # n[k-1] for k = 1..L; band means m[d] = (1/L) sum_k n_k e^{2 pi i k d / L}
    return circulant_from_means(np.fft.ifft(np.roll(n, 1)))


def gge_covariance(params: GGEParams, L: int) -> np.ndarray:
    return _covariance_from_occupations(gge_occupations(params, L))


def thermal_params(model: HoppingModel, beta: float, mu: float) -> GGEParams:
    lam = [beta * (model.J[0] - mu)] + [beta * J for J in model.J[1:]]
    return GGEParams(np.array(lam))


# ---------------------------------------------------------------- max-entropy fit


def _features(L: int, z_xi: int) -> np.ndarray:
    p = 2 * np.pi * np.arange(1, L + 1) / L
    rows = [np.ones(L)]
    for z in range(1, z_xi + 1):
        rows.append(np.cos(z * p))
        rows.append(np.sin(z * p))
    return np.array(rows)


def _targets(table: CurrentTable, z_xi: int) -> np.ndarray:
    I = np.asarray(table.I)
    if I.size < z_xi + 1:
        raise ValueError(f"need currents up to z={z_xi}, table has {I.size - 1}")
    c = [I[0].real]
    for z in range(1, z_xi + 1):
        # (1/L) sum n_k e^{-ikp}: real part pairs with cos, minus imaginary with sin
        c.extend([I[z].real, -I[z].imag])
    return np.array(c)


def _feasibility_slack(Phi: np.ndarray, c: np.ndarray) -> float:
    """Largest ``s`` with ``s <= n_k <= 1 - s`` and ``mean(Phi n) = c``."""
    m, L = Phi.shape
    # variables (n_1..n_L, s); maximise s
    obj = np.zeros(L + 1)
    obj[-1] = -1.0
    A_eq = np.hstack([Phi / L, np.zeros((m, 1))])
    A_ub = np.vstack([
        np.hstack([-np.eye(L), np.ones((L, 1))]),
        np.hstack([np.eye(L), np.ones((L, 1))]),
    ])
    b_ub = np.concatenate([np.zeros(L), np.ones(L)])
    res = linprog(obj, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=c, bounds=[(0, 1)] * L + [(None, 0.5)], method="highs")
    return -res.fun if res.status == 0 else -np.inf


def fit_gge(
    targets: CurrentTable,
    z_xi: int,
    L: int | None = None,
    tol: float = 1e-12,
    max_iter: int = 200,
    check_feasible: bool = True,
) -> GGEParams:
    """Maximum-entropy multipliers reproducing the currents ``I_0..I_{z_xi}``.

    Minimises the convex dual ``mean(log(1 + e^{-eps})) + mu . c`` by damped
    Newton steps; the gradient is the current mismatch.
    """
    L = targets.L if L is None else L
    if z_xi < 0:
        raise ValueError("z_xi must be >= 0")
    if 2 * z_xi + 1 > L:
        raise ValueError("too many currents for the lattice size")
    Phi = _features(L, z_xi)
    c = _targets(targets, z_xi)
    if check_feasible:
        slack = _feasibility_slack(Phi, c)
        if not slack > 1e-10:
            raise Infeasible(f"targets not realizable by occupations in (0, 1) (slack {slack:.3g})", slack)

    def dual(mu):
        eps = mu @ Phi
        return -np.mean(log_expit(eps)) + mu @ c

    def gradient(mu):
        return c - Phi @ expit(-(mu @ Phi)) / L

    mu = np.zeros(c.size)
    f = dual(mu)
    for it in range(max_iter):
        n = expit(-(mu @ Phi))
        grad = c - Phi @ n / L
        gmax = np.max(np.abs(grad))
        if gmax < tol:
            break
        H = (Phi * (n * (1 - n))) @ Phi.T / L
        step = np.linalg.solve(H + 1e-14 * np.eye(c.size), grad)
        a = 1.0
        while True:
            new = mu - a * step
            fn = dual(new)
            if fn <= f + 1e-4 * a * (grad @ -step) or a < 1e-12:
                break
            # near the optimum the dual is flat to roundoff; fall back on the gradient
            if np.max(np.abs(gradient(new))) < 0.5 * gmax:
                break
            a *= 0.5
        mu, f = new, fn
    n = expit(-(mu @ Phi))
    resid = float(np.max(np.abs(c - Phi @ n / L)))
    lam, eta = _to_params(mu, z_xi)
    params = GGEParams(lam, eta)
    if resid > max(tol, 1e-9):
        raise NotConverged(f"fit_gge stopped after {max_iter} iterations, residual {resid:.3g}", resid, params)
    return params


def _to_params(mu: np.ndarray, z_xi: int) -> tuple[np.ndarray, np.ndarray]:
    lam = np.zeros(z_xi + 1)
    eta = np.zeros(z_xi + 1)
    lam[0] = mu[0]
    # multipliers at roundoff level carry no phase information
    tiny = 1e-12 * max(1.0, float(np.max(np.abs(mu))))
    for z in range(1, z_xi + 1):
        u, v = mu[2 * z - 1], mu[2 * z]
        # u cos + v sin = 2 lam cos(. + eta)
        lam[z] = 0.5 * math.hypot(u, v)
        eta[z] = math.atan2(-v, u) if lam[z] > tiny else 0.0
        # prefer a signed multiplier with |eta| <= pi/2 (eta = 0 for real currents)
        if eta[z] > np.pi / 2 or eta[z] <= -np.pi / 2:
            lam[z] = -lam[z]
            eta[z] -= math.copysign(np.pi, eta[z])
    return lam, eta


def relevant_range(C_clust: float, xi: float, eps: float) -> int:
    """``max(0, ceil(xi ln(C_clust / eps)))``."""
    if eps <= 0 or C_clust <= 0:
        raise ValueError("eps and C_clust must be positive")
    if xi == 0:
        return 0
    v = xi * math.log(C_clust / eps)
    # guard against values like 2.0000000000000004 from rounding
    return max(0, math.ceil(v - 1e-12))


# ---------------------------------------------------------------- thermal fit


class _ThermalObjective:
    def __init__(self, target, model):
        target = np.asarray(target)
        self.L = target.shape[0]
        self.target = target
        self.density = float(np.trace(target).real) / self.L
        if isinstance(model, DisorderedModel):
            self.h = coupling_matrix(model)
            self.omega = np.linalg.eigvalsh(self.h)
            self.B = None
        else:
            model = model.with_size(self.L)
            self.h = None
            self.omega = fft_ordered_eigenvalues(model)
            self.B = np.array(band_matrix(target))

    def occupation(self, beta, mu):
        return expit(-beta * (self.omega - mu))

    def mu_for_density(self, beta: float) -> float:
        lo = self.omega.min() - 60.0 / beta
        hi = self.omega.max() + 60.0 / beta
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if self.occupation(beta, mid).mean() < self.density:
                lo = mid
            else:
                hi = mid
            if hi - lo < 1e-15 * max(1.0, abs(mid)):
                break
        return 0.5 * (lo + hi)

    def __call__(self, beta: float, mu: float) -> float:
        if self.B is None:
            return float(np.max(np.abs(self.target - thermal_covariance(self.h, beta, mu))))
        m = np.fft.ifft(self.occupation(beta, mu))
        return float(np.max(np.abs(self.B - m[:, None])))


def fit_thermal(
    target,
    model: HoppingModel | DisorderedModel,
    beta_range: tuple[float, float] = (1e-3, 1e3),
    n_beta: int = 61,
) -> ThermalFit:
    """Best thermal state of ``model`` in max-norm distance to ``target``.

    A log-spaced ``beta`` grid (with ``mu`` set by the target density) is
    followed by coordinate descent on ``(log beta, mu)`` with shrinking steps.
    """
    obj = _ThermalObjective(target, model)
    betas = np.geomspace(*beta_range, n_beta)
    grid = [(b, obj.mu_for_density(b)) for b in betas]
    vals = [obj(b, m) for b, m in grid]
    i = int(np.argmin(vals))
    # profile over beta with mu fixed by the density, then a joint polish
    lo_i, hi_i = max(i - 1, 0), min(i + 1, n_beta - 1)
    prof = minimize_scalar(
        lambda x: obj(math.exp(x), obj.mu_for_density(math.exp(x))),
        bounds=(math.log(betas[lo_i]), math.log(betas[hi_i])),
        method="bounded",
        options={"xatol": 1e-12},
    )
    lb, mu, best = math.log(betas[i]), grid[i][1], vals[i]
    if prof.fun < best:
        lb, best = float(prof.x), float(prof.fun)
        mu = obj.mu_for_density(math.exp(lb))
    step_b, step_m = math.log(betas[1] / betas[0]), max(0.1, 1.0 / betas[i])
    lo, hi = math.log(beta_range[0]), math.log(beta_range[1])
    while step_b > 1e-13 or step_m > 1e-13:
        improved = False
        for db, dm in ((step_b, 0), (-step_b, 0), (0, step_m), (0, -step_m)):
            nb = min(max(lb + db, lo), hi)
            v = obj(math.exp(nb), mu + dm)
            if v < best:
                best, lb, mu, improved = v, nb, mu + dm, True
                break
        if not improved:
            step_b *= 0.5
            step_m *= 0.5
    beta = math.exp(lb)
    boundary = bool(abs(lb - lo) < 1e-9 or abs(lb - hi) < 1e-9)
    if boundary:
        log.info("fit_thermal: beta hit the search boundary at %.3g", beta)
    search = {"beta_range": list(beta_range), "n_beta": n_beta, "objective": "max-norm"}
    return ThermalFit(beta, float(mu), float(best), boundary, search)
