"""Experiment pipelines behind the command line: quench runs, fits and manifests.

A run is described by a TOML file::

    experiment = "anderson_quench"   # or cdw, superlattice, custom
    seed = 7

    [model]
    L = 1000
    R = 1
    J = [0.0, 1.0]

    [model.disorder]                 # optional
    w = 5.0
    seed = 7

    [state]
    kind = "thermal"                 # thermal | occupations | file
    beta = 1.0
    mu = 0.0

    [time]
    t_min = 1.0
    t_max = 125.0
    count = 80
    spacing = "log"

Every default is written back into the run manifest, so a manifest can be fed
to ``simulate`` again to reproduce the run.
"""

from __future__ import annotations

import copy
import json
import math
import os
import platform
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import scipy

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from .bounds import certificate, classify_resilience, propagator_phase
from .covariance import (
    Evolution,
    band,
    band_means,
    circulant_from_means,
    currents,
    dephase,
    equilibrium_covariance,
    from_occupations,
    max_norm_distance,
    periodic_occupations,
    thermal_covariance,
)
from .gge import fit_thermal
from .io import load_covariance, save_covariance, write_series_csv
from .model import RNG_NAME, DisorderedModel, HoppingModel, coupling_matrix, sample_anderson

__all__ = [
    "ConfigError",
    "PostConditionError",
    "PowerLawFit",
    "power_law_fit",
    "load_config",
    "resolve_config",
    "time_grid",
    "run_anderson_quench",
    "run_cdw",
    "run_superlattice",
    "run_custom",
    "run_experiment",
    "output_root",
    "OUTPUT_ENV",
]

OUTPUT_ENV = "QUENCHLAB_OUTPUT"
EXPERIMENTS = ("anderson_quench", "cdw", "superlattice", "custom")


class ConfigError(ValueError):
    pass


class PostConditionError(AssertionError):
    def __init__(self, msg: str, result: dict | None = None):
        super().__init__(msg)
        self.result = result


# ---------------------------------------------------------------- fits


@dataclass(frozen=True)
class PowerLawFit:
    exponent: float
    prefactor: float
    window: tuple[float, float]
    r_squared: float
    n_points: int
    decaying: bool

    def as_dict(self) -> dict:
        return asdict(self)


def power_law_fit(t, y, window=None, min_points: int = 5) -> PowerLawFit:
    """Least squares of ``ln y`` on ``ln t`` over points strictly inside ``window``."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    lo, hi = (t.min() - 1, t.max() + 1) if window is None else window
    sel = (t > lo) & (t < hi)
    if sel.sum() < min_points:
        raise ValueError(f"power_law_fit needs >= {min_points} points inside ({lo}, {hi}), got {sel.sum()}")
    if np.any(y[sel] <= 0):
        raise ValueError("power_law_fit: non-positive values inside the window")
    lt, ly = np.log(t[sel]), np.log(y[sel])
    slope, icpt = np.polyfit(lt, ly, 1)
    resid = ly - (slope * lt + icpt)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 if ss_tot <= 1e-300 else 1.0 - float(np.sum(resid**2)) / ss_tot
    r2 = min(1.0, max(0.0, r2))
    return PowerLawFit(float(slope), float(math.exp(icpt)), (float(lo), float(hi)), r2, int(sel.sum()), bool(slope < -1e-2))


# ---------------------------------------------------------------- config

_DEFAULTS = {
    "experiment": "custom",
    "seed": 0,
    "output": None,
    "model": {"L": 100, "J": [0.0, 1.0]},
    "state": {"kind": "thermal", "beta": 1.0, "mu": 0.0},
    "time": {"t_min": 1.0, "t_max": None, "count": 40, "spacing": "log"},
    "thresholds": {"C_th": None, "c_RS": 1.0, "c_NRS": 10.0, "dephase_tol": None, "c_local": 5.0},
    "fit": {"window": None, "thermal": True},
}

_EXPERIMENT_DEFAULTS = {
    "anderson_quench": {
        "model": {"L": 1000, "J": [0.0, 1.0], "disorder": {"w": 5.0, "seed": None}},
        "state": {"kind": "thermal", "beta": 1.0, "mu": 0.0},
        "time": {"count": 80},
    },
    "cdw": {
        "model": {"L": 100, "J": [0.0, 1.0]},
        "state": {"kind": "occupations", "pattern": [1, 0]},
        "time": {"snapshots": [0.5, 1.5, 5.0, 50.0]},
    },
    "superlattice": {
        "model": {"L": 200, "J": [0.0, 1.0]},
        "state": {"kind": "thermal", "beta": 1.0, "mu": 0.0},
    },
}


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def load_config(path) -> dict:
    """Read a TOML run config or a JSON manifest and resolve all defaults."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    try:
        if path.suffix == ".json":
            raw = json.loads(text)
            raw = raw.get("config", raw)
        else:
            raw = tomllib.loads(text)
    except (ValueError, tomllib.TOMLDecodeError) as e:
        raise ConfigError(f"{path}: {e}") from e
    cfg = resolve_config(raw)
    cfg["_base_dir"] = str(path.parent.resolve())
    return cfg


def resolve_config(raw: dict) -> dict:
    """Validate ``raw`` and materialise every default."""
    exp = raw.get("experiment", "custom")
    if exp not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {exp!r}; choose from {', '.join(EXPERIMENTS)}")
    cfg = _merge(_merge(_DEFAULTS, _EXPERIMENT_DEFAULTS.get(exp, {})), raw)
    cfg["experiment"] = exp
    m = cfg["model"]
    try:
        L = int(m["L"])
        J = [float(j) for j in m["J"]]
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"model block needs integer L and real array J: {e}") from e
    if "R" in m and int(m["R"]) != len(J) - 1:
        raise ConfigError(f"model.R = {m['R']} but J has {len(J)} entries")
    m["R"] = len(J) - 1
    try:
        HoppingModel(L, J)
    except ValueError as e:
        raise ConfigError(str(e)) from e
    m["L"], m["J"] = L, J
    dis = m.get("disorder")
    if dis is not None:
        if dis.get("seed") is None:
            dis["seed"] = int(cfg["seed"])
        if "xi" in dis and len(dis["xi"]) != L:
            raise ConfigError("model.disorder.xi must have L entries")
        if float(dis.get("w", 0.0)) < 0:
            raise ConfigError("model.disorder.w must be >= 0")
    st = cfg["state"]
    if st.get("kind") not in ("thermal", "occupations", "file"):
        raise ConfigError(f"state.kind must be thermal, occupations or file, got {st.get('kind')!r}")
    if st["kind"] == "thermal" and not float(st.get("beta", 0)) > 0:
        raise ConfigError("state.beta must be positive")
    if st["kind"] == "file" and "path" not in st:
        raise ConfigError("state.kind = 'file' needs state.path")
    tg = cfg["time"]
    if tg.get("t_max") is None:
        tg["t_max"] = _default_t_max(HoppingModel(L, J))
    if tg.get("spacing") not in ("log", "linear"):
        raise ConfigError("time.spacing must be 'log' or 'linear'")
    if not (0 < float(tg["t_min"]) < float(tg["t_max"])) or int(tg["count"]) < 2:
        raise ConfigError("time grid must be positive and increasing with count >= 2")
    if cfg["fit"].get("window") is None:
        cfg["fit"]["window"] = [5.0, float(tg["t_max"]) / 3.0]
    if cfg["thresholds"].get("dephase_tol") is None:
        om = HoppingModel(L, J)
        from .model import eigenvalues

        w = eigenvalues(om)
        cfg["thresholds"]["dephase_tol"] = 1e-9 * float(np.ptp(w))
    if cfg.get("output") is None:
        cfg["output"] = f"{exp}-seed{cfg['seed']}"
    return cfg


def _default_t_max(model: HoppingModel) -> float:
    """Recurrence time of the zero-drift propagator certificate."""
    if model.J_max == 0:
        return 10.0
    try:
        return certificate(propagator_phase(model, 1.0), model.L).tR
    except ValueError:
        return model.L / (8.0 * model.J_max)


def time_grid(cfg: dict) -> np.ndarray:
    tg = cfg["time"]
    lo, hi, n = float(tg["t_min"]), float(tg["t_max"]), int(tg["count"])
    if tg["spacing"] == "log":
        return np.geomspace(lo, hi, n)
    return np.linspace(lo, hi, n)


def output_root() -> Path:
    return Path(os.environ.get(OUTPUT_ENV, "runs"))


def _out_dir(cfg: dict, out: Path | None) -> Path:
    p = Path(out) if out is not None else output_root() / cfg["output"]
    p.mkdir(parents=True, exist_ok=True)
    return p


# ---------------------------------------------------------------- building blocks


def build_models(cfg: dict) -> tuple[HoppingModel, DisorderedModel | None]:
    m = cfg["model"]
    clean = HoppingModel(m["L"], m["J"])
    dis = m.get("disorder")
    if dis is None:
        return clean, None
    if "xi" in dis:
        xi = np.asarray(dis["xi"], dtype=float)
        return clean, DisorderedModel(clean, xi, float(np.max(np.abs(xi))) if xi.size else 0.0, None)
    return clean, sample_anderson(m["L"], float(dis["w"]), m["J"], int(dis["seed"]))


def build_state(cfg: dict, prep_model) -> np.ndarray:
    st = cfg["state"]
    L = cfg["model"]["L"]
    if st["kind"] == "thermal":
        return thermal_covariance(coupling_matrix(prep_model), float(st["beta"]), float(st["mu"]))
    if st["kind"] == "occupations":
        if "occupations" in st:
            occ = np.asarray(st["occupations"], dtype=int)
            if occ.size != L:
                raise ConfigError("state.occupations must have L entries")
        else:
            occ = periodic_occupations(L, st.get("pattern", [1, 0]))
        return from_occupations(occ)
    path = Path(st["path"])
    if not path.is_absolute():
        path = Path(cfg.get("_base_dir", ".")) / path
    g = load_covariance(path)
    if g.shape[0] != L:
        raise ConfigError(f"covariance file has L={g.shape[0]}, model has L={L}")
    return g


def _manifest(cfg: dict, result_keys, started: float, extra: dict | None = None) -> dict:
    clean_cfg = {k: v for k, v in cfg.items() if not k.startswith("_")}
    return {
        "config": clean_cfg,
        "rng": RNG_NAME,
        "versions": {
            "quenchlab": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        "started": time.strftime("%Y-%m-%dT%H:%M:%S", time.localtime(started)),
        "wall_clock_s": time.time() - started,
        "outputs": sorted(result_keys),
        **(extra or {}),
    }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, set):
        return sorted(obj)
    return obj


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def _current_rows(I) -> list:
    return [[float(np.real(v)), float(np.imag(v))] for v in I]


# ---------------------------------------------------------------- pipelines


def run_anderson_quench(cfg: dict, out: Path | None = None, write: bool = True) -> dict:
    """Thermal Anderson state quenched to the clean model."""
    started = time.time()
    clean, dis = build_models(cfg)
    prep = dis if dis is not None else clean
    g0 = build_state(cfg, prep)
    tol = float(cfg["thresholds"]["dephase_tol"])
    g_inf = dephase(g0, clean, tol)
    ev = Evolution(g0, clean)
    ts = time_grid(cfg)
    dist = np.array([max_norm_distance(ev.at(t), g_inf) for t in ts])
    result = {"t": ts, "distance": dist, "gamma_inf": g_inf}
    lo, hi = cfg["fit"]["window"]
    try:
        result["fit"] = power_law_fit(ts, dist, (lo, hi))
    except ValueError as e:
        result["fit"] = None
        result["fit_error"] = str(e)
    if cfg["fit"].get("thermal", True):
        result["thermal_fit"] = fit_thermal(g_inf, clean)
        # the circulant part alone isolates the thermal content from O(1/L) structure
        result["thermal_fit_circulant"] = fit_thermal(circulant_from_means(band_means(g_inf)), clean)
        result["noncirculant_part"] = max_norm_distance(g_inf, equilibrium_covariance(g_inf))
    if write:
        d = _out_dir(cfg, out)
        write_series_csv(d / "distance.csv", ["t", "distance"], ts, dist)
        summary = {
            "fit": result["fit"].as_dict() if result["fit"] else None,
            "thermal_fit": _thermal_dict(result.get("thermal_fit")),
            "thermal_fit_circulant": _thermal_dict(result.get("thermal_fit_circulant")),
            "noncirculant_part": result.get("noncirculant_part"),
        }
        _write_json(d / "summary.json", summary)
        extra = {"disorder_xi": dis.xi.tolist()} if dis is not None else {}
        _write_json(d / "manifest.json", _manifest(cfg, ["distance.csv", "summary.json"], started, extra))
        result["out_dir"] = d
    return result


def _thermal_dict(fit):
    if fit is None:
        return None
    return {"beta": fit.beta, "mu": fit.mu, "residual": fit.residual, "boundary_hit": fit.boundary_hit, "search": fit.search}


def _is_nnn_only(model: HoppingModel) -> bool:
    return model.R >= 2 and all(J == 0 for z, J in enumerate(model.J[1:], start=1) if z % 2 == 1)


def run_cdw(cfg: dict, out: Path | None = None, write: bool = True) -> dict:
    """Charge-density wave ``diag(1, 0, 1, 0, ...)`` under the configured model."""
    started = time.time()
    clean, _ = build_models(cfg)
    L = clean.L
    g0 = build_state(cfg, clean)
    g_eq = equilibrium_covariance(g0)
    ev = Evolution(g0, clean)
    snaps = [float(t) for t in cfg["time"].get("snapshots", list(time_grid(cfg)))]
    rows = []
    snapshots = {}
    for t in snaps:
        g = ev.at(t)
        snapshots[t] = g
        diag = np.real(np.diag(g))
        rows.append((t, max_norm_distance(g, g0), max_norm_distance(g, g_eq), float(diag.min()), float(diag.max())))
    report = classify_resilience(
        g0, clean, cfg["thresholds"].get("C_th"), cfg["thresholds"]["c_RS"], cfg["thresholds"]["c_NRS"]
    )
    checks = {}
    if _is_nnn_only(clean) and L % 2 == 0:
        checks["exact_steady_state"] = max(r[1] for r in rows) <= 1e-10
    if clean.R == 1 and clean.J[1] != 0 and len(rows) >= 2:
        d_eq = [r[2] for r in rows]
        checks["relaxes_towards_equilibrium"] = d_eq[-1] < d_eq[0]
        checks["equilibrium_is_uniform"] = max_norm_distance(g_eq, np.eye(L) * g_eq[0, 0]) <= 1e-12
    result = {"rows": rows, "snapshots": snapshots, "report": report, "checks": checks, "gamma_eq": g_eq}
    if write:
        d = _out_dir(cfg, out)
        cols = list(zip(*rows))
        write_series_csv(d / "cdw.csv", ["t", "dist_initial", "dist_equilibrium", "diag_min", "diag_max"], *cols)
        snap_dir = d / "snapshots"
        snap_dir.mkdir(exist_ok=True)
        for i, (t, g) in enumerate(snapshots.items()):
            save_covariance(snap_dir / f"cov_{i:03d}_t{t:g}.csv", g)
        _write_json(d / "resilience.json", report.as_dict())
        _write_json(d / "checks.json", checks)
        _write_json(d / "manifest.json", _manifest(cfg, ["cdw.csv", "resilience.json", "checks.json", "snapshots/"], started))
        result["out_dir"] = d
    if not all(checks.values()):
        raise PostConditionError(f"cdw post-conditions failed: {checks}", result)
    return result


def superlattice_embed(g: np.ndarray) -> np.ndarray:
    """Place an ``L``-site covariance on the odd sites of a ``2L``-site ring."""
    L = g.shape[0]
    out = np.zeros((2 * L, 2 * L), dtype=complex)
    out[0::2, 0::2] = g
    return out


def run_superlattice(cfg: dict, out: Path | None = None, write: bool = True) -> dict:
    """Thermal state on ``L`` sites embedded into ``2L`` sites and quenched."""
    started = time.time()
    small, _ = build_models(cfg)
    L = small.L
    big = small.with_size(2 * L)
    g_small = build_state(cfg, small)
    g0 = superlattice_embed(g_small)
    g_inf = dephase(g0, big, float(cfg["thresholds"]["dephase_tol"]))
    before = currents(g_small)
    after = currents(g_inf)
    c = float(cfg["thresholds"]["c_local"])
    I1_half = before.I[1] / 2
    local = {
        "max_abs_band1": float(np.max(np.abs(band(g_inf, 1)))),
        "max_dev_band2": float(np.max(np.abs(band(g_inf, 2) - np.conj(I1_half)))),
        "even_density": float(np.mean(np.real(np.diag(g_inf))[1::2])),
        "odd_density": float(np.mean(np.real(np.diag(g_inf))[0::2])),
    }
    Lbig = 2 * L
    checks = {
        "I1_vanishes": abs(after.I[1]) <= c / Lbig,
        "I2_is_half_I1": abs(after.I[2] - I1_half) <= c / Lbig,
        "local_band1": local["max_abs_band1"] <= c / Lbig,
        "local_band2": local["max_dev_band2"] <= c / Lbig,
    }
    fit_after = fit_thermal(g_inf, big)
    fit_before = fit_thermal(g_small, small)
    result = {
        "before": before,
        "after": after,
        "local": local,
        "checks": checks,
        "thermal_fit": fit_after,
        "thermal_fit_before": fit_before,
        "gamma_inf": g_inf,
    }
    if write:
        d = _out_dir(cfg, out)
        n = min(len(before.I), len(after.I))
        z = np.arange(n)
        write_series_csv(
            d / "currents.csv",
            ["z", "I_before_re", "I_before_im", "I_after_re", "I_after_im"],
            z, before.I[:n].real, before.I[:n].imag, after.I[:n].real, after.I[:n].imag,
        )
        _write_json(d / "summary.json", {
            "local": local, "checks": checks,
            "thermal_fit": _thermal_dict(fit_after), "thermal_fit_before": _thermal_dict(fit_before),
        })
        _write_json(d / "manifest.json", _manifest(cfg, ["currents.csv", "summary.json"], started))
        result["out_dir"] = d
    if not all(checks.values()):
        raise PostConditionError(f"superlattice post-conditions failed: {checks}", result)
    return result


def run_custom(cfg: dict, out: Path | None = None, write: bool = True) -> dict:
    """Any initial state under the clean model: distances to the steady states."""
    started = time.time()
    clean, dis = build_models(cfg)
    g0 = build_state(cfg, dis if dis is not None else clean)
    g_inf = dephase(g0, clean, float(cfg["thresholds"]["dephase_tol"]))
    g_eq = equilibrium_covariance(g0)
    ev = Evolution(g0, clean)
    ts = time_grid(cfg)
    d_inf, d_eq = [], []
    for t in ts:
        g = ev.at(t)
        d_inf.append(max_norm_distance(g, g_inf))
        d_eq.append(max_norm_distance(g, g_eq))
    result = {"t": ts, "distance_inf": np.array(d_inf), "distance_eq": np.array(d_eq)}
    if write:
        d = _out_dir(cfg, out)
        write_series_csv(d / "distance.csv", ["t", "distance_inf", "distance_eq"], ts, d_inf, d_eq)
        _write_json(d / "manifest.json", _manifest(cfg, ["distance.csv"], started))
        result["out_dir"] = d
    return result


RUNNERS = {
    "anderson_quench": run_anderson_quench,
    "cdw": run_cdw,
    "superlattice": run_superlattice,
    "custom": run_custom,
}


def run_experiment(cfg: dict, out: Path | None = None, write: bool = True) -> dict:
    return RUNNERS[cfg["experiment"]](cfg, out, write)
