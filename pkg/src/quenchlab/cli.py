"""Command line entry point ``quenchlab``.

Exit codes: 0 on success, 2 for bad configs or unreadable inputs, 3 when an
experiment post-condition or a convention lock fails.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import NoCertificate, StructuralDegeneracy, certificate, classify_resilience, exponential_sum, propagator_phase
from .covariance import clustering_fit, currents
from .experiments import (
    ConfigError,
    PostConditionError,
    build_models,
    build_state,
    load_config,
    resolve_config,
    run_experiment,
    time_grid,
)
from .gge import Infeasible, NotConverged, fit_gge, fit_thermal, gge_covariance, relevant_range
from .io import load_covariance, write_series_csv
from .model import HoppingModel

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_POST = 3


def _emit(pairs: dict, prefix: str = "") -> None:
    """Print ``key = value`` lines; nested dicts become dotted keys."""
    for k, v in pairs.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            _emit(v, key + ".")
        elif isinstance(v, (list, tuple, np.ndarray)):
            print(f"{key} = [{', '.join(_fmt(x) for x in v)}]")
        else:
            print(f"{key} = {_fmt(v)}")


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (complex, np.complexfloating)):
        return f"{v.real!r}{v.imag:+.17g}j"
    if isinstance(v, str):
        return f'"{v}"'
    return str(v)


# ---------------------------------------------------------------- subcommands


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    out = Path(args.out) if args.out else None
    try:
        res = run_experiment(cfg, out)
    except PostConditionError as e:
        print(f"post-condition failed: {e}", file=sys.stderr)
        return EXIT_POST
    print(f"experiment = {_fmt(cfg['experiment'])}")
    print(f"output = {_fmt(str(res['out_dir']))}")
    fit = res.get("fit")
    if fit is not None:
        _emit({"fit": fit.as_dict()})
    if "checks" in res:
        _emit({"checks": res["checks"]})
    return EXIT_OK


def _model_from(cfg) -> HoppingModel:
    clean, _ = build_models(cfg)
    return clean


def cmd_certify_bound(args) -> int:
    cfg = load_config(args.config)
    model = _model_from(cfg)
    try:
        cert = certificate(propagator_phase(model, 1.0, args.drift), model.L)
    except StructuralDegeneracy as e:
        print(f"no certificate: {e}", file=sys.stderr)
        return EXIT_POST
    d = cert.as_dict()
    d["window_empty"] = cert.window_empty
    _emit(d)
    if args.csv:
        rows = []
        for t in time_grid(cfg):
            if cert.in_window(t):
                emp = abs(exponential_sum(propagator_phase(model, t, args.drift), model.L))
                rows.append((t, cert.bound(t), emp))
        cols = list(zip(*rows)) if rows else [[], [], []]
        write_series_csv(args.csv, ["t", "bound", "empirical_sum"], *cols)
        print(f"csv_rows = {len(rows)}")
        if any(r[2] > r[1] for r in rows):
            print("bound violated", file=sys.stderr)
            return EXIT_POST
    return EXIT_OK


def cmd_classify_resilience(args) -> int:
    cfg = load_config(args.config)
    model = _model_from(cfg)
    _, dis = build_models(cfg)
    gamma = build_state(cfg, dis if dis is not None else model)
    th = cfg["thresholds"]
    rep = classify_resilience(gamma, model, th.get("C_th"), th["c_RS"], th["c_NRS"])
    d = rep.as_dict()
    if not args.full:
        d.pop("W_res")
        d.pop("W_ok")
    _emit(d)
    return EXIT_OK


def _parse_model(spec: str) -> HoppingModel | dict:
    """A run config path, or hoppings ``J0,J1,...`` (size taken from the covariance)."""
    p = Path(spec)
    if p.exists():
        return load_config(p)
    try:
        J = [float(x) for x in spec.split(",")]
    except ValueError:
        raise ConfigError(f"model {spec!r} is neither a config file nor a list J0,J1,...") from None
    return {"J": J}


def _load_cov(path) -> np.ndarray:
    try:
        return load_covariance(path)
    except (OSError, ValueError) as e:
        raise ConfigError(f"cannot read covariance {path}: {e}") from e


def cmd_fit_thermal(args) -> int:
    gamma = _load_cov(args.cov_file)
    spec = _parse_model(args.model)
    L = gamma.shape[0]
    if "model" in spec:
        if spec["model"]["L"] != L:
            raise ConfigError(f"model has L={spec['model']['L']} but covariance has L={L}")
        model = _model_from(spec)
    else:
        model = _model_from(resolve_config({"model": {"L": L, "J": spec["J"]}}))
    fit = fit_thermal(gamma, model, (args.beta_min, args.beta_max))
    _emit({"beta": fit.beta, "mu": fit.mu, "residual": fit.residual, "boundary_hit": fit.boundary_hit})
    return EXIT_OK


def cmd_fit_gge(args) -> int:
    gamma = _load_cov(args.cov_file)
    L = gamma.shape[0]
    table = currents(gamma)
    if args.z_xi is None:
        cf = clustering_fit(gamma)
        z_xi = relevant_range(max(cf.C, 1e-300), cf.xi, args.eps) if np.isfinite(cf.xi) else table.z_max
        z_xi = min(z_xi, args.z_max, (L - 1) // 2)
    else:
        z_xi = args.z_xi
    try:
        params = fit_gge(table, z_xi)
    except Infeasible as e:
        print(f"infeasible: {e}", file=sys.stderr)
        return EXIT_POST
    except NotConverged as e:
        print(f"not converged: {e}", file=sys.stderr)
        return EXIT_POST
    fitted = currents(gge_covariance(params, L)).I[: z_xi + 1]
    resid = np.abs(fitted - table.I[: z_xi + 1])
    _emit({"z_xi": z_xi, "lambda": params.lam, "eta": params.eta, "residuals": resid, "max_residual": float(resid.max())})
    return EXIT_OK


def cmd_oracle_check(args) -> int:
    from .locks import convention_locks

    ok = True
    for r in convention_locks(args.seed):
        ok &= r.passed
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}  (deviation {r.deviation:.3g}, tol {r.tol:g})")
    return EXIT_OK if ok else EXIT_POST


_PLOTS = {
    "distance.csv": ("log", "distance to steady state", ["using 1:2 with linespoints title 'distance'"]),
    "cdw.csv": (
        "log",
        "charge-density wave",
        ["using 1:2 with linespoints title 'to initial'", "using 1:3 with linespoints title 'to equilibrium'"],
    ),
    "currents.csv": (
        "lin",
        "currents before and after",
        ["using 1:2 with linespoints title 'Re I before'", "using 1:4 with linespoints title 'Re I after'"],
    ),
}


def plot_script(run_dir: Path) -> str:
    lines = ["set datafile separator ','", "set key autotitle columnhead"]
    found = False
    for name, (scale, title, series) in _PLOTS.items():
        f = run_dir / name
        if not f.exists():
            continue
        found = True
        stem = f.stem
        lines += [
            "set terminal pngcairo size 800,600",
            f"set output '{stem}.png'",
            f"set title '{title}'",
            "set logscale xy" if scale == "log" else "unset logscale",
            "plot " + ", ".join(f"'{name}' {s}" for s in series),
        ]
    if not found:
        raise ConfigError(f"{run_dir}: no plottable CSV files")
    return "\n".join(lines) + "\n"


def cmd_plot(args) -> int:
    run_dir = Path(args.run_dir)
    if not run_dir.is_dir():
        raise ConfigError(f"{run_dir} is not a directory")
    script = plot_script(run_dir)
    (run_dir / "plot.gp").write_text(script)
    sys.stdout.write(script)
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="quenchlab", description="Free-fermion quench laboratory")
    ap.add_argument("--version", action="version", version=f"quenchlab {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run an experiment from a TOML config or JSON manifest")
    p.add_argument("config")
    p.add_argument("--out", help="output directory (default: $QUENCHLAB_OUTPUT/<config output>)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("certify-bound", help="dephasing certificate of the model's propagator phase")
    p.add_argument("config")
    p.add_argument("--drift", type=float, default=0.0)
    p.add_argument("--csv", help="write (t, bound, empirical_sum) over the config time grid")
    p.set_defaults(func=cmd_certify_bound)

    p = sub.add_parser("classify-resilience", help="resilience report for the config's initial state")
    p.add_argument("config")
    p.add_argument("--full", action="store_true", help="print per-band weights")
    p.set_defaults(func=cmd_classify_resilience)

    p = sub.add_parser("fit-thermal", help="best thermal state for a covariance file")
    p.add_argument("cov_file")
    p.add_argument("model", help="run config path or hoppings J0,J1,...")
    p.add_argument("--beta-min", type=float, default=1e-3)
    p.add_argument("--beta-max", type=float, default=1e3)
    p.set_defaults(func=cmd_fit_thermal)

    p = sub.add_parser("fit-gge", help="maximum-entropy GGE for a covariance file")
    p.add_argument("cov_file")
    p.add_argument("--z-xi", type=int, help="number of currents (default from clustering)")
    p.add_argument("--eps", type=float, default=1e-3)
    p.add_argument("--z-max", type=int, default=20)
    p.set_defaults(func=cmd_fit_gge)

    p = sub.add_parser("oracle-check", help="compare conventions against the Fock-space oracle")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_oracle_check)

    p = sub.add_parser("plot", help="write a gnuplot script for a run directory")
    p.add_argument("run_dir")
    p.set_defaults(func=cmd_plot)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except NoCertificate as e:
        print(f"no certificate: {e}", file=sys.stderr)
        return EXIT_POST


if __name__ == "__main__":
    sys.exit(main())
