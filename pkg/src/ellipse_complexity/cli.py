"""Command-line entry point: ``ellipse-complexity <subcommand> [--config FILE] ...``.

Every subcommand reads an optional JSON config; missing keys fall back to the
defaults documented in the README. Exit codes: 0 success, 2 config error,
3 numerical failure, 4 acceptance failure (``figure3 --check``).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import warnings
from pathlib import Path
from typing import Any, Callable

import numpy as np

from .core import DEFAULT_ETA, EllipseError, EllipseSpec, LocalizedSection
from .experiments import (
    DEFAULT_SIGMA_SQ,
    FIGURE3_REPLICATES,
    ConfigError,
    ExperimentConfig,
    SimulationError,
    ellipse_from_config,
    points_from_config,
    reproduce_figure3,
    run_risk_curve,
    theta_star_from_spec,
)
from .kernels import (
    ConvergenceError,
    KernelError,
    KernelSpec,
    classify_decay,
    clip_spectrum,
    gram_matrix,
    sym_eigenvalues,
)
from .optimize import SolverError, project_ellipse
from .packing import SamplingError, entropy_sandwich_report
from .rates import FixedPointError, minimax_bounds, solve_fixed_point
from .widths import (
    BoundsUnavailable,
    critical_dimension_bounds,
    gaussian_width_mc,
    lower_bound_valid_range,
    phi,
    phi_inverse,
    regularity_check,
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_ACCEPTANCE = 0, 2, 3, 4

DEFAULT_ELLIPSE = {"family": "polynomial", "alpha": 1.0, "d": 500}


class _Failure(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _ellipse(cfg: dict) -> EllipseSpec:
    return ellipse_from_config(cfg.get("ellipse", DEFAULT_ELLIPSE))


def _theta(E: EllipseSpec, cfg: dict) -> np.ndarray:
    return theta_star_from_spec(E, cfg.get("theta_star", "zero"))


def _values(cfg: dict, single: str, plural: str, default) -> list[float]:
    if plural in cfg:
        return [float(x) for x in cfg[plural]]
    if single in cfg:
        return [float(cfg[single])]
    return list(default)


def _rows_to_csv(rows: list[dict]) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


# -- subcommands -------------------------------------------------------------

def cmd_project(cfg: dict, seed: int) -> Any:
    E = _ellipse(cfg)
    if "y" not in cfg:
        raise ConfigError("project needs 'y'")
    theta, lam = project_ellipse(E, cfg["y"])
    return {"theta_hat": theta.tolist(), "lambda": lam}


def cmd_width(cfg: dict, seed: int) -> Any:
    E = _ellipse(cfg)
    theta = _theta(E, cfg)
    eta = float(cfg.get("eta", DEFAULT_ETA))
    rows = []
    for delta in _values(cfg, "delta", "deltas", [0.1]):
        est = gaussian_width_mc(LocalizedSection(E, theta, delta, eta),
                                int(cfg.get("n_samples", 2000)), seed,
                                float(cfg.get("c_lower", 0.3)))
        rows.append({"delta": delta, "mc_mean": est.mc_mean, "mc_stderr": est.mc_stderr,
                     "lower_envelope": est.lower_envelope,
                     "upper_envelope": est.upper_envelope,
                     "k": None if est.k_used is None else est.k_used.k})
    return rows


def cmd_kdim(cfg: dict, seed: int) -> Any:
    E = _ellipse(cfg)
    theta = _theta(E, cfg)
    eta = float(cfg.get("eta", DEFAULT_ETA))
    rows = []
    for delta in _values(cfg, "delta", "deltas", [0.1]):
        kd = critical_dimension_bounds(E, theta, delta, eta)
        rows.append({"delta": delta, **kd.to_dict()})
    return rows


def cmd_phi(cfg: dict, seed: int) -> Any:
    E = _ellipse(cfg)
    theta = _theta(E, cfg)
    eta = float(cfg.get("eta", DEFAULT_ETA))
    rows = [{"delta": d, "phi": phi(E, theta, d, eta)}
            for d in _values(cfg, "delta", "deltas", np.geomspace(1e-3, 1, 7))]
    inv = [{"x": x, "phi_inverse": phi_inverse(E, theta, x, eta)}
           for x in _values(cfg, "x", "xs", [])]
    return {"phi": rows, "phi_inverse": inv,
            "valid_range": lower_bound_valid_range(E, theta, float(cfg.get("c", 1.0)), eta)}


def cmd_fixed_point(cfg: dict, seed: int) -> Any:
    E = _ellipse(cfg)
    theta = _theta(E, cfg)
    rows = []
    for sigma in _values(cfg, "sigma", "sigmas", [0.01]):
        fp = solve_fixed_point(E, theta, sigma, float(cfg.get("c_lower", 0.3)),
                               float(cfg.get("eta", DEFAULT_ETA)))
        rows.append({"sigma": sigma, "delta_n": fp.delta_n, "k": fp.k_at_delta,
                     "at_jump": fp.at_jump, "iterations": fp.iterations})
    return rows


def cmd_minimax(cfg: dict, seed: int) -> Any:
    E = _ellipse(cfg)
    rows = []
    for sigma in _values(cfg, "sigma", "sigmas", [0.01]):
        mb = minimax_bounds(E, sigma, float(cfg.get("c_lower", 0.3)),
                            float(cfg.get("eta", DEFAULT_ETA)))
        rows.append({"sigma": sigma, **mb.to_dict()})
    return rows


def cmd_risk_curve(cfg: dict, seed: int) -> Any:
    if "ellipse" not in cfg:
        cfg = {**cfg, "ellipse": DEFAULT_ELLIPSE}
    cfg = {**cfg, "base_seed": seed}
    curve = run_risk_curve(ExperimentConfig.from_dict(cfg))
    return curve


def cmd_figure3(cfg: dict, seed: int) -> Any:
    grid = tuple(float(s) for s in cfg.get("sigma_sq_grid", DEFAULT_SIGMA_SQ))
    return reproduce_figure3(seed, int(cfg.get("replicates", FIGURE3_REPLICATES)), grid)


def cmd_kernel_spectrum(cfg: dict, seed: int) -> Any:
    kdoc = cfg.get("kernel", {"kind": "gaussian", "bandwidth": 0.5})
    try:
        kernel = KernelSpec(kdoc["kind"], float(kdoc.get("bandwidth", 0.5)))
    except KeyError as exc:
        raise ConfigError(f"kernel is missing {exc}") from None
    pts = points_from_config(cfg.get("points", {}))
    K = gram_matrix(kernel, pts)
    eigs = clip_spectrum(sym_eigenvalues(K))
    rep = classify_decay(eigs)
    out = rep.to_dict()
    out["trace_error"] = abs(float(eigs.sum()) - float(np.trace(K))) / float(np.trace(K))
    return out


def cmd_packing(cfg: dict, seed: int) -> Any:
    E = _ellipse(cfg if "ellipse" in cfg else {"ellipse": {"family": "ball", "d": 3}})
    theta = _theta(E, cfg)
    sec = LocalizedSection(E, theta, float(cfg.get("delta", 0.3)),
                           float(cfg.get("eta", DEFAULT_ETA)))
    eps = cfg.get("epsilon")
    return entropy_sandwich_report(sec, None if eps is None else float(eps),
                                   int(cfg.get("n", 20000)), seed).to_dict()


def cmd_regularity(cfg: dict, seed: int) -> Any:
    E = _ellipse(cfg)
    theta = _theta(E, cfg)
    grid = _values(cfg, "delta", "deltas", np.geomspace(1e-3, 0.5, 10))
    return regularity_check(E, theta, grid, float(cfg.get("c", 4.0)),
                            float(cfg.get("eta", DEFAULT_ETA))).to_dict()


COMMANDS: dict[str, tuple[Callable[[dict, int], Any], str]] = {
    "project": (cmd_project, "project a point onto an ellipse"),
    "width": (cmd_width, "Monte Carlo localized Gaussian width with analytic envelopes"),
    "kdim": (cmd_kdim, "critical dimension (exact or bounds)"),
    "phi": (cmd_phi, "boundary map, its inverse and the lower-bound range"),
    "fixed-point": (cmd_fixed_point, "critical radius delta_n"),
    "minimax": (cmd_minimax, "minimax lower/upper values"),
    "risk-curve": (cmd_risk_curve, "simulate the LSE risk over a sigma grid"),
    "figure3": (cmd_figure3, "reproduce the two-curve log-log risk experiment"),
    "kernel-spectrum": (cmd_kernel_spectrum, "kernel Gram spectrum and decay class"),
    "packing": (cmd_packing, "greedy packing versus critical dimension"),
    "regularity": (cmd_regularity, "regularity ratios on a delta grid"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ellipse-complexity", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", type=Path, help="JSON configuration file")
        p.add_argument("--seed", type=int, default=0, help="base seed (default 0)")
        p.add_argument("--out", type=Path, help="output file (directory for figure3)")
        p.add_argument("--format", choices=("csv", "json"), default="json")
        if name == "figure3":
            p.add_argument("--check", action="store_true",
                           help="exit 4 if the fitted slopes miss their bands")
    return parser


def _render(result: Any, fmt: str) -> str:
    if hasattr(result, "to_csv") and fmt == "csv":
        return result.to_csv()
    if hasattr(result, "to_dict"):
        result = result.to_dict()
    if fmt == "csv":
        if isinstance(result, dict):
            rows = result.get("rows") or result.get("phi") or [
                {k: v for k, v in result.items() if not isinstance(v, (list, dict))}]
        else:
            rows = result
        return _rows_to_csv(rows)
    return json.dumps(result, indent=2, default=float) + "\n"


def _load_config(path: Path | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    return cfg


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    func = COMMANDS[args.command][0]
    try:
        cfg = _load_config(args.config)
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            result = func(cfg, args.seed)
    except (ConfigError, EllipseError, KernelError, BoundsUnavailable, KeyError,
            TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, FixedPointError, SimulationError, SamplingError,
            ConvergenceError, ValueError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    if args.command == "figure3":
        if args.out is not None:
            for p in result.write(args.out):
                print(p, file=sys.stderr)
        text = _render(result, "json")
    else:
        text = _render(result, args.format)
        if args.out is not None:
            args.out.parent.mkdir(parents=True, exist_ok=True)
            args.out.write_text(text)
    if args.out is None or args.command == "figure3":
        sys.stdout.write(text)
    if args.command == "figure3" and args.check and not result.passed:
        print("acceptance failure: fitted slopes outside their bands", file=sys.stderr)
        return EXIT_ACCEPTANCE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
