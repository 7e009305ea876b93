"""Seeded risk-curve simulations for the constrained least-squares estimator."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from . import seeding
from .core import EllipseError, EllipseSpec, as_point, elliptic_norm
from .kernels import KernelSpec, ellipse_from_kernel, load_points_csv, uniform_grid
from .optimize import SolverError, project_ellipse_batch

DEFAULT_SIGMA_SQ = tuple(10.0 ** (-4 + 0.25 * i) for i in range(13))
DEFAULT_REPLICATES = 200
FIGURE3_REPLICATES = 1000
FIGURE3_DIM = 500
BLUE_BAND = (-0.73, -0.60)
RED_BAND = (-0.86, -0.73)
CSV_COLUMNS = ("sigma", "sigma_sq", "mse_mean", "mse_stderr", "replicates")


class ConfigError(ValueError):
    """Malformed experiment configuration."""


class SimulationError(RuntimeError):
    pass


# -- configuration -----------------------------------------------------------

def ellipse_from_config(doc: Mapping[str, Any]) -> EllipseSpec:
    """Ellipse from an inline/family document or a ``{"kernel": ...}`` source."""
    if "kernel" in doc:
        kdoc = doc["kernel"]
        try:
            kernel = KernelSpec(kdoc["kind"], float(kdoc.get("bandwidth", 0.5)))
        except KeyError as exc:
            raise ConfigError(f"kernel source is missing {exc}") from None
        return ellipse_from_kernel(kernel, points_from_config(doc.get("points", {})),
                                   float(doc.get("radius", 1.0)))
    return EllipseSpec.from_dict(doc)


def points_from_config(doc: Mapping[str, Any]) -> np.ndarray:
    if "csv" in doc:
        return load_points_csv(doc["csv"])
    if "values" in doc:
        return np.asarray(doc["values"], dtype=float)
    grid = doc.get("grid", {})
    return uniform_grid(int(grid.get("n", 100)), float(grid.get("lo", -1.0)),
                        float(grid.get("hi", 1.0)))


def theta_star_from_spec(E: EllipseSpec, spec: Any) -> np.ndarray:
    """``"zero"``, ``{"spiked": {"s": 1, "magnitude": m}}`` (``s`` 1-based) or a vector.

    A spike without a magnitude sits on the boundary: ``R * sqrt(mu_s)``.
    """
    if spec is None or spec == "zero":
        return np.zeros(E.dim)
    if isinstance(spec, Mapping) and "spiked" in spec:
        sp = spec["spiked"]
        s = int(sp.get("s", 1))
        if not 1 <= s <= E.dim:
            raise ConfigError(f"spike index s={s} outside 1..{E.dim}")
        mag = float(sp.get("magnitude", E.radius * math.sqrt(E.mu[s - 1])))
        v = np.zeros(E.dim)
        v[s - 1] = mag
        return v
    if isinstance(spec, (list, tuple)):
        return as_point(E, spec)
    raise ConfigError(f"cannot interpret theta_star spec {spec!r}")


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    ellipse: EllipseSpec
    theta_star: np.ndarray
    sigma_grid: tuple[float, ...]
    replicates: int = DEFAULT_REPLICATES
    base_seed: int = 0
    output: str | None = None
    label: str = ""

    def __post_init__(self) -> None:
        if self.replicates < 1:
            raise ConfigError("replicates must be >= 1")
        grid = tuple(float(s) for s in self.sigma_grid)
        if not grid or min(grid) <= 0:
            raise ConfigError("sigma grid must be non-empty and strictly positive")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError("sigma grid must be strictly increasing")
        object.__setattr__(self, "sigma_grid", grid)
        theta = as_point(self.ellipse, self.theta_star)
        if elliptic_norm(self.ellipse, theta) > self.ellipse.radius * (1 + 1e-9):
            raise ConfigError("theta_star lies outside the ellipse")
        object.__setattr__(self, "theta_star", theta)

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "ExperimentConfig":
        try:
            E = ellipse_from_config(doc["ellipse"])
            if "sigma_grid" in doc:
                grid = [float(s) for s in doc["sigma_grid"]]
            elif "sigma_sq_grid" in doc:
                grid = [math.sqrt(float(s)) for s in doc["sigma_sq_grid"]]
            else:
                grid = [math.sqrt(s) for s in DEFAULT_SIGMA_SQ]
            return cls(E, theta_star_from_spec(E, doc.get("theta_star", "zero")), tuple(grid),
                       int(doc.get("replicates", DEFAULT_REPLICATES)),
                       int(doc.get("base_seed", 0)), doc.get("output"),
                       str(doc.get("label", "")))
        except KeyError as exc:
            raise ConfigError(f"config is missing key {exc}") from None
        except (EllipseError, TypeError) as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_json(cls, path: str | Path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


# -- risk curves ----------------------------------------------------------------

@dataclass(frozen=True)
class RiskRecord:
    sigma: float
    mse_mean: float
    mse_stderr: float
    replicates: int

    @property
    def sigma_sq(self) -> float:
        return self.sigma**2


@dataclass(frozen=True, eq=False)
class RiskCurve:
    records: tuple[RiskRecord, ...]
    slope: float | None
    slope_stderr: float | None
    label: str = ""
    errors: np.ndarray = field(repr=False, default=None)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.records:
            w.writerow([repr(r.sigma), repr(r.sigma_sq), repr(r.mse_mean),
                        repr(r.mse_stderr), r.replicates])
        return buf.getvalue()

    def to_plot_data(self) -> str:
        lines = [f"# {self.label}".rstrip(), "# log10_inv_sigma_sq  log10_mse"]
        for r in self.records:
            lines.append(f"{math.log10(1 / r.sigma_sq):.10g}  {math.log10(r.mse_mean):.10g}")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {"label": self.label, "slope": self.slope, "slope_stderr": self.slope_stderr,
                "records": [{"sigma": r.sigma, "sigma_sq": r.sigma_sq,
                             "mse_mean": r.mse_mean, "mse_stderr": r.mse_stderr,
                             "replicates": r.replicates} for r in self.records]}


def replicate_errors(E: EllipseSpec, theta_star: np.ndarray, sigma: float,
                     sigma_index: int, replicates: Sequence[int], base_seed: int
                     ) -> np.ndarray:
    """Squared LSE errors for the given replicate indices, in the order given."""
    noise = np.stack([seeding.normal_vector(E.dim, base_seed, sigma_index, r)
                      for r in replicates])
    try:
        theta, _ = project_ellipse_batch(E, theta_star + sigma * noise)
    except SolverError as exc:
        raise SimulationError(f"projection failed at sigma={sigma:g} "
                              f"(index {sigma_index}), replicates "
                              f"{replicates[0]}..{replicates[-1]}: {exc}") from exc
    return np.sum((theta - theta_star) ** 2, axis=1)


def run_risk_curve(config: ExperimentConfig) -> RiskCurve:
    n = config.replicates
    errs = np.empty((len(config.sigma_grid), n))
    for i, sigma in enumerate(config.sigma_grid):
        errs[i] = replicate_errors(config.ellipse, config.theta_star, sigma, i,
                                   list(range(n)), config.base_seed)
    records = tuple(
        RiskRecord(s, float(e.mean()),
                   float(e.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0, n)
        for s, e in zip(config.sigma_grid, errs))
    curve = RiskCurve(records, None, None, config.label, errs)
    if len(records) >= 4:
        slope, se = fit_loglog_slope(curve)
        curve = RiskCurve(records, slope, se, config.label, errs)
    return curve


def fit_loglog_slope(curve: RiskCurve | Sequence[RiskRecord]) -> tuple[float, float]:
    """OLS slope of ``log10(MSE)`` on ``log10(1/sigma^2)`` and its standard error."""
    records = curve.records if isinstance(curve, RiskCurve) else tuple(curve)
    if len(records) < 4:
        raise ValueError("slope fit needs at least 4 grid points")
    mse = np.array([r.mse_mean for r in records])
    if np.any(mse <= 0):
        raise ValueError("slope fit needs strictly positive MSE values")
    x = np.log10(1.0 / np.array([r.sigma_sq for r in records]))
    y = np.log10(mse)
    xc = x - x.mean()
    sxx = float(xc @ xc)
    slope = float(xc @ (y - y.mean()) / sxx)
    resid = y - y.mean() - slope * xc
    se = math.sqrt(float(resid @ resid) / (x.size - 2) / sxx)
    return slope, se


# -- Figure 3 ----------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Figure3Report:
    centered: RiskCurve
    spiked: RiskCurve
    base_seed: int
    replicates: int
    sigma_sq_grid: tuple[float, ...]

    @property
    def blue_ok(self) -> bool:
        return BLUE_BAND[0] <= self.centered.slope <= BLUE_BAND[1]

    @property
    def red_ok(self) -> bool:
        return RED_BAND[0] <= self.spiked.slope <= RED_BAND[1]

    @property
    def ordered(self) -> bool:
        return self.spiked.slope < self.centered.slope

    @property
    def passed(self) -> bool:
        return self.blue_ok and self.red_ok and self.ordered

    def to_dict(self) -> dict:
        return {
            "setup": {"dimension": FIGURE3_DIM, "decay": "mu_j = j^-2",
                      "base_seed": self.base_seed, "replicates": self.replicates,
                      "sigma_sq_grid": list(self.sigma_sq_grid),
                      "note": "theta* = e1 lies on the boundary and is simulated as-is"},
            "centered": self.centered.to_dict(), "spiked": self.spiked.to_dict(),
            "verdict": {"centered_slope_band": list(BLUE_BAND), "centered_ok": self.blue_ok,
                        "spiked_slope_band": list(RED_BAND), "spiked_ok": self.red_ok,
                        "spiked_steeper": self.ordered, "passed": self.passed},
        }

    def write(self, out_dir: str | Path) -> list[Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        files = {
            "figure3_centered.csv": self.centered.to_csv(),
            "figure3_spiked.csv": self.spiked.to_csv(),
            # two gnuplot data blocks: index 0 centered, index 1 spiked
            "figure3_plot.dat": self.centered.to_plot_data() + "\n\n"
                                + self.spiked.to_plot_data(),
            "figure3_report.json": json.dumps(self.to_dict(), indent=2) + "\n",
        }
        paths = []
        for name, text in files.items():
            p = out / name
            p.write_text(text)
            paths.append(p)
        return paths


def reproduce_figure3(base_seed: int = 0, replicates: int = FIGURE3_REPLICATES,
                      sigma_sq_grid: Sequence[float] = DEFAULT_SIGMA_SQ) -> Figure3Report:
    """Risk curves for ``mu_j = j^-2`` in 500 dimensions at ``theta* = 0`` and ``e_1``."""
    E = EllipseSpec.polynomial(FIGURE3_DIM, 1.0)
    sig = tuple(math.sqrt(s) for s in sigma_sq_grid)
    e1 = np.zeros(FIGURE3_DIM)
    e1[0] = 1.0
    curves = [run_risk_curve(ExperimentConfig(E, th, sig, replicates, base_seed, None, lab))
              for th, lab in ((np.zeros(FIGURE3_DIM), "theta*=0"), (e1, "theta*=e1"))]
    return Figure3Report(curves[0], curves[1], base_seed, replicates, tuple(sigma_sq_grid))
