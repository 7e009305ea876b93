"""Critical radius, critical functional, rate predictions and minimax bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import DEFAULT_ETA, EllipseSpec, LocalizedSection, as_point
from .widths import (
    DEFAULT_C_LOWER,
    critical_dimension_bounds,
    critical_dimension_centered,
    gaussian_width_mc,
    lower_bound_valid_range,
    regularity_check,
)

FIXED_POINT_RTOL = 1e-12
FIXED_POINT_MAX_ITER = 200


class FixedPointError(RuntimeError):
    """The fixed-point equation has no root in the admissible range."""


@dataclass(frozen=True)
class FixedPointResult:
    delta_n: float
    k_at_delta: int
    c_lower: float
    iterations: int
    bracket: tuple[float, float]
    at_jump: bool
    sigma: float = math.nan

    @property
    def residual(self) -> float:
        return self.delta_n - self.c_lower * self.sigma * math.sqrt(self.k_at_delta)

    def to_dict(self) -> dict:
        return {"delta_n": self.delta_n, "k": self.k_at_delta, "c_lower": self.c_lower,
                "iterations": self.iterations, "bracket": list(self.bracket),
                "at_jump": self.at_jump}


def _k_hat(E: EllipseSpec, theta_star: np.ndarray, delta: float, eta: float) -> int:
    return critical_dimension_bounds(E, theta_star, delta, eta).k


def solve_fixed_point(E: EllipseSpec, theta_star, sigma: float,
                      c_lower: float = DEFAULT_C_LOWER, eta: float = DEFAULT_ETA,
                      c_range: float = 1.0) -> FixedPointResult:
    """Solve ``delta = c_lower * sigma * sqrt(k(theta*, delta))`` by bisection.

    ``k`` is the critical dimension (its upper bound away from the origin), a
    non-increasing step function, so ``h(delta) = delta - c sigma sqrt(k)`` is
    strictly increasing and changes sign once. When the sign change happens at
    a jump of ``k`` the returned radius is the jump location.
    """
    theta_star = as_point(E, theta_star)
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    if not c_lower > 0:
        raise ValueError("c_lower must be positive")
    hi = lower_bound_valid_range(E, theta_star, c_range, eta)
    if not hi > 0:
        raise FixedPointError("the admissible range of delta is empty (center on the boundary)")

    def h(delta: float) -> tuple[float, int]:
        k = _k_hat(E, theta_star, delta, eta)
        return delta - c_lower * sigma * math.sqrt(k), k

    h_hi, k_hi = h(hi)
    if h_hi < 0:
        raise FixedPointError(
            f"no fixed point below delta_max={hi:.6g}: sigma={sigma:g} is too large")
    # k >= 1 gives h(delta) <= delta - c sigma < 0 below c sigma
    lo = 0.5 * min(c_lower * sigma, hi)
    _, k_lo = h(lo)
    it = 0
    while hi - lo > FIXED_POINT_RTOL * hi and it < FIXED_POINT_MAX_ITER:
        mid = 0.5 * (lo + hi)
        h_mid, k_mid = h(mid)
        if h_mid < 0:
            lo, k_lo = mid, k_mid
        else:
            hi, k_hi = mid, k_mid
        it += 1
        if k_lo == k_hi:
            break
    if k_lo == k_hi:
        delta_n = c_lower * sigma * math.sqrt(k_hi)
        return FixedPointResult(delta_n, k_hi, c_lower, it, (lo, hi), False, sigma)
    delta_n = 0.5 * (lo + hi)
    return FixedPointResult(delta_n, _k_hat(E, theta_star, delta_n, eta), c_lower,
                            it, (lo, hi), True, sigma)


# -- critical functional -----------------------------------------------------

@dataclass(frozen=True)
class FunctionalValue:
    value: float
    stderr: float
    lower_envelope: float
    upper_envelope: float

    def to_dict(self) -> dict:
        return {"value": self.value, "stderr": self.stderr,
                "lower_envelope": self.lower_envelope,
                "upper_envelope": self.upper_envelope}


def critical_functional(E: EllipseSpec, theta_star, sigma: float, delta: float,
                        mc_samples: int = 2000, seed: int = 0,
                        c_lower: float = DEFAULT_C_LOWER,
                        eta: float = DEFAULT_ETA) -> FunctionalValue:
    """``delta^2/2 - sigma * width`` with the width estimated by Monte Carlo.

    The envelopes replace the width by its analytic upper and lower bounds;
    the upper envelope uses the lower width bound and is only meaningful on
    the validity range of that bound.
    """
    theta_star = as_point(E, theta_star)
    if delta == 0:
        return FunctionalValue(0.0, 0.0, 0.0, 0.0)
    if delta < 0:
        raise ValueError("delta must be non-negative")
    sec = LocalizedSection(E, theta_star, delta, eta)
    est = gaussian_width_mc(sec, mc_samples, seed, c_lower)
    quad = 0.5 * delta**2
    return FunctionalValue(quad - sigma * est.mc_mean, sigma * est.mc_stderr,
                           quad - sigma * est.upper_envelope,
                           quad - sigma * est.lower_envelope)


@dataclass(frozen=True, eq=False)
class FunctionalMinimizer:
    delta_0: float
    level_set: tuple[float, float]
    deltas: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    lower: np.ndarray = field(repr=False)
    upper: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        return {"delta_0": self.delta_0, "level_set": list(self.level_set),
                "rows": [{"delta": float(d), "F": float(v), "F_lower": float(lo),
                          "F_upper": float(up)}
                         for d, v, lo, up in zip(self.deltas, self.values,
                                                 self.lower, self.upper)]}


def minimize_critical_functional(E: EllipseSpec, theta_star, sigma: float,
                                 delta_grid: Sequence[float], mc_samples: int = 2000,
                                 seed: int = 0, c_lower: float = DEFAULT_C_LOWER,
                                 eta: float = DEFAULT_ETA) -> FunctionalMinimizer:
    """Grid minimizer of the MC functional and the sandwich interval around it.

    The interval is the hull of grid points where the lower envelope does not
    exceed the minimum of the upper envelope; it is widened to include the
    grid minimizer, which the sandwich guarantees up to Monte Carlo error.
    """
    deltas = np.asarray(sorted(float(x) for x in delta_grid))
    if deltas.size < 2 or deltas[0] <= 0:
        raise ValueError("delta grid needs at least two positive points")
    vals = [critical_functional(E, theta_star, sigma, d, mc_samples, seed, c_lower, eta)
            for d in deltas]
    F = np.array([v.value for v in vals])
    lo_env = np.array([v.lower_envelope for v in vals])
    up_env = np.array([v.upper_envelope for v in vals])
    i0 = int(np.argmin(F))
    finite_up = up_env[np.isfinite(up_env)]
    if finite_up.size == 0:
        raise ValueError("upper envelope undefined on the whole grid")
    inside = np.flatnonzero(lo_env <= finite_up.min())
    if inside.size == 0:
        raise ValueError("grid too coarse: the sandwich interval is empty")
    a = min(deltas[inside[0]], deltas[i0])
    b = max(deltas[inside[-1]], deltas[i0])
    return FunctionalMinimizer(float(deltas[i0]), (float(a), float(b)),
                               deltas, F, lo_env, up_env)


# -- rate predictions ----------------------------------------------------------

@dataclass(frozen=True)
class RatePrediction:
    family: str
    location: str
    exponent: float
    log_power: float
    proxy: float
    delta_proxy: float
    constant_note: str = "up to constants/polylogs"

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def predicted_rate(family: str, location: str, sigma: float, *,
                   alpha: float | None = None, gamma: float | None = None
                   ) -> RatePrediction:
    """Rate of the squared error in ``sigma^2``.

    ``proxy = (sigma^2)^exponent * log(1/sigma)^log_power`` and
    ``delta_proxy = sqrt(proxy)``.
    """
    if location not in ("centered", "spiked"):
        raise ValueError(f"location must be 'centered' or 'spiked', got {location!r}")
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    if family == "polynomial":
        if alpha is None or not alpha > 0.5:
            raise ValueError("polynomial decay needs alpha > 1/2")
        exponent = (2 * alpha / (2 * alpha + 1) if location == "centered"
                    else 4 * alpha / (4 * alpha + 1))
        log_power = 0.0
    elif family == "exponential":
        if gamma is None or not gamma > 0.5:
            raise ValueError("exponential decay needs gamma > 1/2")
        if not sigma < 1:
            raise ValueError("exponential rates need sigma < 1")
        exponent, log_power = 1.0, 1.0 / gamma
    else:
        raise ValueError(f"unknown family {family!r}")
    proxy = (sigma**2) ** exponent * math.log(1 / sigma) ** log_power if log_power else \
        (sigma**2) ** exponent
    return RatePrediction(family, location, exponent, log_power, proxy, math.sqrt(proxy))


# -- minimax -------------------------------------------------------------------

@dataclass(frozen=True)
class MinimaxBounds:
    lower: float
    upper: float
    delta_n: float
    k_lower: int
    k_upper: int
    regular: bool
    note: str = "lower = c * value, upper = C * value; c, C universal and unspecified"

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def minimax_bounds(E: EllipseSpec, sigma: float, c_lower: float = DEFAULT_C_LOWER,
                   eta: float = DEFAULT_ETA, regularity_c: float = 4.0,
                   regularity_grid: Sequence[float] | None = None) -> MinimaxBounds:
    """``(sigma^2 k(0, delta_n), sigma^2 k(0, delta_n / 2))`` with ``delta_n`` at the origin.

    The upper side needs regularity; it is checked at the origin over
    ``regularity_grid`` (default: 40 log-spaced scales spanning four decades
    below ``sqrt(mu_1)``). If the check fails ``upper`` is NaN.
    """
    zero = np.zeros(E.dim)
    fp = solve_fixed_point(E, zero, sigma, c_lower, eta)
    k_lo = critical_dimension_centered(E, fp.delta_n, eta).k
    k_up = critical_dimension_centered(E, 0.5 * fp.delta_n, eta).k
    if regularity_grid is None:
        top = math.sqrt(E.unit_eigenvalues()[0])
        regularity_grid = np.geomspace(top * 1e-4, top, 40)
    regular = regularity_check(E, zero, regularity_grid, regularity_c, eta).ok
    upper = sigma**2 * k_up if regular else math.nan
    return MinimaxBounds(sigma**2 * k_lo, upper, fp.delta_n, k_lo, k_up, regular)


@dataclass(frozen=True)
class ConditionReport:
    """Empirical check of the ``c1 delta_n <= delta_0 <= c2 delta_n`` conditions."""

    delta_n: float
    delta_0: float
    c1: float
    c2: float
    regular: bool

    @property
    def ratio(self) -> float:
        return self.delta_0 / self.delta_n

    @property
    def ok(self) -> bool:
        return self.regular and self.c1 <= self.ratio <= self.c2

    def to_dict(self) -> dict:
        return {"delta_n": self.delta_n, "delta_0": self.delta_0, "ratio": self.ratio,
                "c1": self.c1, "c2": self.c2, "regular": self.regular, "ok": self.ok}


def check_rate_conditions(E: EllipseSpec, theta_star, sigma: float, delta_grid,
                          c1: float, c2: float, mc_samples: int = 2000, seed: int = 0,
                          c_lower: float = DEFAULT_C_LOWER, eta: float = DEFAULT_ETA,
                          regularity_c: float = 4.0) -> ConditionReport:
    theta_star = as_point(E, theta_star)
    fp = solve_fixed_point(E, theta_star, sigma, c_lower, eta)
    mn = minimize_critical_functional(E, theta_star, sigma, delta_grid, mc_samples,
                                      seed, c_lower, eta)
    reg = regularity_check(E, theta_star, delta_grid, regularity_c, eta).ok
    return ConditionReport(fp.delta_n, mn.delta_0, c1, c2, reg)


__all__ = [
    "ConditionReport", "FixedPointError", "FixedPointResult", "FunctionalMinimizer",
    "FunctionalValue", "MinimaxBounds", "RatePrediction", "check_rate_conditions",
    "critical_functional", "minimax_bounds", "minimize_critical_functional",
    "predicted_rate", "solve_fixed_point",
]
