"""Kolmogorov widths, critical dimensions and localized Gaussian widths.

All formulas are evaluated on the unit-radius form of the ellipse, i.e. with
aspect ratios ``R**2 * mu`` (see :meth:`EllipseSpec.unit_eigenvalues`).

The critical dimension at a center ``theta*`` and scale ``delta`` is the
smallest ``k`` such that some ``k``-dimensional projection approximates
``(E - theta*) ∩ B((1-eta) delta)`` to accuracy ``0.9 delta``. It is exact at
``theta* = 0``; elsewhere only bounds are available, for three families of
centers:

``zero``
    exact scan over ``min(sqrt(mu_{k+1}), (1-eta) delta)``.
``interior``
    any center with ``|theta*|_E <= 1/2``: upper bound from
    ``(3/2) sqrt(mu_{k+1}) <= 0.9 delta``.
``spiked``
    a center supported on one coordinate ``s`` with ``|theta*|_E > 1/2``:
    upper bound ``m_u`` and lower bound ``0.09 m_l`` from the extremal-vector
    analysis.

Any other center raises :class:`BoundsUnavailable`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from . import seeding
from .core import DEFAULT_ETA, EllipseSpec, LocalizedSection, as_point, elliptic_norm
from .optimize import max_linear_batch

KDIM_LEVEL = 0.9
DEFAULT_C_LOWER = 0.3
PHI_TOL = 1e-12


class BoundsUnavailable(ValueError):
    """No implemented bound family covers the requested center."""


@dataclass(frozen=True)
class CriticalDimension:
    k: int
    exact: bool
    lower: int
    upper: int
    family: str = "zero"

    def __post_init__(self) -> None:
        if not 1 <= self.lower <= self.k <= self.upper:
            raise ValueError(f"inconsistent critical dimension {self}")
        if self.exact and not self.lower == self.k == self.upper:
            raise ValueError("an exact critical dimension has lower == k == upper")

    def to_dict(self) -> dict:
        return {"k": self.k, "exact": self.exact, "lower": self.lower,
                "upper": self.upper, "family": self.family}


@dataclass(frozen=True, eq=False)
class WidthEstimate:
    mc_mean: float
    mc_stderr: float
    n_samples: int
    lower_envelope: float
    upper_envelope: float
    k_used: CriticalDimension | None
    samples: np.ndarray = field(repr=False, default=None)

    def to_dict(self) -> dict:
        return {"mc_mean": self.mc_mean, "mc_stderr": self.mc_stderr,
                "n_samples": self.n_samples, "lower_envelope": self.lower_envelope,
                "upper_envelope": self.upper_envelope,
                "k_used": None if self.k_used is None else self.k_used.to_dict()}


class LowerBound(NamedTuple):
    value: float
    in_range: bool


# -- center families ---------------------------------------------------------

def _unit_center_norm(E: EllipseSpec, theta_star: np.ndarray) -> float:
    return elliptic_norm(E, theta_star) / E.radius


def center_family(E: EllipseSpec, theta_star) -> tuple[str, int | None]:
    """Classify a center as ``zero``, ``interior`` or ``spiked`` (with its 0-based coordinate)."""
    theta_star = as_point(E, theta_star)
    nz = np.flatnonzero(theta_star)
    if nz.size == 0:
        return "zero", None
    en = _unit_center_norm(E, theta_star)
    if en > 1 + 1e-9:
        raise ValueError(f"center lies outside the ellipse (|theta*|_E = {en:.6g})")
    if en <= 0.5:
        return "interior", None
    if nz.size == 1:
        return "spiked", int(nz[0])
    raise BoundsUnavailable(
        "bounds unavailable: critical-dimension bounds are implemented for "
        "theta* = 0, |theta*|_E <= 1/2, or single-coordinate spikes")


# -- Kolmogorov widths and critical dimensions ----------------------------------

def kolmogorov_width_centered(E: EllipseSpec, k: int, delta: float,
                              eta: float = DEFAULT_ETA) -> float:
    """Kolmogorov k-width of ``E ∩ B((1-eta) delta)`` at the origin."""
    d = E.dim
    if not 0 <= k <= d:
        raise ValueError(f"k must lie in [0, {d}], got {k}")
    if k == d:
        return 0.0
    mu = E.unit_eigenvalues()
    return float(min(math.sqrt(mu[k]), (1 - eta) * delta))


def _argmin_sqrt_mu_next(mu: np.ndarray, level: float) -> int:
    """Smallest ``k in [1, d]`` with ``sqrt(mu_{k+1}) <= level`` (``k = d`` always qualifies)."""
    d = mu.size
    if d == 1:
        return 1
    tail = np.sqrt(mu[1:])              # tail[k-1] = sqrt(mu_{k+1})
    # tail is non-increasing; count entries strictly above level
    above = int(np.searchsorted(-tail, -level, side="left"))
    return min(above + 1, d)


def critical_dimension_centered(E: EllipseSpec, delta: float,
                                eta: float = DEFAULT_ETA) -> CriticalDimension:
    if not delta > 0:
        raise ValueError("delta must be positive")
    mu = E.unit_eigenvalues()
    if (1 - eta) * delta <= KDIM_LEVEL * delta:
        k = 1                                       # unreachable for eta < 0.1
    else:
        k = _argmin_sqrt_mu_next(mu, KDIM_LEVEL * delta)
    return CriticalDimension(k, True, k, k, "zero")


def _k_interior(mu: np.ndarray, delta: float) -> int:
    return _argmin_sqrt_mu_next(mu, KDIM_LEVEL * delta / 1.5)


def _spiked_counts(mu: np.ndarray, s: int, delta: float, eta: float) -> tuple[int, int]:
    """``(m_u, m_l)``: largest ``k`` with ``mu_k^2 >= xi^2 mu_s / 64`` resp. ``delta^2 mu_s``."""
    xi = (1 - eta) * delta
    sq = mu**2
    m_u = int(np.count_nonzero(sq >= xi**2 * mu[s] / 64.0))
    m_l = int(np.count_nonzero(sq >= delta**2 * mu[s]))
    return max(m_u, 1), max(m_l, 1)


def critical_dimension_bounds(E: EllipseSpec, theta_star, delta: float,
                              eta: float = DEFAULT_ETA) -> CriticalDimension:
    """Bounds on the critical dimension at ``theta_star``; ``k`` is the upper bound."""
    theta_star = as_point(E, theta_star)
    if not delta > 0:
        raise ValueError("delta must be positive")
    family, s = center_family(E, theta_star)
    if family == "zero":
        return critical_dimension_centered(E, delta, eta)
    mu = E.unit_eigenvalues()
    if family == "interior":
        up = _k_interior(mu, delta)
        return CriticalDimension(up, False, 1, up, "interior")
    m_u, m_l = _spiked_counts(mu, s, delta, eta)
    lower = max(1, math.floor(0.09 * m_l))
    return CriticalDimension(m_u, False, lower, m_u, "spiked")


def _gamma_tail(E: EllipseSpec, theta_star: np.ndarray, delta: float, eta: float
                ) -> tuple[float, CriticalDimension]:
    """Feasible-gamma tail sum paired with the projection dimension it uses."""
    kd = critical_dimension_bounds(E, theta_star, delta, eta)
    mu = E.unit_eigenvalues()
    tail = float(np.sum(mu[kd.k:]))
    if kd.family == "interior":
        # |D|_E <= |theta*+D|_E + |theta*|_E on the section
        tail *= (1.0 + _unit_center_norm(E, theta_star)) ** 2
    elif kd.family == "spiked":
        tail *= delta**2
    return tail, kd


def width_upper_bound(E: EllipseSpec, theta_star, delta: float,
                      eta: float = DEFAULT_ETA) -> float:
    """Feasible-gamma upper bound ``delta*sqrt(k) + sqrt(tail)`` on the localized width."""
    theta_star = as_point(E, theta_star)
    tail, kd = _gamma_tail(E, theta_star, delta, eta)
    return delta * math.sqrt(kd.k) + math.sqrt(tail)


def width_lower_bound(E: EllipseSpec, theta_star, delta: float,
                      eta: float = DEFAULT_ETA, c_lower: float = DEFAULT_C_LOWER,
                      c_range: float = 1.0) -> LowerBound:
    """``c_lower * delta * sqrt(1 - |theta*|_E^2) * sqrt(k_lower)``.

    Returns ``LowerBound(0.0, False)`` when ``delta`` exceeds
    :func:`lower_bound_valid_range`.
    """
    theta_star = as_point(E, theta_star)
    kd = critical_dimension_bounds(E, theta_star, delta, eta)
    if delta > lower_bound_valid_range(E, theta_star, c_range, eta):
        return LowerBound(0.0, False)
    en = min(_unit_center_norm(E, theta_star), 1.0)
    return LowerBound(c_lower * delta * math.sqrt(1.0 - en**2) * math.sqrt(kd.lower), True)


@dataclass(frozen=True)
class RegularityReport:
    deltas: tuple[float, ...]
    ratios: tuple[float, ...]
    passed: tuple[bool, ...]
    c: float

    @property
    def ok(self) -> bool:
        return all(self.passed)

    def to_dict(self) -> dict:
        return {"c": self.c, "ok": self.ok, "label": "feasible-gamma upper bound",
                "rows": [{"delta": d, "ratio": r, "pass": p}
                         for d, r, p in zip(self.deltas, self.ratios, self.passed)]}


def regularity_check(E: EllipseSpec, theta_star, delta_grid: Sequence[float],
                     c: float = 4.0, eta: float = DEFAULT_ETA) -> RegularityReport:
    """Check ``tail(delta) <= c * delta^2 * k(delta)`` on a grid of scales."""
    theta_star = as_point(E, theta_star)
    deltas = [float(x) for x in delta_grid]
    if not deltas or min(deltas) <= 0:
        raise ValueError("delta grid must be non-empty and strictly positive")
    ratios, passed = [], []
    for delta in deltas:
        tail, kd = _gamma_tail(E, theta_star, delta, eta)
        ratio = tail / (delta**2 * kd.k)
        ratios.append(ratio)
        passed.append(bool(ratio <= c))
    return RegularityReport(tuple(deltas), tuple(ratios), tuple(passed), c)


# -- Monte Carlo -------------------------------------------------------------

def gaussian_width_mc(section: LocalizedSection, n_samples: int, seed: int,
                      c_lower: float = DEFAULT_C_LOWER, c_range: float = 1.0
                      ) -> WidthEstimate:
    """Monte Carlo estimate of ``E sup_{D in section} <w, D>``.

    Sample ``i`` uses the normal stream keyed by ``(seed, i)``.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    E = section.ellipse
    W = seeding.normal_rows(n_samples, E.dim, seed)
    vals = max_linear_batch(section, W)
    mean = float(vals.mean())
    stderr = float(vals.std(ddof=1) / math.sqrt(n_samples)) if n_samples > 1 else 0.0
    try:
        lo = width_lower_bound(E, section.center, section.delta, section.eta,
                               c_lower, c_range).value
        hi = width_upper_bound(E, section.center, section.delta, section.eta)
        kd = critical_dimension_bounds(E, section.center, section.delta, section.eta)
    except BoundsUnavailable:
        lo, hi, kd = math.nan, math.nan, None
    return WidthEstimate(mean, stderr, n_samples, lo, hi, kd, vals)


# -- boundary map ------------------------------------------------------------

def _phi_f(mu: np.ndarray, theta_star: np.ndarray, r: float) -> float:
    if r <= 0:
        return 0.0
    return float(np.sum((r * theta_star / (r + mu)) ** 2))


def phi(E: EllipseSpec, theta_star, delta: float, eta: float = DEFAULT_ETA) -> float:
    """Boundary-proximity map, a non-decreasing function of ``delta`` with values in [0, 1]."""
    theta_star = as_point(E, theta_star)
    if not delta > 0:
        raise ValueError("delta must be positive")
    a = 1 - eta
    if delta > np.linalg.norm(theta_star) / a:
        return 1.0
    mu = E.unit_eigenvalues()
    target = (a * delta) ** 2
    if _phi_f(mu, theta_star, 1.0) < target:
        return 1.0
    lo, hi = 0.0, 1.0
    while hi - lo > PHI_TOL * (1.0 + hi):
        mid = 0.5 * (lo + hi)
        if _phi_f(mu, theta_star, mid) >= target:
            hi = mid
        else:
            lo = mid
    return hi


def phi_inverse(E: EllipseSpec, theta_star, x: float, eta: float = DEFAULT_ETA) -> float:
    """Largest ``delta`` with ``phi(delta) <= x``; infinite for ``x >= 1``.

    For ``x < 1`` the level set is ``(1-eta)^2 delta^2 <= f(x)``, so the
    inverse is ``sqrt(f(x)) / (1-eta)`` in closed form.
    """
    theta_star = as_point(E, theta_star)
    if x < 0:
        raise ValueError("x must be non-negative")
    if x >= 1:
        return math.inf
    return math.sqrt(_phi_f(E.unit_eigenvalues(), theta_star, x)) / (1 - eta)


def lower_bound_valid_range(E: EllipseSpec, theta_star, c: float = 1.0,
                            eta: float = DEFAULT_ETA) -> float:
    """Upper end of the scales on which the width lower bound holds."""
    theta_star = as_point(E, theta_star)
    cap = math.sqrt(E.unit_eigenvalues()[0])
    en = _unit_center_norm(E, theta_star)
    if en == 0:
        return cap
    inv = phi_inverse(E, theta_star, (1.0 / en - 1.0) ** 2, eta)
    return min(c * inv, cap)
