"""Ellipse data model: eigenvalue sequences, the elliptical seminorm, membership
tests and the rescaling that reduces a radius-R problem to the unit ellipse.

An ellipse in R^d is described by non-increasing aspect ratios
``mu_1 >= ... >= mu_d >= 0`` and a radius ``R``::

    E(R) = { theta : sum_j theta_j**2 / mu_j <= R**2 }

A zero aspect ratio pins the matching coordinate to zero.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

DEFAULT_ETA = 1e-5
MEMBERSHIP_TOL = 1e-9


class EllipseError(ValueError):
    """Raised for malformed ellipses, centers or dimension mismatches."""


@dataclass(frozen=True, eq=False)
class EllipseSpec:
    """Aspect ratios ``mu`` (non-increasing, non-negative) and a radius."""

    eigenvalues: np.ndarray
    radius: float = 1.0

    def __post_init__(self) -> None:
        mu = np.array(self.eigenvalues, dtype=float).ravel()
        if mu.size == 0:
            raise EllipseError("an ellipse needs at least one eigenvalue")
        if not np.all(np.isfinite(mu)):
            raise EllipseError("eigenvalues must be finite")
        if np.any(mu < 0):
            raise EllipseError("eigenvalues must be non-negative")
        if np.any(np.diff(mu) > 0):
            raise EllipseError("eigenvalues must be sorted non-increasing")
        if mu[0] <= 0:
            raise EllipseError("at least one eigenvalue must be positive")
        radius = float(self.radius)
        if not (radius > 0 and math.isfinite(radius)):
            raise EllipseError(f"radius must be positive, got {self.radius!r}")
        mu.setflags(write=False)
        object.__setattr__(self, "eigenvalues", mu)
        object.__setattr__(self, "radius", radius)

    @property
    def dim(self) -> int:
        return int(self.eigenvalues.size)

    @property
    def mu(self) -> np.ndarray:
        return self.eigenvalues

    @property
    def active(self) -> np.ndarray:
        """Boolean mask of coordinates with a positive aspect ratio."""
        return self.eigenvalues > 0

    def unit_eigenvalues(self) -> np.ndarray:
        """Aspect ratios of the same set written as a unit-radius ellipse.

        ``E(R)`` with ratios ``mu`` coincides with ``E(1)`` with ratios
        ``R**2 * mu``; the width and rate formulas are stated for ``R = 1``.
        """
        return self.radius**2 * self.eigenvalues

    def with_radius(self, radius: float) -> "EllipseSpec":
        return EllipseSpec(self.eigenvalues, radius)

    def to_dict(self) -> dict[str, Any]:
        return {"eigenvalues": self.eigenvalues.tolist(), "radius": self.radius}

    def __repr__(self) -> str:
        mu = self.eigenvalues
        head = ", ".join(f"{m:.4g}" for m in mu[:4])
        more = ", ..." if mu.size > 4 else ""
        return f"EllipseSpec(d={mu.size}, mu=[{head}{more}], R={self.radius:g})"

    # -- constructors -----------------------------------------------------

    @classmethod
    def ball(cls, d: int, radius: float = 1.0) -> "EllipseSpec":
        return cls(np.ones(d), radius)

    @classmethod
    def polynomial(cls, d: int, alpha: float, c: float = 1.0,
                   radius: float = 1.0) -> "EllipseSpec":
        """Sobolev-type decay ``mu_j = c * j**(-2 alpha)``."""
        if c <= 0:
            raise EllipseError("c must be positive")
        j = np.arange(1, d + 1, dtype=float)
        return cls(c * j ** (-2.0 * alpha), radius)

    @classmethod
    def exponential(cls, d: int, gamma: float, c1: float = 1.0, c2: float = 1.0,
                    radius: float = 1.0) -> "EllipseSpec":
        """Exponential decay ``mu_j = c1 * exp(-c2 * j**gamma)``."""
        if c1 <= 0 or c2 <= 0:
            raise EllipseError("c1 and c2 must be positive")
        j = np.arange(1, d + 1, dtype=float)
        return cls(c1 * np.exp(-c2 * j**gamma), radius)

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "EllipseSpec":
        """Build from ``{"eigenvalues": [...], "radius": r}`` or a decay family.

        Families: ``{"family": "polynomial", "alpha", "c", "d"}`` and
        ``{"family": "exponential", "gamma", "c1", "c2", "d"}``. Radius
        defaults to 1.
        """
        radius = float(doc.get("radius", 1.0))
        try:
            if "eigenvalues" in doc:
                return cls(np.asarray(doc["eigenvalues"], dtype=float), radius)
            family = doc.get("family")
            if family == "polynomial":
                return cls.polynomial(int(doc["d"]), float(doc["alpha"]),
                                      float(doc.get("c", 1.0)), radius)
            if family == "exponential":
                return cls.exponential(int(doc["d"]), float(doc["gamma"]),
                                       float(doc.get("c1", 1.0)),
                                       float(doc.get("c2", 1.0)), radius)
            if family == "ball":
                return cls.ball(int(doc["d"]), radius)
        except KeyError as exc:
            raise EllipseError(f"ellipse document is missing key {exc}") from None
        raise EllipseError(f"cannot build an ellipse from {dict(doc)!r}")

    @classmethod
    def from_json(cls, path: str | Path) -> "EllipseSpec":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def as_point(E: EllipseSpec, v: Any) -> np.ndarray:
    """Coerce ``v`` to a float vector matching the dimension of ``E``."""
    v = np.asarray(v, dtype=float).ravel()
    if v.size != E.dim:
        raise EllipseError(f"dimension mismatch: ellipse has d={E.dim}, "
                           f"vector has length {v.size}")
    return v


def elliptic_norm(E: EllipseSpec, v: Any) -> float:
    """``sqrt(sum v_j**2 / mu_j)``; infinite if ``v`` leaves a pinned coordinate."""
    v = as_point(E, v)
    act = E.active
    if np.any(v[~act] != 0):
        return math.inf
    return float(math.sqrt(np.sum(v[act] ** 2 / E.eigenvalues[act])))


def contains(E: EllipseSpec, v: Any, tol: float = 0.0) -> bool:
    if tol < 0:
        raise EllipseError("tol must be non-negative")
    return elliptic_norm(E, v) <= E.radius * (1.0 + tol)


@dataclass(frozen=True, eq=False)
class LocalizedSection:
    """The re-centered ellipse ``E - center`` intersected with the ball ``B(delta)``."""

    ellipse: EllipseSpec
    center: np.ndarray
    delta: float
    eta: float = DEFAULT_ETA
    _center_norm: float = field(init=False, repr=False)

    def __post_init__(self) -> None:
        center = as_point(self.ellipse, self.center).copy()
        center.setflags(write=False)
        object.__setattr__(self, "center", center)
        if not (self.delta > 0 and math.isfinite(self.delta)):
            raise EllipseError(f"delta must be positive, got {self.delta!r}")
        if not 0 < self.eta < 0.1:
            raise EllipseError(f"eta must lie in (0, 0.1), got {self.eta!r}")
        enorm = elliptic_norm(self.ellipse, center)
        if not enorm <= self.ellipse.radius * (1 + MEMBERSHIP_TOL):
            raise EllipseError("center lies outside the ellipse "
                               f"(elliptic norm {enorm:.6g} > R={self.ellipse.radius:g})")
        object.__setattr__(self, "_center_norm", enorm)
        object.__setattr__(self, "delta", float(self.delta))

    @property
    def center_enorm(self) -> float:
        return self._center_norm


def rescale_problem(E: EllipseSpec, center: Any, sigma: float
                    ) -> tuple[EllipseSpec, np.ndarray, float]:
    """Map a radius-R problem to the unit ellipse.

    Returns ``(E with R=1, center / R, sigma / R)``. Radii computed on the
    rescaled problem (critical radius, minimizers, errors) scale back by R.
    """
    center = as_point(E, center)
    if sigma <= 0:
        raise EllipseError("sigma must be positive")
    R = E.radius
    return E.with_radius(1.0), center / R, sigma / R


def unscale_radius(value: float, E: EllipseSpec) -> float:
    """Inverse of :func:`rescale_problem` for any length-valued quantity."""
    return value * E.radius
