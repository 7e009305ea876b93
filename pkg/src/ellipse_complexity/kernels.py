"""Kernel Gram matrices, a Jacobi eigensolver and spectral decay classification.

The ellipse induced by a kernel on design points ``x_1..x_n`` has aspect
ratios equal to the eigenvalues of the normalized Gram matrix ``K / n``.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import minimize_scalar

from .core import EllipseSpec

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100
NEGATIVE_CLIP_TOL = 1e-10
FIT_FLOOR = 1e-14
MIN_FIT_POINTS = 10
AMBIGUITY = 0.10
GAMMA_MIN, GAMMA_MAX = 0.5, 3.0
KERNEL_KINDS = ("gaussian", "laplacian", "sobolev1")


class KernelError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class KernelSpec:
    kind: str
    bandwidth: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in KERNEL_KINDS:
            raise KernelError(f"unknown kernel {self.kind!r}; choose from {KERNEL_KINDS}")
        if not self.bandwidth > 0:
            raise KernelError("bandwidth must be positive")

    def __call__(self, x: np.ndarray, z: np.ndarray) -> np.ndarray:
        """Kernel matrix between 1-D point arrays ``x`` and ``z``."""
        x = np.asarray(x, dtype=float)[:, None]
        z = np.asarray(z, dtype=float)[None, :]
        if self.kind == "gaussian":
            return np.exp(-((x - z) ** 2) / (2 * self.bandwidth**2))
        if self.kind == "laplacian":
            return np.exp(-np.abs(x - z) / self.bandwidth)
        return np.minimum(x, z)


def gram_matrix(kernel: KernelSpec, points) -> np.ndarray:
    """Normalized Gram matrix ``K_ij / n`` on the design points."""
    pts = np.asarray(points, dtype=float).ravel()
    if pts.size == 0:
        raise KernelError("need at least one design point")
    if not np.all(np.isfinite(pts)):
        raise KernelError("design points must be finite")
    if kernel.kind == "sobolev1" and pts.min() < 0:
        raise KernelError("sobolev1 needs non-negative design points")
    K = kernel(pts, pts) / pts.size
    return 0.5 * (K + K.T)


def uniform_grid(n: int, lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
    """``n`` equally spaced points ``lo + (hi - lo) * i / n`` for ``i = 1..n``."""
    if n < 1:
        raise KernelError("grid needs n >= 1")
    return lo + (hi - lo) * np.arange(1, n + 1) / n


def load_points_csv(path: str | Path) -> np.ndarray:
    """Read design points from the first column of a CSV file (header optional)."""
    vals = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or not row[0].strip():
                continue
            try:
                vals.append(float(row[0]))
            except ValueError:
                if vals:
                    raise KernelError(f"non-numeric design point {row[0]!r}") from None
    if not vals:
        raise KernelError(f"no design points in {path}")
    return np.asarray(vals)


# -- Jacobi ------------------------------------------------------------------

def _round_robin(m: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Parallel ordering: ``m - 1`` rounds of ``m / 2`` disjoint pairs (``m`` even)."""
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        half = m // 2
        p = np.array(players[:half])
        q = np.array(players[half:][::-1])
        rounds.append((np.minimum(p, q), np.maximum(p, q)))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def _off_norm(A: np.ndarray) -> float:
    off = A - np.diag(np.diag(A))
    return float(np.linalg.norm(off))


def sym_eigenvalues(matrix, tol: float = JACOBI_TOL,
                    max_sweeps: int = JACOBI_MAX_SWEEPS) -> np.ndarray:
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, sorted descending.

    Each sweep applies the rotations of a round-robin tournament, where every
    round is a batch of disjoint pairs handled together. Iteration stops once
    the off-diagonal Frobenius norm falls below ``tol * ||A||_F``.
    """
    A = np.array(matrix, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise KernelError("matrix must be square")
    if not np.all(np.isfinite(A)):
        raise KernelError("matrix must be finite")
    if not np.allclose(A, A.T, rtol=0, atol=1e-12 * max(1.0, np.abs(A).max())):
        raise KernelError("matrix must be symmetric")
    n = A.shape[0]
    A = 0.5 * (A + A.T)
    if n == 1:
        return A.ravel().copy()
    # work at unit scale so squared entries neither underflow nor overflow
    amax = float(np.abs(A).max())
    if amax == 0:
        return np.zeros(n)
    A = A / amax
    m = n + (n % 2)
    if m != n:
        # a decoupled dummy row keeps the tournament even; it stays at zero
        A = np.pad(A, ((0, 1), (0, 1)))
    scale = float(np.linalg.norm(A))
    rounds = _round_robin(m)
    for _ in range(max_sweeps):
        if _off_norm(A) <= tol * scale:
            break
        for p, q in rounds:
            apq = A[p, q]
            live = np.abs(apq) > 1e-300
            if not live.any():
                continue
            p, q, apq = p[live], q[live], apq[live]
            app, aqq = A[p, p], A[q, q]
            theta = (aqq - app) / (2 * apq)
            big = np.abs(theta) > 1e150
            th = np.where(big, 1.0, theta)
            t = np.sign(th) / (np.abs(th) + np.sqrt(th**2 + 1))
            # huge |theta|: t ~ 1 / (2 theta)
            t = np.where(big, 0.5 / np.where(big, theta, 1.0), t)
            t[theta == 0] = 1.0
            c = 1 / np.sqrt(1 + t**2)
            s = t * c
            # columns, then rows: A <- J^T A J with J acting on (p, q)
            Ap, Aq = A[:, p].copy(), A[:, q].copy()
            A[:, p] = c * Ap - s * Aq
            A[:, q] = s * Ap + c * Aq
            Ap, Aq = A[p, :].copy(), A[q, :].copy()
            A[p, :] = c[:, None] * Ap - s[:, None] * Aq
            A[q, :] = s[:, None] * Ap + c[:, None] * Aq
            A[p, q] = 0.0
            A[q, p] = 0.0
    else:
        if _off_norm(A) > tol * scale:
            raise ConvergenceError(f"Jacobi did not converge in {max_sweeps} sweeps")
    eig = np.diag(A)[:n] if m == n else np.delete(np.diag(A), n)
    return np.sort(eig * amax)[::-1]


def clip_spectrum(eigs, tol: float = NEGATIVE_CLIP_TOL) -> np.ndarray:
    """Clip round-off negatives to zero; reject genuinely indefinite spectra."""
    eigs = np.sort(np.asarray(eigs, dtype=float))[::-1]
    top = max(float(eigs[0]), 0.0)
    neg = eigs < 0
    if neg.any():
        worst = float(-eigs.min())
        if worst > tol * max(top, 1e-300):
            raise KernelError(f"kernel matrix is not positive semidefinite "
                              f"(eigenvalue {-worst:.3e}, top {top:.3e})")
        warnings.warn(f"clipped {int(neg.sum())} negative eigenvalues "
                      f"(largest magnitude {worst:.3e}) to zero", RuntimeWarning,
                      stacklevel=2)
        eigs = np.where(neg, 0.0, eigs)
    return eigs


def ellipse_from_kernel(kernel: KernelSpec, points, radius: float = 1.0) -> EllipseSpec:
    return EllipseSpec(clip_spectrum(sym_eigenvalues(gram_matrix(kernel, points))), radius)


# -- decay classification ----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SpectrumReport:
    eigenvalues: np.ndarray = field(repr=False)
    family: str
    alpha: float
    gamma: float
    residual_polynomial: float
    residual_exponential: float
    n_fit: int

    @property
    def fit_residual(self) -> float:
        return min(self.residual_polynomial, self.residual_exponential)

    def to_dict(self) -> dict:
        return {"family": self.family, "alpha": self.alpha, "gamma": self.gamma,
                "residual_polynomial": self.residual_polynomial,
                "residual_exponential": self.residual_exponential,
                "n_fit": self.n_fit, "eigenvalues": self.eigenvalues.tolist()}


def _ols_rms(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """RMS residual and slope of the least-squares line ``y ~ a + b x``."""
    X = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    r = y - X @ coef
    return float(math.sqrt(np.mean(r**2))), float(coef[1])


def classify_decay(eigenvalues, floor: float = FIT_FLOOR) -> SpectrumReport:
    """Fit ``log mu_j`` against polynomial and stretched-exponential decay.

    Polynomial: ``log mu_j = a - 2 alpha log j``. Exponential:
    ``log mu_j = a - b j**gamma`` with ``gamma`` in [1/2, 3], fitted by a
    coarse grid and a bounded refinement; smaller ``gamma`` would let the
    stretched exponential mimic a power law. Only eigenvalues above ``floor * mu_1`` enter the
    fit. The family with the smaller RMS residual wins unless the two
    residuals are within 10% of each other, in which case the family is
    ``undetermined``.
    """
    mu = np.sort(np.asarray(eigenvalues, dtype=float))[::-1]
    if mu.size == 0 or not mu[0] > 0:
        raise KernelError("spectrum needs a positive leading eigenvalue")
    keep = mu > floor * mu[0]
    n_fit = int(np.count_nonzero(keep))
    if n_fit < MIN_FIT_POINTS:
        raise KernelError(f"only {n_fit} eigenvalues above the fit floor; "
                          f"need {MIN_FIT_POINTS}")
    y = np.log(mu[keep])
    j = np.arange(1, n_fit + 1, dtype=float)
    res_p, slope_p = _ols_rms(np.log(j), y)

    def res_e(g: float) -> float:
        return _ols_rms(j**g, y)[0]

    grid = np.linspace(GAMMA_MIN, GAMMA_MAX, 51)
    best = grid[int(np.argmin([res_e(g) for g in grid]))]
    opt = minimize_scalar(res_e, bounds=(max(GAMMA_MIN, best - 0.05),
                                         min(GAMMA_MAX, best + 0.05)),
                          method="bounded", options={"xatol": 1e-6})
    gamma = float(opt.x) if opt.fun <= res_e(best) else float(best)
    res_x = res_e(gamma)
    if abs(res_p - res_x) <= AMBIGUITY * max(res_p, res_x):
        family = "undetermined"
    else:
        family = "polynomial" if res_p < res_x else "exponential"
    return SpectrumReport(mu, family, -0.5 * slope_p, gamma, res_p, res_x, n_fit)
