"""Convex subproblems over axis-aligned ellipses.

* Euclidean projection onto an ellipse (the constrained least-squares
  estimator is the projection of the observation).
* Maximizing a linear functional over the re-centered ellipse intersected with
  a centered ball, certified by a two-multiplier dual.
* Dykstra's alternating projections onto the same intersection, used as an
  independent feasibility oracle.

Every solver works on the coordinates with positive aspect ratio only; pinned
coordinates are zero in every returned vector.

For a fixed ball multiplier ``lam1 = 1/s`` the inner maximization over the
ellipse is the projection of ``center + s*w``, so the nested dual search reduces
to a monotone scalar search over ``s`` with an ellipse projection inside.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import EllipseSpec, LocalizedSection, as_point, elliptic_norm

PROJ_TOL = 1e-13
PROJ_MAX_ITER = 500
MAX_DOUBLINGS = 1000


class SolverError(RuntimeError):
    """A solver hit its iteration cap before certifying its answer."""

    def __init__(self, message: str, best_gap: float = math.nan,
                 residual: float = math.nan):
        super().__init__(message)
        self.best_gap = best_gap
        self.residual = residual


@dataclass(frozen=True, eq=False)
class DualCertificate:
    """Solution of ``sup <w, D>`` over the section with its dual certificate.

    The multipliers refer to the Lagrangian
    ``<w,D> - lambda_ball/2 (|D|^2 - delta^2)
    - lambda_ellipse/2 (|center + D|_E^2 - R^2)``.
    """

    lambda_ball: float
    lambda_ellipse: float
    maximizer: np.ndarray
    primal_value: float
    duality_gap: float
    iterations: int

    @property
    def dual_value(self) -> float:
        return self.primal_value + self.duality_gap


# -- projection -------------------------------------------------------------

def _project_rows(mu: np.ndarray, R: float, Y: np.ndarray,
                  tol: float = PROJ_TOL, max_iter: int = PROJ_MAX_ITER
                  ) -> tuple[np.ndarray, np.ndarray, int]:
    """Project each row of ``Y`` onto ``{x : sum x^2/mu <= R^2}`` (``mu > 0``).

    Newton's method on ``1/N(lam) - 1/R`` with
    ``N(lam)^2 = sum mu y^2 / (mu + lam)^2``; that function is concave and
    increasing, so iterates started at ``lam = 0`` approach the root from the
    left without overshooting.
    """
    Y = np.atleast_2d(Y)
    c = mu * Y**2
    n2 = np.sum(Y**2 / mu, axis=1)
    lam = np.zeros(Y.shape[0])
    out = np.flatnonzero(n2 > R * R)
    iters = 0
    if out.size:
        cc = c[out]
        lo = np.zeros(out.size)
        todo = np.ones(out.size, dtype=bool)
        while todo.any():
            if iters >= max_iter:
                raise SolverError("ellipse projection did not converge",
                                  residual=float(np.max(np.abs(np.sqrt(n2[out][todo]) - R))))
            iters += 1
            idx = np.flatnonzero(todo)
            denom = mu + lo[idx, None]
            N = np.sqrt(np.sum(cc[idx] / denom**2, axis=1))
            T = np.sum(cc[idx] / denom**3, axis=1)
            step = (1.0 / N - 1.0 / R) * N**3 / T
            new = np.maximum(lo[idx] - step, 0.0)
            lo[idx] = new
            done = (np.abs(N - R) <= tol * R) | (np.abs(step) <= tol * np.maximum(new, 1e-300))
            todo[idx[done]] = False
        lam[out] = lo
    theta = Y * (mu / (mu + lam[:, None]))
    return theta, lam, iters


def project_ellipse(E: EllipseSpec, y) -> tuple[np.ndarray, float]:
    """Euclidean projection of ``y`` onto ``E``.

    Returns ``(theta_hat, lam)`` with ``theta_hat_j = y_j mu_j / (mu_j + lam)``;
    ``lam = 0`` when ``y`` is already feasible.
    """
    y = as_point(E, y)
    act = E.active
    theta = np.zeros_like(y)
    th, lam, _ = _project_rows(E.mu[act], E.radius, y[act][None, :])
    theta[act] = th[0]
    return theta, float(lam[0])


def project_ellipse_batch(E: EllipseSpec, Y) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise :func:`project_ellipse` for an ``(n, d)`` array."""
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2 or Y.shape[1] != E.dim:
        raise ValueError(f"expected an (n, {E.dim}) array, got shape {Y.shape}")
    act = E.active
    theta = np.zeros_like(Y)
    th, lam, _ = _project_rows(E.mu[act], E.radius, Y[:, act])
    theta[:, act] = th
    return theta, lam


def lse(E: EllipseSpec, theta_star, sigma: float, noise) -> np.ndarray:
    """Constrained least-squares estimate from ``y = theta_star + sigma * noise``."""
    theta_star = as_point(E, theta_star)
    noise = as_point(E, noise)
    return project_ellipse(E, theta_star + sigma * noise)[0]


def lse_batch(E: EllipseSpec, theta_star, sigma: float, noise) -> np.ndarray:
    theta_star = as_point(E, theta_star)
    return project_ellipse_batch(E, theta_star[None, :] + sigma * np.asarray(noise))[0]


# -- linear maximization over the section -------------------------------------

def default_gap_tol(w_norm, delta: float):
    return 1e-8 * np.asarray(w_norm) * delta


def _enorm2(mu, X):
    return np.sum(X**2 / mu, axis=-1)


def _feasible_scale(mu, R, center, D, delta):
    """Largest ``t <= 1`` keeping ``t*D`` inside the ball and ``center + t*D`` in the ellipse."""
    dn = np.linalg.norm(D, axis=1)
    t = np.ones(D.shape[0])
    big = dn > delta
    t[big] = delta / dn[big]
    a = _enorm2(mu, D)
    b = np.sum(center * D / mu, axis=1)
    c = np.sum(center**2 / mu) - R * R
    over = _enorm2(mu, center + D) > R * R
    if np.any(over):
        disc = np.maximum(b[over] ** 2 - a[over] * min(c, 0.0), 0.0)
        root = (-b[over] + np.sqrt(disc)) / a[over]
        t[over] = np.minimum(t[over], np.clip(root, 0.0, 1.0))
    return t


def _evaluate(mu, R, center, delta, W, s):
    """Inner solve for ball multiplier ``1/s``.

    Returns the Lagrangian maximizer ``D``, the primal value at its feasible
    rescaling, the dual value and both multipliers.
    """
    theta, lam, _ = _project_rows(mu, R, center + s[:, None] * W)
    D = theta - center
    lam1 = 1.0 / s
    lam2 = lam * lam1
    wd = np.sum(W * D, axis=1)
    dual = (wd - 0.5 * lam1 * (np.sum(D**2, axis=1) - delta**2)
            - 0.5 * lam2 * (_enorm2(mu, theta) - R * R))
    t = _feasible_scale(mu, R, center, D, delta)
    return D, t * wd, dual, lam1, lam2


def _max_linear_rows(mu: np.ndarray, R: float, center: np.ndarray, delta: float,
                     W: np.ndarray, gap_tol=None, max_iter: int = 300):
    """Vectorized core of :func:`max_linear_over_intersection` (active coords only).

    Returns ``(values, D, lam1, lam2, gaps, iters)``.
    """
    W = np.atleast_2d(W)
    n = W.shape[0]
    wn = np.linalg.norm(W, axis=1)
    tol = default_gap_tol(wn, delta) if gap_tol is None else np.broadcast_to(
        np.asarray(gap_tol, dtype=float), (n,)).copy()

    values = np.zeros(n)
    D = np.zeros_like(W)
    lam1 = np.zeros(n)
    lam2 = np.zeros(n)
    gaps = np.zeros(n)
    iters = np.zeros(n, dtype=int)

    nz = wn > 0
    # (a) ball constraint alone
    Da = np.zeros_like(W)
    Da[nz] = delta * W[nz] / wn[nz, None]
    ok_a = nz & (_enorm2(mu, center + Da) <= R * R)
    D[ok_a] = Da[ok_a]
    values[ok_a] = delta * wn[ok_a]
    lam1[ok_a] = wn[ok_a] / delta

    # (b) ellipse constraint alone: support point of the ellipse in direction w
    rest = nz & ~ok_a
    wmu = np.sqrt(np.sum(mu * W**2, axis=1))
    Db = np.zeros_like(W)
    Db[rest] = R * mu * W[rest] / wmu[rest, None] - center
    ok_b = rest & (np.linalg.norm(Db, axis=1) <= delta)
    D[ok_b] = Db[ok_b]
    values[ok_b] = np.sum(W[ok_b] * Db[ok_b], axis=1)
    lam2[ok_b] = wmu[ok_b] / R

    both = np.flatnonzero(rest & ~ok_b)
    if both.size == 0:
        return values, D, lam1, lam2, gaps, iters

    Wb = W[both]
    # s = delta/|w| keeps the ball feasible (projection is non-expansive around center)
    s_lo = delta / wn[both]
    s_hi = 2.0 * s_lo
    D_lo, p_lo, g_lo, l1_lo, l2_lo = _evaluate(mu, R, center, delta, Wb, s_lo)
    f_lo = np.linalg.norm(D_lo, axis=1) - delta
    D_hi, p_hi, g_hi, l1_hi, l2_hi = _evaluate(mu, R, center, delta, Wb, s_hi)
    f_hi = np.linalg.norm(D_hi, axis=1) - delta
    grow = f_hi < 0
    k = 0
    while grow.any():
        if k >= MAX_DOUBLINGS:
            raise SolverError("could not bracket the ball multiplier")
        k += 1
        g_idx = np.flatnonzero(grow)
        s_lo[g_idx] = s_hi[g_idx]
        f_lo[g_idx] = f_hi[g_idx]
        D_lo[g_idx], p_lo[g_idx], g_lo[g_idx] = D_hi[g_idx], p_hi[g_idx], g_hi[g_idx]
        l1_lo[g_idx], l2_lo[g_idx] = l1_hi[g_idx], l2_hi[g_idx]
        s_hi[g_idx] *= 2.0
        Dn, pn, gn, a1, a2 = _evaluate(mu, R, center, delta, Wb[g_idx], s_hi[g_idx])
        D_hi[g_idx], p_hi[g_idx], g_hi[g_idx] = Dn, pn, gn
        l1_hi[g_idx], l2_hi[g_idx] = a1, a2
        f_hi[g_idx] = np.linalg.norm(Dn, axis=1) - delta
        grow[g_idx] = f_hi[g_idx] < 0

    # Illinois iteration on log(s); both ends stay certified (primal, dual)
    x_lo, x_hi = np.log(s_lo), np.log(s_hi)
    F_lo, F_hi = f_lo.copy(), f_hi.copy()
    side = np.zeros(both.size, dtype=int)
    best_p = np.maximum(p_lo, p_hi)
    t_hi = _feasible_scale(mu, R, center, D_hi, delta)
    best_D = np.where((p_lo >= p_hi)[:, None], D_lo, D_hi * t_hi[:, None])
    use_lo = g_lo <= g_hi
    best_g = np.where(use_lo, g_lo, g_hi)
    best_l1 = np.where(use_lo, l1_lo, l1_hi)
    best_l2 = np.where(use_lo, l2_lo, l2_hi)
    btol = tol[both]
    todo = (best_g - best_p) > btol
    it = np.zeros(both.size, dtype=int)
    while todo.any():
        idx = np.flatnonzero(todo)
        if it[idx].max() >= max_iter:
            gap = float(np.max(best_g[idx] - best_p[idx]))
            raise SolverError("dual search hit its iteration cap", best_gap=gap)
        it[idx] += 1
        xl, xh, fl, fh = x_lo[idx], x_hi[idx], F_lo[idx], F_hi[idx]
        x_new = xh - fh * (xh - xl) / (fh - fl)
        bad = ~np.isfinite(x_new) | (x_new <= xl) | (x_new >= xh)
        # every fourth step is a plain bisection to guarantee bracket shrinkage
        bad |= (it[idx] % 4) == 0
        x_new[bad] = 0.5 * (xl[bad] + xh[bad])
        Dn, pn, gn, a1, a2 = _evaluate(mu, R, center, delta, Wb[idx], np.exp(x_new))
        fn = np.linalg.norm(Dn, axis=1) - delta

        better_p = pn > best_p[idx]
        if better_p.any():
            tn = _feasible_scale(mu, R, center, Dn[better_p], delta)
            j = idx[better_p]
            best_p[j] = pn[better_p]
            best_D[j] = Dn[better_p] * tn[:, None]
        better_g = gn < best_g[idx]
        if better_g.any():
            j = idx[better_g]
            best_g[j] = gn[better_g]
            best_l1[j] = a1[better_g]
            best_l2[j] = a2[better_g]

        low = fn < 0
        jl, jh = idx[low], idx[~low]
        x_lo[jl], F_lo[jl] = x_new[low], fn[low]
        x_hi[jh], F_hi[jh] = x_new[~low], fn[~low]
        # Illinois: halve the stale endpoint's residual when a side repeats
        rep_l = low & (side[idx] == -1)
        rep_h = ~low & (side[idx] == 1)
        F_hi[idx[rep_l]] *= 0.5
        F_lo[idx[rep_h]] *= 0.5
        side[idx] = np.where(low, -1, 1)

        exact = fn == 0
        todo[idx] = ((best_g[idx] - best_p[idx]) > btol[idx]) & ~exact
        collapsed = (x_hi[idx] - x_lo[idx]) <= 1e-15 * np.maximum(1.0, np.abs(x_hi[idx]))
        if np.any(collapsed & todo[idx]):
            j = idx[collapsed & todo[idx]]
            gap = float(np.max(best_g[j] - best_p[j]))
            raise SolverError("dual bracket collapsed before the gap closed",
                              best_gap=gap)

    values[both] = best_p
    D[both] = best_D
    lam1[both] = best_l1
    lam2[both] = best_l2
    gaps[both] = np.maximum(best_g - best_p, 0.0)
    iters[both] = it + k + 2
    return values, D, lam1, lam2, gaps, iters


def max_linear_over_intersection(section: LocalizedSection, w,
                                 gap_tol: float | None = None) -> DualCertificate:
    """Maximize ``<w, D>`` over ``{D : |D| <= delta, center + D in E}``.

    Fast paths: the ball-only candidate ``delta * w/|w|`` and the ellipse-only
    support point are returned whenever feasible for the other constraint.
    Otherwise both multipliers are positive and are found by the nested dual
    search; the returned gap is certified (dual minus primal at a feasible
    point).
    """
    E = section.ellipse
    w = as_point(E, w)
    act = E.active
    tol = None if gap_tol is None else float(gap_tol)
    if tol is not None and tol <= 0:
        raise ValueError("gap_tol must be positive")
    vals, D, l1, l2, gaps, iters = _max_linear_rows(
        E.mu[act], E.radius, section.center[act], section.delta, w[act][None, :],
        gap_tol=tol)
    full = np.zeros(E.dim)
    full[act] = D[0]
    return DualCertificate(float(l1[0]), float(l2[0]), full, float(vals[0]),
                           float(gaps[0]), int(iters[0]))


def max_linear_batch(section: LocalizedSection, W, gap_tol=None) -> np.ndarray:
    """Optimal values of :func:`max_linear_over_intersection` for each row of ``W``."""
    E = section.ellipse
    W = np.asarray(W, dtype=float)
    if W.ndim != 2 or W.shape[1] != E.dim:
        raise ValueError(f"expected an (n, {E.dim}) array, got shape {W.shape}")
    act = E.active
    vals, *_ = _max_linear_rows(E.mu[act], E.radius, section.center[act],
                                section.delta, W[:, act], gap_tol=gap_tol)
    return vals


# -- Dykstra ------------------------------------------------------------------

def dykstra_project_intersection(section: LocalizedSection, y, iters: int = 20000,
                                 tol: float = 1e-12) -> np.ndarray:
    """Project ``y`` onto ``B(delta) ∩ (E - center)`` by Dykstra's algorithm.

    Alternates the radial ball projection and the shifted ellipse projection
    with the usual correction increments. Stops once successive iterates move
    less than ``tol`` (relative) and the ball residual is below ``tol * delta``.
    """
    E = section.ellipse
    y = as_point(E, y)
    delta = section.delta
    center = section.center

    def proj_ball(v):
        nv = np.linalg.norm(v)
        return v if nv <= delta else v * (delta / nv)

    def proj_shifted(v):
        return project_ellipse(E, center + v)[0] - center

    x = y.copy()
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    scale = max(1.0, float(np.linalg.norm(y)))
    for _ in range(iters):
        a = proj_ball(x + p)
        p = x + p - a
        x_new = proj_shifted(a + q)
        q = a + q - x_new
        moved = np.linalg.norm(x_new - x)
        x = x_new
        ball_res = max(0.0, float(np.linalg.norm(x)) - delta)
        if moved <= tol * scale and ball_res <= tol * delta:
            return x
    ball_res = max(0.0, float(np.linalg.norm(x)) - delta)
    raise SolverError(f"Dykstra did not converge in {iters} iterations",
                      residual=max(ball_res, float(moved)))


def intersection_residual(section: LocalizedSection, x) -> float:
    """Largest constraint violation of ``x`` for the section (0 if feasible)."""
    E = section.ellipse
    x = as_point(E, x)
    ball = max(0.0, float(np.linalg.norm(x)) - section.delta)
    en = elliptic_norm(E, section.center + x)
    if math.isinf(en):
        return math.inf
    theta = project_ellipse(E, section.center + x)[0]
    ell = float(np.linalg.norm(section.center + x - theta))
    return max(ball, ell)
