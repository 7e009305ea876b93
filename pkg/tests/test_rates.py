import math

import numpy as np
import pytest

import oracles
from ellipse_complexity import seeding
from ellipse_complexity.core import EllipseSpec
from ellipse_complexity.optimize import project_ellipse_batch
from ellipse_complexity.rates import (
    FixedPointError,
    check_rate_conditions,
    critical_functional,
    minimax_bounds,
    minimize_critical_functional,
    predicted_rate,
    solve_fixed_point,
)
from ellipse_complexity.widths import critical_dimension_centered

POLY500 = EllipseSpec.polynomial(500, 1.0)
Z500 = np.zeros(500)


def test_fixed_point_unit_ball():
    fp = solve_fixed_point(EllipseSpec.ball(100), np.zeros(100), 0.01, c_lower=1.0)
    assert fp.delta_n == pytest.approx(0.1, rel=1e-12)
    assert fp.k_at_delta == 100 and not fp.at_jump


def _brute_fixed_point(mu, sigma, c):
    """Scan k: delta = c sigma sqrt(k) is the root iff k(delta) == k."""
    d = len(mu)
    roots = [c * sigma * math.sqrt(k) for k in range(1, d + 1)
             if oracles.scan_centered_k(mu, c * sigma * math.sqrt(k)) == k]
    return roots


@pytest.mark.parametrize("sigma", [0.003, 0.01, 0.03, 0.1])
def test_fixed_point_matches_scan(sigma):
    E = EllipseSpec.polynomial(300, 1.0)
    fp = solve_fixed_point(E, np.zeros(300), sigma, c_lower=1.0)
    roots = _brute_fixed_point(E.mu, sigma, 1.0)
    if fp.at_jump:
        lo, hi = fp.bracket
        assert hi - lo <= 1e-9
        k_lo = critical_dimension_centered(E, lo).k
        k_hi = critical_dimension_centered(E, hi).k
        assert k_hi < k_lo
        assert lo - sigma * math.sqrt(k_lo) < 0 <= hi - sigma * math.sqrt(k_hi)
        assert not roots
    else:
        assert roots == [pytest.approx(fp.delta_n, rel=1e-12)]
        assert abs(fp.residual) <= 1e-9 * fp.delta_n


def test_fixed_point_poly_sigma_001():
    fp = solve_fixed_point(POLY500, Z500, 0.01, c_lower=1.0)
    assert abs(fp.residual) <= 1e-9 * fp.delta_n or fp.at_jump
    # k ~ 1 / (0.9 delta) gives delta ~ (sigma^2 / 0.9)^(1/3)
    assert 0.5 < fp.delta_n / (0.01**2 / 0.9) ** (1 / 3) < 2


def test_fixed_point_nondecreasing_in_sigma():
    vals = [solve_fixed_point(POLY500, Z500, s, 1.0).delta_n for s in np.geomspace(1e-4, 0.3, 30)]
    assert all(a <= b for a, b in zip(vals, vals[1:]))


def test_fixed_point_errors():
    with pytest.raises(FixedPointError, match="too large"):
        solve_fixed_point(EllipseSpec.ball(100), np.zeros(100), 1.0, c_lower=1.0)
    e1 = np.zeros(500)
    e1[0] = 1.0
    with pytest.raises(FixedPointError, match="empty"):
        solve_fixed_point(POLY500, e1, 0.01)


def test_fixed_point_spiked_interior():
    theta = np.zeros(500)
    theta[0] = 0.95
    fp = solve_fixed_point(POLY500, theta, 1e-4, c_lower=1.0)
    centered = solve_fixed_point(POLY500, Z500, 1e-4, c_lower=1.0)
    assert fp.delta_n < centered.delta_n


# -- critical functional ---------------------------------------------------------

def test_functional_at_zero():
    assert critical_functional(POLY500, Z500, 0.1, 0.0).value == 0.0


def test_functional_unit_ball_closed_form():
    d, sigma = 20, 0.05
    E = EllipseSpec.ball(d)
    chi = oracles.chi_mean(d)
    for delta in (0.1, 0.3):
        f = critical_functional(E, np.zeros(d), sigma, delta, mc_samples=2000, seed=1)
        assert abs(f.value - (delta**2 / 2 - sigma * delta * chi)) <= 3 * f.stderr + 1e-12


def test_functional_envelopes_sandwich():
    grid = np.geomspace(0.02, 0.5, 8)
    for delta in grid:
        f = critical_functional(POLY500, Z500, 0.05, delta, mc_samples=500, seed=2)
        assert f.lower_envelope <= f.value + 3 * f.stderr
        assert f.value - 3 * f.stderr <= f.upper_envelope


def test_minimizer_unit_ball():
    d, sigma = 20, 0.02
    E = EllipseSpec.ball(d)
    grid = np.linspace(0.01, 0.2, 39)
    res = minimize_critical_functional(E, np.zeros(d), sigma, grid, mc_samples=1000, seed=4)
    target = sigma * oracles.chi_mean(d)
    assert abs(res.delta_0 - target) <= grid[1] - grid[0]
    assert res.level_set[0] <= res.delta_0 <= res.level_set[1]


def test_minimizer_interval_and_conditions():
    sigma = 0.05
    fp = solve_fixed_point(POLY500, Z500, sigma, c_lower=1.0)
    grid = np.geomspace(fp.delta_n / 8, min(8 * fp.delta_n, 1.0), 20)
    res = minimize_critical_functional(POLY500, Z500, sigma, grid, mc_samples=400, seed=5)
    assert res.level_set[0] <= res.delta_0 <= res.level_set[1]
    rep = check_rate_conditions(POLY500, Z500, sigma, grid, c1=0.25, c2=4.0,
                                mc_samples=400, seed=5, c_lower=1.0)
    assert rep.ok, rep.to_dict()


def test_minimizer_rejects_coarse_grid():
    with pytest.raises(ValueError):
        minimize_critical_functional(POLY500, Z500, 0.05, [0.1], mc_samples=10)


# -- predictions and minimax --------------------------------------------------------

@pytest.mark.parametrize("family, location, kw, exponent, log_power", [
    ("polynomial", "centered", {"alpha": 1.0}, 2 / 3, 0.0),
    ("polynomial", "spiked", {"alpha": 1.0}, 4 / 5, 0.0),
    ("polynomial", "centered", {"alpha": 2.0}, 4 / 5, 0.0),
    ("exponential", "centered", {"gamma": 1.0}, 1.0, 1.0),
    ("exponential", "spiked", {"gamma": 2.0}, 1.0, 0.5),
])
def test_predicted_rate(family, location, kw, exponent, log_power):
    sigma = 0.01
    r = predicted_rate(family, location, sigma, **kw)
    assert r.exponent == pytest.approx(exponent)
    assert r.log_power == pytest.approx(log_power)
    expected = (sigma**2) ** exponent * math.log(1 / sigma) ** log_power
    assert r.proxy == pytest.approx(expected)
    assert r.delta_proxy == pytest.approx(math.sqrt(expected))
    assert "constants" in r.constant_note


@pytest.mark.parametrize("args, kw", [
    (("polynomial", "centered", 0.1), {"alpha": 0.5}),
    (("exponential", "centered", 0.1), {"gamma": 0.4}),
    (("exponential", "centered", 2.0), {"gamma": 1.0}),
    (("polynomial", "nowhere", 0.1), {"alpha": 1.0}),
    (("cubic", "centered", 0.1), {}),
])
def test_predicted_rate_errors(args, kw):
    with pytest.raises(ValueError):
        predicted_rate(*args, **kw)


def test_minimax_unit_ball():
    mb = minimax_bounds(EllipseSpec.ball(100), 0.01, c_lower=1.0)
    assert mb.k_lower == mb.k_upper == 100
    assert mb.lower == pytest.approx(0.01**2 * 100)
    assert mb.upper == pytest.approx(0.01**2 * 100)
    assert mb.regular


@pytest.mark.parametrize("sigma", [1e-3, 1e-2, 5e-2])
def test_minimax_polynomial_ratio(sigma):
    mb = minimax_bounds(POLY500, sigma, c_lower=1.0)
    assert mb.k_lower == oracles.scan_centered_k(POLY500.mu, mb.delta_n)
    assert mb.k_upper == oracles.scan_centered_k(POLY500.mu, mb.delta_n / 2)
    assert mb.k_lower <= mb.k_upper <= (2 + 1) * mb.k_lower


def test_minimax_lower_decreases_with_sigma():
    vals = [minimax_bounds(POLY500, s, 1.0).lower for s in (0.1, 0.03, 0.01, 0.003, 0.001)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_error_sandwich_median_tracks_delta_n():
    """Median LSE error divided by delta_n stays in a narrow band across sigma."""
    ratios = []
    for i, sigma in enumerate(np.geomspace(3e-3, 0.1, 6)):
        fp = solve_fixed_point(POLY500, Z500, sigma, c_lower=1.0)
        noise = np.stack([seeding.normal_vector(500, 77, i, r) for r in range(200)])
        theta, _ = project_ellipse_batch(POLY500, sigma * noise)
        ratios.append(np.median(np.linalg.norm(theta, axis=1)) / fp.delta_n)
    print("median error / delta_n:", np.round(ratios, 3))
    assert max(ratios) / min(ratios) < 2.0
