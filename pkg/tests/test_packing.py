import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ellipse_complexity.core import EllipseSpec, LocalizedSection, elliptic_norm
from ellipse_complexity.packing import (
    SamplingError,
    entropy_sandwich_report,
    greedy_packing,
    sample_from_section,
    verify_packing,
)
from ellipse_complexity.widths import critical_dimension_centered


def test_sampling_ball_inside_ellipse():
    s = sample_from_section(LocalizedSection(EllipseSpec.ball(3), np.zeros(3), 0.5), 2000, 0)
    assert s.acceptance_rate == 1.0 and s.n_accepted == 2000


def test_sampled_points_are_feasible():
    sec = LocalizedSection(EllipseSpec((1.0, 0.25, 0.1)), (0.5, 0.1, 0.0), 0.6)
    s = sample_from_section(sec, 5000, 1)
    assert 0 < s.acceptance_rate < 1
    for D in s.points:
        assert np.linalg.norm(D) <= sec.delta
        assert elliptic_norm(sec.ellipse, sec.center + D) <= 1.0


def test_sampling_acceptance_matches_area_ratio():
    mu, c, delta = np.array([1.0, 0.25]), np.array([0.9, 0.0]), 0.5
    h = 1e-3
    g = np.arange(-delta + h / 2, delta, h)
    X, Y = np.meshgrid(g, g)
    disc = X**2 + Y**2 <= delta**2
    ell = (c[0] + X) ** 2 / mu[0] + (c[1] + Y) ** 2 / mu[1] <= 1
    ratio = (disc & ell).sum() / disc.sum()
    n = 40000
    s = sample_from_section(LocalizedSection(EllipseSpec(mu), c, delta), n, 2)
    assert s.acceptance_rate < 1
    assert abs(s.acceptance_rate - ratio) <= 4 * math.sqrt(ratio * (1 - ratio) / n)


def test_sampling_guards():
    with pytest.raises(SamplingError, match="d <= 12"):
        sample_from_section(LocalizedSection(EllipseSpec.ball(13), np.zeros(13), 0.5), 10, 0)
    mu = np.r_[1.0, np.full(11, 1e-6)]
    with pytest.raises(SamplingError, match="acceptance"):
        sample_from_section(LocalizedSection(EllipseSpec(mu), np.zeros(12), 1.0), 1000, 0)


def test_greedy_trivial_cases():
    pts = np.random.default_rng(0).uniform(-0.2, 0.2, (50, 2))
    assert greedy_packing(pts, 1.0).count == 1
    eps = 0.1
    assert greedy_packing([[0.0, 0.0], [3 * eps, 0.0]], eps).count == 2
    with pytest.raises(ValueError):
        greedy_packing(np.empty((0, 2)), 0.1)
    with pytest.raises(ValueError):
        greedy_packing(pts, 0.0)


def _reference_greedy(points, eps):
    """Sequential scan in lexicographic order; kept iff farther than eps from all kept."""
    order = sorted(range(len(points)), key=lambda i: tuple(points[i]))
    kept = np.empty((0, points.shape[1]))
    for i in order:
        p = points[i]
        if kept.shape[0] == 0 or np.min(np.sum((kept - p) ** 2, axis=1)) > eps**2:
            kept = np.vstack([kept, p])
    return kept.shape[0]


def _disc_grid(radius, h):
    g = np.arange(-radius, radius + h / 2, h)
    X, Y = np.meshgrid(g, g)
    P = np.column_stack([X.ravel(), Y.ravel()])
    return P[np.sum(P**2, axis=1) <= radius**2]


def test_greedy_against_fine_grid_oracle():
    radius, eps = 0.3, 0.15
    coarse = greedy_packing(_disc_grid(radius, 0.01), eps).count
    fine = _reference_greedy(_disc_grid(radius, 1e-3), eps)
    assert abs(coarse - fine) <= 0.2 * fine


def test_greedy_matches_reference_scan():
    pts = np.random.default_rng(3).uniform(-1, 1, (400, 3))
    for eps in (0.1, 0.3, 0.7):
        rep = greedy_packing(pts, eps)
        assert rep.count == _reference_greedy(pts, eps)
        assert verify_packing(rep.packing, eps)


@settings(max_examples=80)
@given(st.lists(st.floats(-5, 5), min_size=1, max_size=40), st.floats(0.01, 3), st.floats(0.01, 3))
def test_greedy_monotone_in_epsilon_1d(xs, a, b):
    # in one dimension the left-to-right greedy packing is optimal, so its count
    # inherits the monotonicity of the packing number
    lo, hi = sorted((a, b))
    pts = np.array(xs)[:, None]
    assert greedy_packing(pts, hi).count <= greedy_packing(pts, lo).count


@settings(max_examples=80)
@given(st.lists(st.floats(-5, 5), min_size=1, max_size=30),
       st.lists(st.floats(-5, 5), max_size=10), st.floats(0.01, 3))
def test_greedy_monotone_in_candidates_1d(xs, extra, eps):
    base = np.array(xs)[:, None]
    sup = np.array(xs + extra)[:, None]
    assert greedy_packing(sup, eps).count >= greedy_packing(base, eps).count


def test_entropy_report_ball():
    rep = entropy_sandwich_report(LocalizedSection(EllipseSpec.ball(4), np.zeros(4), 0.3),
                                  n=5000, seed=0)
    assert rep.epsilon == pytest.approx(0.15)
    assert rep.k == rep.k_lower == rep.k_upper == 4
    assert rep.log_count == pytest.approx(math.log(rep.count))
    assert rep.log_count > 0 and rep.ratio_lower == pytest.approx(4 / rep.log_count)


def test_entropy_report_polynomial_logs_ratio():
    E = EllipseSpec.polynomial(8, 1.0)
    rep = entropy_sandwich_report(LocalizedSection(E, np.zeros(8), 0.4), n=20000, seed=1)
    assert rep.k == critical_dimension_centered(E, 0.4).k
    print("k / log M(delta/2) on the 8-dim polynomial ellipse:", rep.ratio_upper)
    assert rep.ratio_upper is not None and rep.ratio_upper > 0


def test_entropy_report_large_epsilon():
    rep = entropy_sandwich_report(LocalizedSection(EllipseSpec.ball(3), np.zeros(3), 0.3),
                                  epsilon=0.6, n=2000, seed=0)
    assert rep.count == 1 and rep.log_count == 0.0
    assert rep.ratio_lower is None
    assert rep.to_dict()["count"] == 1
