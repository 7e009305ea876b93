import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ellipse_complexity.core import (
    EllipseError,
    EllipseSpec,
    LocalizedSection,
    contains,
    elliptic_norm,
    rescale_problem,
    unscale_radius,
)


@pytest.mark.parametrize("mu, v, expected", [
    ((1, 1), (0, 0), 0.0),
    ((1, 0.25), (0, 0.5), 1.0),
    ((1, 0), (0, 0.1), math.inf),
    ((1, 0), (0.3, 0), 0.3),
])
def test_elliptic_norm_examples(mu, v, expected):
    assert elliptic_norm(EllipseSpec(mu), v) == pytest.approx(expected)


@pytest.mark.parametrize("mu, v, tol, expected", [
    ((1, 1), (0.6, 0.8), 0.0, True),
    ((1, 1), (0.6, 0.81), 0.0, False),
    ((1, 0), (0.5, 0), 0.0, True),
    ((1, 0), (0.0, 1e-12), 0.5, False),
])
def test_contains_examples(mu, v, tol, expected):
    assert contains(EllipseSpec(mu), v, tol) is expected


def test_contains_rejects_negative_tol():
    with pytest.raises(EllipseError):
        contains(EllipseSpec((1, 1)), (0, 0), -1e-3)


def test_dimension_mismatch():
    with pytest.raises(EllipseError, match="dimension"):
        elliptic_norm(EllipseSpec((1, 1)), (1, 2, 3))


@pytest.mark.parametrize("bad", [
    [],
    [0.5, 1.0],
    [1.0, -0.1],
    [0.0, 0.0],
    [1.0, math.nan],
])
def test_invalid_eigenvalues(bad):
    with pytest.raises(EllipseError):
        EllipseSpec(bad)


@pytest.mark.parametrize("radius", [0.0, -1.0, math.inf])
def test_invalid_radius(radius):
    with pytest.raises(EllipseError):
        EllipseSpec((1.0,), radius)


def test_eigenvalues_are_read_only():
    E = EllipseSpec([1.0, 0.5])
    with pytest.raises(ValueError):
        E.eigenvalues[0] = 3.0


@pytest.mark.parametrize("R, center, sigma, expected", [
    (2.0, (1, 0), 0.1, ((0.5, 0), 0.05)),
    (1.0, (0.3, 0.1), 0.2, ((0.3, 0.1), 0.2)),
    (0.5, (0.25, 0), 0.02, ((0.5, 0), 0.04)),
])
def test_rescale_examples(R, center, sigma, expected):
    E1, c, s = rescale_problem(EllipseSpec((1, 0.5), R), center, sigma)
    assert E1.radius == 1.0
    np.testing.assert_allclose(c, expected[0])
    assert s == pytest.approx(expected[1])


@given(st.floats(0.01, 100), st.floats(1e-3, 10))
def test_rescale_roundtrip(R, length):
    E = EllipseSpec((1, 0.25), R)
    E1, _, _ = rescale_problem(E, (0, 0), 1.0)
    assert unscale_radius(length / R, E) == pytest.approx(length, rel=1e-12)
    np.testing.assert_allclose(E.unit_eigenvalues(), R**2 * E1.eigenvalues, rtol=1e-12)


def _moderate(hi):
    # keep squares clear of the subnormal range
    return st.one_of(st.just(0.0), st.floats(1e-6, hi), st.floats(-hi, -1e-6))


@settings(max_examples=50)
@given(st.lists(_moderate(10), min_size=3, max_size=3), _moderate(5))
def test_elliptic_norm_homogeneous(v, t):
    E = EllipseSpec((2.0, 1.0, 0.1))
    assert elliptic_norm(E, t * np.array(v)) == pytest.approx(
        abs(t) * elliptic_norm(E, v), rel=1e-12, abs=1e-300)


@given(st.floats(0, 1), st.floats(0, 1))
def test_contains_monotone_in_tol(t1, t2):
    E = EllipseSpec((1.0, 0.3))
    v = (0.7, 0.4)
    lo, hi = sorted((t1, t2))
    assert contains(E, v, lo) <= contains(E, v, hi)


def test_families_and_json(tmp_path):
    P = EllipseSpec.polynomial(5, 1.0, c=2.0)
    np.testing.assert_allclose(P.mu, 2.0 / np.arange(1, 6) ** 2)
    X = EllipseSpec.exponential(4, 1.0, c1=1.0, c2=0.5)
    np.testing.assert_allclose(X.mu, np.exp(-0.5 * np.arange(1, 5)))
    path = tmp_path / "e.json"
    path.write_text(json.dumps({"family": "polynomial", "alpha": 1, "d": 5, "c": 2,
                                "radius": 3}))
    Q = EllipseSpec.from_json(path)
    np.testing.assert_allclose(Q.mu, P.mu)
    assert Q.radius == 3
    R = EllipseSpec.from_dict(P.to_dict())
    np.testing.assert_array_equal(R.mu, P.mu)
    with pytest.raises(EllipseError, match="missing"):
        EllipseSpec.from_dict({"family": "polynomial", "d": 3})


def test_section_validation():
    E = EllipseSpec((1.0, 0.25))
    LocalizedSection(E, (1.0, 0.0), 0.1)              # boundary center is fine
    with pytest.raises(EllipseError, match="outside"):
        LocalizedSection(E, (1.1, 0.0), 0.1)
    with pytest.raises(EllipseError):
        LocalizedSection(E, (0, 0), 0.0)
    for eta in (0.0, 0.1, 0.5):
        with pytest.raises(EllipseError, match="eta"):
            LocalizedSection(E, (0, 0), 0.1, eta)
