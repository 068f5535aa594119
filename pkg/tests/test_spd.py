import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conal.errors import DimensionError, DomainError
from conal.spd import (GeodesicSegment, ai_distance, ai_inner, congruence, geodesic_point,
                       geodesic_velocity, random_invertible, random_spd, random_sym,
                       relative_eigenvalues)
from conal.symmat import sqrtm

E = np.e


def test_congruence_examples(rng):
    S = random_spd(3, rng)
    np.testing.assert_allclose(congruence(np.eye(3), S), S, rtol=1e-15)
    np.testing.assert_array_equal(congruence(np.diag([2.0, 1.0]), np.eye(2)), np.diag([4.0, 1.0]))


def test_congruence_singular():
    with pytest.raises(DomainError):
        congruence(np.array([[1.0, 1.0], [1.0, 1.0]]), np.eye(2))


def test_distance_examples(rng):
    S = random_spd(4, rng)
    assert ai_distance(S, S) <= 1e-12
    assert ai_distance(np.eye(2), np.diag([E**2, E**-2])) == pytest.approx(np.sqrt(8.0), abs=1e-12)


def test_distance_dimension_mismatch():
    with pytest.raises(DimensionError):
        ai_distance(np.eye(2), np.eye(3))


def test_relative_eigenvalues_match_generalized_problem(rng):
    import scipy.linalg
    A, B = random_spd(4, rng), random_spd(4, rng)
    ref = scipy.linalg.eigh(B, A, eigvals_only=True)
    np.testing.assert_allclose(relative_eigenvalues(A, B), ref, rtol=1e-10)


def test_distance_symmetric_and_triangle(rng):
    for _ in range(100):
        a, b, c = (random_spd(3, rng) for _ in range(3))
        assert abs(ai_distance(a, b) - ai_distance(b, a)) <= 1e-12 * max(1, ai_distance(a, b))
        assert ai_distance(a, c) <= ai_distance(a, b) + ai_distance(b, c) + 1e-9


def test_invariances(rng):
    for n in (2, 5):
        for _ in range(50):
            a, b = random_spd(n, rng), random_spd(n, rng)
            A = random_invertible(n, rng)
            d = ai_distance(a, b)
            assert abs(ai_distance(congruence(A, a), congruence(A, b)) - d) <= 1e-10 * d
            assert abs(ai_distance(np.linalg.inv(a), np.linalg.inv(b)) - d) <= 1e-10 * d


def test_geodesic_endpoints(rng):
    a, b = random_spd(3, rng), random_spd(3, rng)
    seg = GeodesicSegment.between(a, b)
    np.testing.assert_allclose(geodesic_point(seg, 0.0), a, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(geodesic_point(seg, 1.0), b, rtol=1e-10, atol=1e-10)


def test_geodesic_commuting_midpoint():
    seg = GeodesicSegment.between(np.eye(2), np.diag([E**2, E**4]))
    np.testing.assert_allclose(geodesic_point(seg, 0.5), np.diag([E, E**2]), rtol=1e-13)


def test_geodesic_midpoint_is_equidistant(rng):
    a, b = random_spd(4, rng), random_spd(4, rng)
    m = geodesic_point(GeodesicSegment.between(a, b), 0.5)
    d = ai_distance(a, b)
    assert ai_distance(a, m) == pytest.approx(d / 2, rel=1e-10)
    assert ai_distance(m, b) == pytest.approx(d / 2, rel=1e-10)


def test_velocity_at_start(rng):
    a, b = random_spd(3, rng), random_spd(3, rng)
    seg = GeodesicSegment.between(a, b)
    R = sqrtm(a)
    np.testing.assert_allclose(geodesic_velocity(seg, 0.0), R @ seg.log_velocity @ R, atol=1e-12)


def test_velocity_identity_start_commutes(rng):
    seg = GeodesicSegment.between(np.eye(3), random_spd(3, rng))
    for t in (0.2, 0.7):
        V, P = geodesic_velocity(seg, t), geodesic_point(seg, t)
        np.testing.assert_allclose(V @ P, P @ V, atol=1e-10)
        np.testing.assert_allclose(V, V.T, atol=0)


def test_velocity_finite_difference(rng):
    seg = GeodesicSegment.between(random_spd(3, rng), random_spd(3, rng))
    h = 1e-5
    fd = (geodesic_point(seg, 0.3 + h) - geodesic_point(seg, 0.3 - h)) / (2 * h)
    assert np.max(np.abs(fd - geodesic_velocity(seg, 0.3))) <= 1e-6 * max(1, np.abs(fd).max())


def test_speed_is_constant(rng):
    a, b = random_spd(4, rng), random_spd(4, rng)
    seg = GeodesicSegment.between(a, b)
    speeds = [ai_inner(geodesic_point(seg, t), geodesic_velocity(seg, t),
                       geodesic_velocity(seg, t)) for t in np.linspace(0, 1, 11)]
    assert np.ptp(speeds) <= 1e-8 * max(1.0, speeds[0])
    assert np.sqrt(speeds[0]) == pytest.approx(ai_distance(a, b), rel=1e-10)


def test_shoot_matches_between(rng):
    a, b = random_spd(3, rng), random_spd(3, rng)
    seg = GeodesicSegment.between(a, b)
    shot = GeodesicSegment.shoot(a, geodesic_velocity(seg, 0.0))
    np.testing.assert_allclose(shot.end, b, rtol=1e-9, atol=1e-9)


def test_random_spd_spectrum(rng):
    w = np.linalg.eigvalsh(random_spd(5, rng))
    assert np.all(w >= np.exp(-2) * (1 - 1e-12)) and np.all(w <= np.exp(2) * (1 + 1e-12))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 5))
def test_distance_nonnegative_and_scaling(seed, n):
    rng = np.random.default_rng(seed)
    a, b = random_spd(n, rng), random_spd(n, rng)
    d = ai_distance(a, b)
    assert d >= 0
    # scalar multiples of both points: congruence by sqrt(c) I
    assert ai_distance(3.0 * a, 3.0 * b) == pytest.approx(d, rel=1e-9, abs=1e-12)
    # d(I, c I) = sqrt(n) |log c|
    assert ai_distance(np.eye(n), 2.0 * np.eye(n)) == pytest.approx(np.sqrt(n) * np.log(2.0))
    assert random_sym(n, rng).shape == (n, n)
