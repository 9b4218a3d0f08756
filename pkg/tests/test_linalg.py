import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lsviucb.errors import NumericalError
from lsviucb.linalg import (
    GramInverse,
    ellipsoid_bonus,
    ellipsoid_bonus_batch,
    frobenius_distance,
    operator_norm_estimate,
    rank_one_update,
)


def rel_fro(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


def test_identity_initialization():
    g = GramInverse.identity(3, ridge=4.0)
    np.testing.assert_array_equal(g.inv, np.eye(3) / 4.0)
    assert g.rank_one_count == 0


def test_zero_update_is_noop():
    g = rank_one_update(GramInverse.identity(2), np.zeros(2))
    np.testing.assert_array_equal(g.inv, np.eye(2))
    assert g.rank_one_count == 1


def test_unit_update_analytic():
    g = rank_one_update(GramInverse.identity(2), np.array([1.0, 0.0]))
    np.testing.assert_allclose(g.inv, np.diag([0.5, 1.0]), atol=1e-15)


def test_fifty_gaussian_updates_match_direct_inverse(rng):
    g = GramInverse.identity(4)
    A = np.eye(4)
    for _ in range(50):
        u = rng.standard_normal(4)
        g = rank_one_update(g, u)
        A += np.outer(u, u)
    assert rel_fro(g.inv, np.linalg.inv(A)) <= 1e-9


def test_update_returns_new_instance_and_is_immutable():
    g0 = GramInverse.identity(2)
    g1 = rank_one_update(g0, np.ones(2))
    np.testing.assert_array_equal(g0.inv, np.eye(2))
    with pytest.raises(ValueError):
        g1.inv[0, 0] = 5.0


@pytest.mark.parametrize("bad", [np.array([np.nan, 0.0]), np.array([np.inf, 1.0])])
def test_rejects_non_finite(bad):
    with pytest.raises(ValueError):
        rank_one_update(GramInverse.identity(2), bad)


def test_rejects_wrong_length():
    with pytest.raises(ValueError):
        rank_one_update(GramInverse.identity(2), np.ones(3))


@pytest.mark.parametrize("lam", [0.1, 1.0, 10.0])
@pytest.mark.parametrize("d", [1, 3, 16])
def test_chain_consistency_and_denominator(lam, d):
    rng = np.random.default_rng(d * 100 + int(lam * 10))
    g = GramInverse.identity(d, lam)
    A = lam * np.eye(d)
    for _ in range(200):
        u = rng.uniform(-1, 1, d)
        assert 1.0 + u @ g.inv @ u >= 1.0
        g = rank_one_update(g, u)
        A += np.outer(u, u)
    assert rel_fro(g.inv, np.linalg.inv(A)) <= 1e-8
    assert np.linalg.norm(g.inv - g.inv.T) <= 1e-10 * np.linalg.norm(g.inv)


def test_refresh_interval_reinverts():
    rng = np.random.default_rng(1)
    g = GramInverse.identity(3, 1.0, refresh_interval=5)
    A = np.eye(3)
    for _ in range(12):
        u = rng.standard_normal(3)
        g = rank_one_update(g, u)
        A += np.outer(u, u)
    np.testing.assert_allclose(g.gram, A)
    assert rel_fro(g.inv, np.linalg.inv(A)) <= 1e-12


def test_frobenius_distance_cases(rng):
    a = rng.standard_normal((3, 3))
    assert frobenius_distance(a, a) == 0.0
    b = np.eye(2)
    b[0, 0] += 0.37
    assert frobenius_distance(np.eye(2), b) == pytest.approx(0.37, abs=1e-15)


def test_frobenius_distance_brute_force(rng):
    a, b = rng.standard_normal((2, 8, 8))
    total = 0.0
    for i in range(8):
        for j in range(8):
            total += (a[i, j] - b[i, j]) ** 2
    assert abs(frobenius_distance(a, b) - total**0.5) <= 1e-12
    assert frobenius_distance(a, b) == frobenius_distance(b, a)


def test_frobenius_distance_shape_mismatch():
    with pytest.raises(ValueError):
        frobenius_distance(np.eye(2), np.eye(3))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_frobenius_triangle_inequality(seed):
    a, b, c = np.random.default_rng(seed).standard_normal((3, 5, 5))
    assert frobenius_distance(a, c) <= frobenius_distance(a, b) + frobenius_distance(b, c) + 1e-12


def test_ellipsoid_bonus_cases():
    assert ellipsoid_bonus(np.zeros(2), GramInverse.identity(2)) == 0.0
    assert ellipsoid_bonus(np.array([1.0, 0.0]), GramInverse.identity(2, 2.0)) == pytest.approx(np.sqrt(0.5), abs=1e-15)


def test_ellipsoid_bonus_against_direct_inverse(rng):
    g = GramInverse.identity(5)
    A = np.eye(5)
    for _ in range(20):
        u = rng.standard_normal(5)
        g = rank_one_update(g, u)
        A += np.outer(u, u)
    for _ in range(20):
        x = rng.standard_normal(5)
        direct = np.sqrt(x @ np.linalg.solve(A, x))
        assert abs(ellipsoid_bonus(x, g) - direct) <= 1e-10
        b = ellipsoid_bonus(x, g)
        assert abs(b**2 - x @ g.inv @ x) <= 1e-12 * (1 + x @ x)


def test_ellipsoid_bonus_batch_shapes(rng):
    g = GramInverse.identity(3)
    x = rng.standard_normal((4, 2, 3))
    out = ellipsoid_bonus_batch(x, g)
    assert out.shape == (4, 2)
    np.testing.assert_allclose(out, np.linalg.norm(x, axis=-1))


def test_ellipsoid_bonus_errors():
    with pytest.raises(ValueError):
        ellipsoid_bonus(np.ones(3), GramInverse.identity(2))
    with pytest.raises(NumericalError):
        ellipsoid_bonus(np.array([1.0, 0.0]), -np.eye(2))


def test_operator_norm_trivial():
    assert operator_norm_estimate(np.diag([3.0, 1.0])) == pytest.approx(3.0, rel=1e-12)
    assert operator_norm_estimate(np.zeros((4, 4))) == 0.0


def test_operator_norm_against_eigendecomposition():
    rng = np.random.default_rng(99)
    checked = 0
    while checked < 20:
        m = rng.standard_normal((6, 6))
        a = (m + m.T) / 2
        eig = np.sort(np.abs(np.linalg.eigvalsh(a)))[::-1]
        if eig[1] / eig[0] > 0.9:  # not well separated
            continue
        assert abs(operator_norm_estimate(a) - eig[0]) <= 1e-6 * eig[0]
        checked += 1


def test_operator_norm_rejects_non_square():
    with pytest.raises(ValueError):
        operator_norm_estimate(np.ones((2, 3)))
