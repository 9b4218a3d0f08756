import numpy as np
import pytest

from lsviucb.agents import Hyperparameters, make_agent, step_episode
from lsviucb.diagnostics import (
    DecaySeries,
    GaussianFeatureSpec,
    ellipsoid_inequality_check,
    lambda_step_norm_series,
    min_eigenvalue_series,
    min_eigenvalue_trials,
    scaled_median_ratio,
    weight_step_norm_series,
)
from lsviucb.mdp import episode_rng
from lsviucb.oracle import optimal_values


def test_spec_rejects_bad_covariance():
    with pytest.raises(ValueError):
        GaussianFeatureSpec(2, np.array([[1.0, 0.5], [0.0, 1.0]]), 10)
    with pytest.raises(ValueError):
        GaussianFeatureSpec(2, np.diag([1.0, 0.0]), 10)
    with pytest.raises(ValueError):
        GaussianFeatureSpec(2, np.eye(3), 10)
    assert GaussianFeatureSpec(2, np.diag([2.0, 0.5]), 1).c_min == 0.5


def test_draws_follow_covariance():
    cov = np.array([[2.0, 0.6], [0.6, 1.0]])
    xs = GaussianFeatureSpec(2, cov, 200_000, seed=3).draw()
    assert np.abs(np.cov(xs.T) - cov).max() < 0.03


def test_decay_series_validation():
    with pytest.raises(ValueError):
        DecaySeries([1, 2], [1.0], "x")
    with pytest.raises(ValueError):
        DecaySeries([1], [np.nan], "x")


def test_lambda_series_degenerate_is_zero():
    spec = GaussianFeatureSpec.isotropic(4, 50, degenerate=True)
    assert not lambda_step_norm_series(spec).values.any()


def test_lambda_series_scalar_closed_form():
    spec = GaussianFeatureSpec.isotropic(1, 300, seed=5)
    xs = spec.draw()[:, 0]
    lam = 1.0 + np.concatenate([[0.0], np.cumsum(xs**2)])
    expected = xs**2 / (lam[:-1] * lam[1:])
    got = lambda_step_norm_series(spec).values
    assert np.abs(got - expected).max() <= 1e-12


def test_lambda_series_matches_dense_inverses():
    spec = GaussianFeatureSpec.isotropic(3, 40, seed=2)
    xs = spec.draw()
    A = np.eye(3)
    expected = []
    for x in xs:
        B = A + np.outer(x, x)
        expected.append(np.linalg.norm(np.linalg.inv(A) - np.linalg.inv(B), 2))
        A = B
    np.testing.assert_allclose(lambda_step_norm_series(spec).values, expected, rtol=1e-6, atol=1e-14)


def test_lambda_series_scaled_median_within_factor_20():
    series = lambda_step_norm_series(GaussianFeatureSpec.isotropic(8, 2000, seed=0))
    assert (series.values >= 0).all()
    ratio = scaled_median_ratio(series, (100, 400), (500, 2000), power=2)
    assert 1 / 20 <= ratio <= 20


def test_lambda_partial_sums_stable_across_seeds():
    n = 400
    lo = int(np.sqrt(n))
    sums = [lambda_step_norm_series(GaussianFeatureSpec.isotropic(4, n, seed=s)).window(lo, n).sum() for s in range(5)]
    assert max(sums) <= 2 * min(sums)


def test_min_eigenvalue_rank_deficient():
    spec = GaussianFeatureSpec.isotropic(5, 20, seed=1)
    series = min_eigenvalue_series(spec, [1, 3, 4])
    assert not series.values.any()


def test_min_eigenvalue_scalar_direct_sum():
    spec = GaussianFeatureSpec.isotropic(1, 64, seed=9)
    xs = spec.draw()[:, 0]
    series = min_eigenvalue_series(spec)
    assert series.indices.tolist() == [1, 2, 4, 8, 16, 32, 64]
    for k, v in zip(series.indices, series.values):
        assert v == pytest.approx(np.sum(xs[:k] ** 2), rel=1e-12)


def test_min_eigenvalue_checkpoint_range():
    with pytest.raises(ValueError):
        min_eigenvalue_series(GaussianFeatureSpec.isotropic(2, 10), [11])


def test_min_eigenvalue_growth_frequency():
    passed, threshold = min_eigenvalue_trials(GaussianFeatureSpec.isotropic(8, 512), 512, 100)
    assert threshold == pytest.approx(5.12)
    assert passed >= 95


def test_ellipsoid_inequality_random_trials():
    report = ellipsoid_inequality_check(10_000, 6, seed=0)
    assert report.passed and report.trials == 10_000


def test_ellipsoid_inequality_trivial_cases():
    a = np.array([[2.0, 0.3], [0.3, 1.0]])
    for x, b in ((np.array([1.0, -2.0]), a), (np.zeros(2), np.eye(2))):
        lhs = abs(x @ a @ x - x @ b @ x)
        rhs = (x @ x) * np.abs(np.linalg.eigvalsh(a - b)).max()
        assert lhs == 0.0 and rhs == 0.0
    with pytest.raises(ValueError):
        ellipsoid_inequality_check(0, 3)


def _weights_run(mdp, hp, h=0):
    agent = make_agent(mdp, hp)
    vt = optimal_values(mdp)
    snaps = []
    for k in range(1, hp.K + 1):
        step_episode(agent, mdp, vt, k, episode_rng(0, k), snapshots=snaps)
    return snaps


def test_weight_series_never_learning_is_zero(small_mdp):
    hp = Hyperparameters(K=30, beta=0.5, budget=0, variant="adaptive")
    series = weight_step_norm_series(_weights_run(small_mdp, hp), h=0)
    assert len(series.values) == 29
    assert not series.values.any()


def test_weight_series_single_learning_episode(small_mdp):
    hp = Hyperparameters(K=3, beta=0.5, rho=1.0, tau=0.0, budget=2, variant="adaptive")
    series = weight_step_norm_series(_weights_run(small_mdp, hp), h=0)
    assert np.count_nonzero(series.values) == 1


def test_weight_series_matches_snapshot_archive(tiny_mdp):
    snaps = _weights_run(tiny_mdp, Hyperparameters(K=500, beta=0.5))
    for h in range(tiny_mdp.horizon):
        series = weight_step_norm_series(snaps, h=h)
        direct = [np.sqrt(np.sum((snaps[k + 1].weights[h] - snaps[k].weights[h]) ** 2)) for k in range(499)]
        assert np.abs(series.values - direct).max() <= 1e-12


def test_weight_series_missing_recording():
    with pytest.raises(ValueError):
        weight_step_norm_series([])
