import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lsviucb.errors import ValidationError
from lsviucb.mdp import (
    MAGIC,
    LinearMDP,
    SyntheticSpec,
    deserialize,
    episode_rng,
    generate_synthetic,
    reward,
    serialize,
    transition_sample,
    validate,
)

from conftest import point_mass_mdp


def test_large_instance_shapes():
    mdp = generate_synthetic(SyntheticSpec(500, 15, 30, 50, seed=1))
    assert mdp.features.shape == (500, 15, 30)
    assert mdp.reward_weights.shape == (50, 30)
    assert mdp.measures.shape == (50, 30, 500)
    assert mdp.features.min() >= 0
    assert np.abs(mdp.features.sum(-1) - 1).max() <= 1e-12


def test_one_dimensional_instance():
    mdp = generate_synthetic(SyntheticSpec(1, 1, 1, 1, seed=5))
    assert mdp.features[0, 0, 0] == 1.0
    assert mdp.reward_weights[0, 0] == 1.0
    assert mdp.measures[0, 0, 0] == 1.0
    assert reward(mdp, 0, 0, 0) == 1.0
    assert transition_sample(mdp, 0, 0, 0, episode_rng(0, 1)) == 0


def test_seeded_determinism():
    spec = SyntheticSpec(3, 2, 2, 2, seed=42)
    a, b = generate_synthetic(spec), generate_synthetic(spec)
    assert serialize(a) == serialize(b)
    assert a == b
    assert generate_synthetic(SyntheticSpec(3, 2, 2, 2, seed=43)) != a


@pytest.mark.parametrize("bad", [dict(n_states=0), dict(dim=0), dict(horizon=0), dict(seed=-1)])
def test_spec_rejects_bad_sizes(bad):
    kw = dict(n_states=2, n_actions=2, dim=2, horizon=2, seed=0)
    kw.update(bad)
    with pytest.raises(ValueError):
        SyntheticSpec(**kw)


@settings(max_examples=25, deadline=None)
@given(
    st.integers(1, 12), st.integers(1, 4), st.integers(1, 6), st.integers(1, 4), st.integers(0, 2**63)
)
def test_simplex_generation_invariants(S, A, d, H, seed):
    mdp = generate_synthetic(SyntheticSpec(S, A, d, H, seed))
    for table in (mdp.features, mdp.reward_weights, mdp.measures):
        assert table.min() >= 0
        assert np.abs(table.sum(-1) - 1).max() <= 1e-12
    R = mdp.rewards
    assert R.min() >= 0 and R.max() <= 1
    assert validate(mdp) == []


def test_large_instance_transitions_are_distributions():
    mdp = generate_synthetic(SyntheticSpec(500, 15, 30, 50, seed=2))
    for h in range(mdp.horizon):
        P = mdp.features @ mdp.measures[h]
        assert np.abs(P.sum(-1) - 1).max() <= 1e-9
        assert P.min() >= -1e-12


def test_point_mass_transitions():
    mdp = point_mass_mdp(target=0)
    rng = episode_rng(3, 1)
    for s in range(mdp.n_states):
        for a in range(mdp.n_actions):
            assert transition_sample(mdp, s, a, 1, rng) == 0


def test_transition_frequencies_match(tiny_mdp):
    mdp = generate_synthetic(SyntheticSpec(6, 2, 3, 2, seed=11))
    rng = np.random.default_rng(0)
    n = 100_000
    counts = np.bincount([transition_sample(mdp, 2, 1, 1, rng) for _ in range(n)], minlength=6)
    p = mdp.features[2, 1] @ mdp.measures[1]
    assert 0.5 * np.abs(counts / n - p).sum() <= 0.01


def test_out_of_range_indices(tiny_mdp):
    rng = episode_rng(0, 1)
    with pytest.raises(IndexError):
        transition_sample(tiny_mdp, 3, 0, 0, rng)
    with pytest.raises(IndexError):
        reward(tiny_mdp, 0, 2, 0)
    with pytest.raises(IndexError):
        reward(tiny_mdp, 0, 0, 3)


def test_uniform_theta_reward():
    mdp = generate_synthetic(SyntheticSpec(4, 3, 5, 2, seed=1))
    mdp = LinearMDP(mdp.features, mdp.measures, np.full((2, 5), 0.2))
    for s in range(4):
        for a in range(3):
            assert reward(mdp, s, a, 1) == pytest.approx(0.2, abs=1e-15)


def test_reward_matches_explicit_sum(small_mdp):
    rng = np.random.default_rng(4)
    for _ in range(30):
        s, a, h = rng.integers(10), rng.integers(3), rng.integers(4)
        total = 0.0
        for j in range(4):
            total += small_mdp.features[s, a, j] * small_mdp.reward_weights[h, j]
        assert abs(reward(small_mdp, s, a, h) - total) <= 1e-15


def test_validate_flags_reward_above_one():
    feats = np.zeros((2, 1, 2))
    feats[:, 0, 0] = 1.0
    mu = np.full((1, 2, 2), 0.5)
    theta = np.array([[2.0, 0.0]])
    report = validate(LinearMDP(feats, mu, theta))
    assert {v.kind for v in report} == {"reward_range"}
    assert all(v.value == 2.0 for v in report)


def test_validate_flags_scaled_measure_row():
    base = generate_synthetic(SyntheticSpec(4, 2, 3, 2, seed=9))
    mu = base.measures.copy()
    mu[1, 0] *= 0.5
    mdp = LinearMDP(base.features, mu, base.reward_weights)
    report = [v for v in validate(mdp) if v.kind == "transition_sum"]
    # constructed oracle: the sum for (s, a, h=1) drops to 1 - 0.5 * phi_0(s, a)
    expected = {(s, a): 1 - 0.5 * base.features[s, a, 0] for s in range(4) for a in range(2)}
    assert {(v.state, v.action) for v in report} == set(expected)
    assert all(v.step == 1 for v in report)
    for v in report:
        assert v.value == pytest.approx(expected[v.state, v.action], abs=1e-12)


def test_validate_point_measure_scaled_to_half():
    mdp = point_mass_mdp(n_states=3, n_actions=1, dim=1, horizon=1)
    bad = LinearMDP(mdp.features, mdp.measures * 0.5, mdp.reward_weights)
    report = validate(bad)
    assert len(report) == 3
    assert all(v.kind == "transition_sum" and v.value == pytest.approx(0.5) for v in report)


def test_serialization_round_trip():
    mdp = generate_synthetic(SyntheticSpec(500, 15, 30, 50, seed=3))
    blob = serialize(mdp)
    assert blob[:8] == MAGIC
    back = deserialize(blob)
    assert back == mdp
    assert serialize(back) == blob
    assert validate(back) == []


def test_serialization_layout():
    mdp = generate_synthetic(SyntheticSpec(2, 3, 2, 2, seed=77))
    blob = serialize(mdp)
    header = np.frombuffer(blob[8:48], dtype="<u8")
    assert header.tolist() == [2, 3, 2, 2, 77]
    floats = np.frombuffer(blob[48:-4], dtype="<f8")
    np.testing.assert_array_equal(floats[:12], mdp.features.ravel())
    np.testing.assert_array_equal(floats[12:16], mdp.reward_weights.ravel())
    np.testing.assert_array_equal(floats[16:], mdp.measures.ravel())


def test_deserialize_errors(tiny_mdp):
    blob = serialize(tiny_mdp)
    with pytest.raises(ValidationError, match="shape mismatch"):
        deserialize(blob[:-10])
    with pytest.raises(ValidationError, match="magic"):
        deserialize(b"XXXXXXXX" + blob[8:])
    corrupt = bytearray(blob)
    corrupt[60] ^= 0xFF
    with pytest.raises(ValidationError, match="checksum"):
        deserialize(bytes(corrupt))
