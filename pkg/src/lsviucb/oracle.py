"""Exact backward induction on a LinearMDP: the ground truth for regret."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .mdp import SUM_TOL, LinearMDP

__all__ = [
    "ValueTables",
    "optimal_values",
    "policy_value",
    "stochastic_policy_value",
    "greedy_policy",
    "episode_regret",
    "check_policy",
]

_RENORM_TOL = 1e-12


@dataclass(frozen=True)
class ValueTables:
    """``q_star`` is (H, S, A); ``v_star`` is (H+1, S) with the last row zero."""

    q_star: np.ndarray
    v_star: np.ndarray


def _stochastic(P: np.ndarray) -> np.ndarray:
    """Re-normalize rows whose sum is off by more than 1e-12 (but within 1e-9)."""
    sums = P.sum(axis=-1, keepdims=True)
    dev = np.abs(sums - 1.0)
    if np.any(dev > SUM_TOL):
        raise ValidationError(f"transition row sums deviate from 1 by {float(dev.max()):.3g}")
    if np.any(dev > _RENORM_TOL):
        P = np.where(dev > _RENORM_TOL, P / sums, P)
    return P


def optimal_values(mdp: LinearMDP) -> ValueTables:
    H, S, A = mdp.horizon, mdp.n_states, mdp.n_actions
    R = mdp.rewards
    q = np.empty((H, S, A))
    v = np.zeros((H + 1, S))
    for h in range(H - 1, -1, -1):
        P = _stochastic(mdp.transition_matrix(h))
        q[h] = R[h] + P @ v[h + 1]
        v[h] = q[h].max(axis=1)
    return ValueTables(q, v)


def greedy_policy(q: np.ndarray) -> np.ndarray:
    """(S, H) action table; ``q`` is (H, S, A); ties go to the lowest action."""
    return np.ascontiguousarray(np.argmax(q, axis=-1).T)


def check_policy(mdp: LinearMDP, pi) -> np.ndarray:
    pi = np.asarray(pi)
    if pi.shape != (mdp.n_states, mdp.horizon):
        raise ValueError(f"policy must have shape {(mdp.n_states, mdp.horizon)}, got {pi.shape}")
    if pi.size and (pi.min() < 0 or pi.max() >= mdp.n_actions):
        raise ValueError("policy contains an invalid action index")
    return pi.astype(np.intp)


def policy_value(mdp: LinearMDP, pi) -> np.ndarray:
    """V^pi as an (H+1, S) table for a deterministic policy ``pi[s, h]``."""
    pi = check_policy(mdp, pi)
    H, S = mdp.horizon, mdp.n_states
    states = np.arange(S)
    v = np.zeros((H + 1, S))
    for h in range(H - 1, -1, -1):
        a = pi[:, h]
        phi = mdp.features[states, a]
        P = _stochastic(phi @ mdp.measures[h])
        v[h] = mdp.rewards[h, states, a] + P @ v[h + 1]
    return v


def stochastic_policy_value(mdp: LinearMDP, probs) -> np.ndarray:
    """V^pi for a stochastic policy given as action probabilities of shape (H, S, A)."""
    probs = np.broadcast_to(np.asarray(probs, dtype=np.float64), (mdp.horizon, mdp.n_states, mdp.n_actions))
    v = np.zeros((mdp.horizon + 1, mdp.n_states))
    for h in range(mdp.horizon - 1, -1, -1):
        P = _stochastic(mdp.transition_matrix(h))
        q = mdp.rewards[h] + P @ v[h + 1]
        v[h] = (probs[h] * q).sum(axis=1)
    return v


def episode_regret(mdp: LinearMDP, vt: ValueTables, pi, s1: int) -> float:
    gap = float(vt.v_star[0, s1] - policy_value(mdp, pi)[0, s1])
    if -1e-9 <= gap < 0.0:
        return 0.0
    return gap
