"""LSVI-UCB and its two space-saving variants.

All three agents share the same regression and bonus code, so that the
degenerate configurations of the variants reproduce the baseline exactly.
Episodes are 1-based (``k = 1 .. K``) and steps 0-based (``h = 0 .. H-1``).
"""
from __future__ import annotations

import math
import time
from collections import deque
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .linalg import GramInverse, ellipsoid_bonus_batch, frobenius_distance, rank_one_update
from .mdp import LinearMDP, reward, transition_sample
from .oracle import ValueTables, episode_regret

__all__ = [
    "VARIANTS",
    "Hyperparameters",
    "default_beta",
    "phase_length",
    "PolicySnapshot",
    "StepLearnerState",
    "SpaceMeter",
    "EpisodeRecord",
    "Trajectory",
    "q_values",
    "q_value",
    "greedy_action",
    "regression_update",
    "learn_condition",
    "LSVIUCB",
    "LSVIUCBFixed",
    "LSVIUCBAdaptive",
    "ReplayAgent",
    "make_agent",
    "rollout",
    "step_episode",
]

VARIANTS = ("baseline", "fixed", "adaptive")


def default_beta(dim: int, horizon: int, K: int, c: float = 1.0, p: float = 0.01) -> float:
    """``c * d * H * sqrt(log(2 d T / p))`` with ``T = H K``."""
    T = horizon * K
    return c * dim * horizon * math.sqrt(math.log(2 * dim * T / p))


def phase_length(K: int, rho: float) -> int:
    """``floor(K ** rho)``, at least one."""
    # the relative nudge keeps exact powers such as 10000 ** 0.5 from rounding down
    return max(1, int(math.floor(K**rho * (1 + 1e-12))))


@dataclass(frozen=True)
class Hyperparameters:
    K: int
    beta: float
    lam: float = 1.0
    rho: float = 1.0
    m: int = 0
    tau: float = 0.0
    budget: Optional[int] = None
    variant: str = "baseline"
    refresh_interval: int = 0

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        if not self.beta >= 0:
            raise ValueError("beta must be non-negative")
        if not 0 < self.rho <= 1:
            raise ValueError("rho must lie in (0, 1]")
        if self.m < 0:
            raise ValueError("m must be non-negative")
        if self.tau < 0:
            raise ValueError("tau must be non-negative")
        if self.budget is not None and self.budget < 0:
            raise ValueError("budget must be non-negative")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")

    @property
    def phase(self) -> int:
        return phase_length(self.K, self.rho)

    @property
    def learn_budget(self) -> int:
        return self.K if self.budget is None else self.budget


@dataclass(frozen=True)
class PolicySnapshot:
    """Per-step weights (H, d) and Gram inverses (H, d, d) defining the agent's Q."""

    weights: np.ndarray
    gram_invs: np.ndarray
    beta: float
    horizon: int


def q_values(w: np.ndarray, gram_inv: np.ndarray, beta: float, horizon: float, feats: np.ndarray) -> np.ndarray:
    """``min(w^T phi + beta ||phi||_{Lambda^{-1}}, H)`` for features of any leading shape."""
    m = feats @ w
    if beta != 0.0:
        m = m + beta * ellipsoid_bonus_batch(feats, gram_inv)
    return np.minimum(m, horizon)


def q_value(snap: PolicySnapshot, h: int, s: int, a: int, mdp: LinearMDP) -> float:
    return float(q_values(snap.weights[h], snap.gram_invs[h], snap.beta, snap.horizon, mdp.features[s, a]))


def greedy_action(snap: PolicySnapshot, h: int, s: int, mdp: LinearMDP) -> int:
    q = q_values(snap.weights[h], snap.gram_invs[h], snap.beta, snap.horizon, mdp.features[s])
    return int(np.argmax(q))


def regression_update(gram: GramInverse, features, rewards, next_q_max) -> np.ndarray:
    """Ridge solution ``Lambda^{-1} sum_i phi_i (r_i + q_i)`` over the retained episodes."""
    features = np.asarray(features, dtype=np.float64).reshape(-1, gram.dim)
    rewards = np.asarray(rewards, dtype=np.float64).reshape(-1)
    next_q_max = np.asarray(next_q_max, dtype=np.float64).reshape(-1)
    n = features.shape[0]
    if rewards.shape[0] != n or next_q_max.shape[0] != n:
        raise ValueError(
            f"length mismatch: {n} retained episodes, {rewards.shape[0]} rewards, {next_q_max.shape[0]} targets"
        )
    if n == 0:
        return np.zeros(gram.dim)
    return gram.inv @ (features.T @ (rewards + next_q_max))


def learn_condition(window, tau: float) -> bool:
    """Max pairwise Frobenius distance over ``window`` is at least ``tau``.

    Fewer than two matrices carry no deviation history, so the answer is True.
    """
    mats = [np.asarray(getattr(m, "inv", m)) for m in window]
    if not mats:
        raise ValueError("window must be non-empty")
    if len(mats) < 2:
        return True
    shape = mats[0].shape
    for m in mats:
        if m.shape != shape:
            raise ValueError("dimension mismatch within window")
    best = 0.0
    for i in range(len(mats)):
        for j in range(i + 1, len(mats)):
            best = max(best, frobenius_distance(mats[i], mats[j]))
            if best >= tau:
                return True
    return best >= tau


class _Rows:
    """Append-only row buffer with amortized doubling."""

    def __init__(self, row_shape=()):
        self._data = np.empty((8,) + tuple(row_shape))
        self.n = 0

    def append(self, row):
        if self.n == self._data.shape[0]:
            grown = np.empty((2 * self.n,) + self._data.shape[1:])
            grown[: self.n] = self._data
            self._data = grown
        self._data[self.n] = row
        self.n += 1

    def clear(self):
        self._data = np.empty((8,) + self._data.shape[1:])
        self.n = 0

    @property
    def view(self) -> np.ndarray:
        return self._data[: self.n]

    def __len__(self):
        return self.n


@dataclass
class SpaceMeter:
    """Logical space in retained 64-bit scalars, by component."""

    gram_inverses: int = 0
    weights: int = 0
    stored_features: int = 0
    stored_rewards: int = 0
    window_matrices: int = 0

    @property
    def total(self) -> int:
        return self.gram_inverses + self.weights + self.stored_features + self.stored_rewards + self.window_matrices

    @property
    def retained(self) -> int:
        """Everything except the fixed per-step Gram inverses and weights."""
        return self.stored_features + self.stored_rewards + self.window_matrices


class StepLearnerState:
    """Working memory for one step index ``h``."""

    def __init__(self, dim: int, n_actions: int, lam: float, refresh_interval: int = 0, window: int = 0):
        self.dim = dim
        self.lam = lam
        self.refresh_interval = refresh_interval
        self.gram = GramInverse.identity(dim, lam, refresh_interval)
        self.retained: List[int] = []
        self.features = _Rows((dim,))
        self.rewards = _Rows()
        self.next_features = _Rows((n_actions, dim))
        self.learn_its = 0
        self.tot_its = 0
        # adaptive only
        self.window: deque = deque(maxlen=window + 1)
        self.full_gram = GramInverse.identity(dim, lam, refresh_interval)

    def store(self, k: int, phi: np.ndarray, r: float, next_phi: np.ndarray) -> None:
        self.retained.append(k)
        self.features.append(phi)
        self.rewards.append(r)
        self.next_features.append(next_phi)
        self.gram = rank_one_update(self.gram, phi)

    def clear(self) -> None:
        """Delete the working space: retained data, working Gram, counters, window."""
        self.gram = GramInverse.identity(self.dim, self.lam, self.refresh_interval)
        self.retained = []
        self.features.clear()
        self.rewards.clear()
        self.next_features.clear()
        self.learn_its = 0
        self.tot_its = 0
        self.window.clear()


@dataclass
class Trajectory:
    states: np.ndarray  # (H+1,)
    actions: np.ndarray  # (H,)
    rewards: np.ndarray  # (H,)


@dataclass
class EpisodeRecord:
    episode: int
    variant: str
    regret: float
    cum_regret: float
    logical_space: int
    process_time_s: float
    learn_events: int
    resets: int
    seed: int = 0
    run_id: str = ""


@dataclass
class _Plan:
    learned: List[bool]
    resets: int = 0


class LSVIUCB:
    """Least-squares value iteration with a UCB bonus; keeps every episode."""

    variant = "baseline"

    def __init__(self, features: np.ndarray, horizon: int, hp: Hyperparameters):
        self.features = np.asarray(features, dtype=np.float64)
        S, A, d = self.features.shape
        self.n_states, self.n_actions, self.dim = S, A, d
        self.horizon = horizon
        self.hp = hp
        self.steps = [self._new_state() for _ in range(horizon)]
        ident = GramInverse.identity(d, hp.lam).inv
        self.weights = np.zeros((horizon, d))
        self.gram_invs = [ident] * horizon
        self.meter = SpaceMeter(gram_inverses=self._n_gram_inverses() * d * d, weights=horizon * d)
        self._pending = [False] * horizon
        self.trace: Optional[list] = None

    def _new_state(self) -> StepLearnerState:
        return StepLearnerState(self.dim, self.n_actions, self.hp.lam, self.hp.refresh_interval)

    def _n_gram_inverses(self) -> int:
        return self.horizon

    @property
    def _per_episode(self) -> int:
        return self.dim + self.n_actions * self.dim + 1

    def snapshot(self) -> PolicySnapshot:
        return PolicySnapshot(self.weights.copy(), np.array(self.gram_invs), self.hp.beta, self.horizon)

    def _q(self, h: int, feats: np.ndarray) -> np.ndarray:
        return q_values(self.weights[h], self.gram_invs[h], self.hp.beta, self.horizon, feats)

    def _learn(self, h: int, k: int) -> None:
        st = self.steps[h]
        nxt = st.next_features.view
        if h == self.horizon - 1 or len(st.retained) == 0:
            q = np.zeros(len(st.retained))
        else:
            q = self._q(h + 1, nxt).max(axis=-1)
        w = regression_update(st.gram, st.features.view, st.rewards.view, q)
        if self.trace is not None:
            self.trace.append((k, h, st.features.view.copy(), st.rewards.view + q, w.copy()))
        self.weights[h] = w
        self.gram_invs[h] = st.gram.inv
        self._pending[h] = True

    def _reset(self, h: int) -> None:
        st = self.steps[h]
        self.meter.stored_features -= len(st.retained) * (self.dim + self.n_actions * self.dim)
        self.meter.stored_rewards -= len(st.retained)
        self.meter.window_matrices -= len(st.window) * self.dim * self.dim
        st.clear()
        self._pending[h] = False

    def plan(self, k: int) -> _Plan:
        """Backward pass for episode ``k``."""
        for h in range(self.horizon - 1, -1, -1):
            self._learn(h, k)
        return _Plan([True] * self.horizon)

    def policy(self) -> np.ndarray:
        """Greedy (S, H) action table of the current snapshot; ties to the lowest action."""
        pi = np.empty((self.n_states, self.horizon), dtype=np.intp)
        for h in range(self.horizon):
            pi[:, h] = np.argmax(self._q(h, self.features), axis=1)
        return pi

    def observe(self, k: int, traj: Trajectory) -> None:
        for h in range(self.horizon):
            if not self._pending[h]:
                continue
            s, a = traj.states[h], traj.actions[h]
            self.steps[h].store(k, self.features[s, a], traj.rewards[h], self.features[traj.states[h + 1]])
            self.meter.stored_features += self.dim + self.n_actions * self.dim
            self.meter.stored_rewards += 1
            self._pending[h] = False

    def finish(self, k: int) -> int:
        """End-of-episode bookkeeping; returns the number of step resets."""
        return 0


class LSVIUCBFixed(LSVIUCB):
    """Learns in every episode of a phase of ``floor(K^rho)`` episodes, then deletes its workspace."""

    variant = "fixed"

    def __init__(self, features, horizon, hp):
        super().__init__(features, horizon, hp)
        self.phase_start = 0

    def finish(self, k: int) -> int:
        if k - self.phase_start < self.hp.phase:
            return 0
        self.phase_start += self.hp.phase
        for h in range(self.horizon):
            self._reset(h)
        return self.horizon


class LSVIUCBAdaptive(LSVIUCB):
    """Learns only while under budget and when the full-history Gram inverse keeps moving."""

    variant = "adaptive"

    def _new_state(self) -> StepLearnerState:
        return StepLearnerState(self.dim, self.n_actions, self.hp.lam, self.hp.refresh_interval, window=self.hp.m)

    def _n_gram_inverses(self) -> int:
        return 2 * self.horizon

    def plan(self, k: int) -> _Plan:
        learned = [False] * self.horizon
        resets = 0
        d2 = self.dim * self.dim
        for h in range(self.horizon - 1, -1, -1):
            st = self.steps[h]
            before = len(st.window)
            st.window.append(st.full_gram.inv)
            self.meter.window_matrices += (len(st.window) - before) * d2
            if st.learn_its < self.hp.learn_budget and st.tot_its < self.hp.phase:
                st.tot_its += 1
                if learn_condition(st.window, self.hp.tau):
                    st.learn_its += 1
                    self._learn(h, k)
                    learned[h] = True
            else:
                self._reset(h)
                resets += 1
        return _Plan(learned, resets)

    def observe(self, k: int, traj: Trajectory) -> None:
        super().observe(k, traj)
        for h in range(self.horizon):
            st = self.steps[h]
            st.full_gram = rank_one_update(st.full_gram, self.features[traj.states[h], traj.actions[h]])


class ReplayAgent:
    """Stand-in that replays a fixed policy table (e.g. the oracle's greedy policy)."""

    variant = "replay"

    def __init__(self, pi: np.ndarray):
        self.pi = np.asarray(pi, dtype=np.intp)
        self.meter = SpaceMeter()

    def plan(self, k):
        return _Plan([], 0)

    def policy(self):
        return self.pi

    def observe(self, k, traj):
        pass

    def finish(self, k):
        return 0


_CLASSES = {"baseline": LSVIUCB, "fixed": LSVIUCBFixed, "adaptive": LSVIUCBAdaptive}


def make_agent(mdp: LinearMDP, hp: Hyperparameters) -> LSVIUCB:
    return _CLASSES[hp.variant](mdp.features, mdp.horizon, hp)


def rollout(mdp: LinearMDP, pi: np.ndarray, s1: int, rng: np.random.Generator) -> Trajectory:
    H = mdp.horizon
    states = np.empty(H + 1, dtype=np.intp)
    actions = np.empty(H, dtype=np.intp)
    rewards = np.empty(H)
    states[0] = s1
    for h in range(H):
        s = states[h]
        a = pi[s, h]
        actions[h] = a
        rewards[h] = reward(mdp, s, a, h)
        states[h + 1] = transition_sample(mdp, s, a, h, rng)
    return Trajectory(states, actions, rewards)


def step_episode(
    agent,
    mdp: LinearMDP,
    vt: ValueTables,
    k: int,
    rng: np.random.Generator,
    s1: int = 0,
    cum_regret: float = 0.0,
    clock_start: Optional[float] = None,
    snapshots: Optional[list] = None,
    trajectories: Optional[list] = None,
) -> EpisodeRecord:
    """Plan, act greedily for one episode, learn from it, and score it exactly.

    ``snapshots`` and ``trajectories``, when given, collect the acting
    snapshot and the executed trajectory of the episode.
    """
    plan = agent.plan(k)
    space = agent.meter.total
    if snapshots is not None:
        snapshots.append(agent.snapshot())
    pi = agent.policy()
    regret = episode_regret(mdp, vt, pi, s1)
    traj = rollout(mdp, pi, s1, rng)
    if trajectories is not None:
        trajectories.append(traj)
    agent.observe(k, traj)
    resets = plan.resets + agent.finish(k)
    elapsed = time.process_time() - clock_start if clock_start is not None else 0.0
    return EpisodeRecord(
        episode=k,
        variant=agent.variant,
        regret=regret,
        cum_regret=cum_regret + regret,
        logical_space=space,
        process_time_s=elapsed,
        learn_events=int(sum(plan.learned)),
        resets=resets,
    )
