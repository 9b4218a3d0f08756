"""Finite linear MDPs: representation, synthetic generation, sampling, I/O.

Transitions are ``P_h(.|s, a) = phi(s, a)^T mu_h`` and rewards are the
deterministic values ``r_h(s, a) = <phi(s, a), theta_h>``.  Steps are
0-based throughout the code (``h = 0 .. H-1``).
"""
from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass, field
from typing import List

import numpy as np

from .errors import ValidationError

__all__ = [
    "LinearMDP",
    "SyntheticSpec",
    "Violation",
    "generate_synthetic",
    "sample_simplex",
    "transition_sample",
    "reward",
    "validate",
    "serialize",
    "deserialize",
    "episode_rng",
    "MAGIC",
]

MAGIC = b"LMDPv001"
_HEADER = struct.Struct("<5Q")
_CRC = struct.Struct("<I")

SUM_TOL = 1e-9
NEG_TOL = 1e-12

# materialize the full transition tensor only below this many entries
_CACHE_LIMIT = 20_000_000


@dataclass(frozen=True)
class SyntheticSpec:
    n_states: int
    n_actions: int
    dim: int
    horizon: int
    seed: int = 0

    def __post_init__(self):
        for name in ("n_states", "n_actions", "dim", "horizon"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(eq=False)
class LinearMDP:
    """A finite linear MDP.

    ``features`` has shape (S, A, d), ``measures`` (H, d, S) with row ``j`` of
    ``measures[h]`` the measure mu_{h,j}, and ``reward_weights`` (H, d).
    """

    features: np.ndarray
    measures: np.ndarray
    reward_weights: np.ndarray
    seed: int = 0
    _cache: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        self.features = np.ascontiguousarray(self.features, dtype=np.float64)
        self.measures = np.ascontiguousarray(self.measures, dtype=np.float64)
        self.reward_weights = np.ascontiguousarray(self.reward_weights, dtype=np.float64)
        if self.features.ndim != 3:
            raise ValueError("features must have shape (S, A, d)")
        S, A, d = self.features.shape
        if self.reward_weights.ndim != 2 or self.reward_weights.shape[1] != d:
            raise ValueError("reward_weights must have shape (H, d)")
        H = self.reward_weights.shape[0]
        if self.measures.shape != (H, d, S):
            raise ValueError(f"measures must have shape {(H, d, S)}, got {self.measures.shape}")
        if min(S, A, d, H) < 1:
            raise ValueError("all sizes must be >= 1")
        for a in (self.features, self.measures, self.reward_weights):
            a.setflags(write=False)

    @property
    def n_states(self) -> int:
        return self.features.shape[0]

    @property
    def n_actions(self) -> int:
        return self.features.shape[1]

    @property
    def dim(self) -> int:
        return self.features.shape[2]

    @property
    def horizon(self) -> int:
        return self.reward_weights.shape[0]

    @property
    def rewards(self) -> np.ndarray:
        """Reward table of shape (H, S, A)."""
        if "rewards" not in self._cache:
            self._cache["rewards"] = np.einsum("sad,hd->hsa", self.features, self.reward_weights)
        return self._cache["rewards"]

    def transition_matrix(self, h: int) -> np.ndarray:
        """Raw ``phi^T mu_h`` as an (S, A, S) array (not re-normalized)."""
        key = ("P", h)
        if key in self._cache:
            return self._cache[key]
        P = self.features @ self.measures[h]
        if self.horizon * P.size <= _CACHE_LIMIT:
            self._cache[key] = P
        return P

    def transition_vector(self, s: int, a: int, h: int) -> np.ndarray:
        return self.features[s, a] @ self.measures[h]

    def __eq__(self, other):
        if not isinstance(other, LinearMDP):
            return NotImplemented
        return (
            self.seed == other.seed
            and np.array_equal(self.features, other.features)
            and np.array_equal(self.measures, other.measures)
            and np.array_equal(self.reward_weights, other.reward_weights)
        )


def sample_simplex(rng: np.random.Generator, n: int, size=()) -> np.ndarray:
    """Uniform draws from the (n-1)-simplex via normalized unit exponentials."""
    shape = tuple(np.atleast_1d(size)) if size != () else ()
    e = rng.standard_exponential(shape + (n,))
    return e / e.sum(axis=-1, keepdims=True)


def _generator(*key: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(k) for k in key])))


def episode_rng(seed: int, episode: int, stream: int = 1) -> np.random.Generator:
    """Counter-based stream owned by one episode of one run."""
    return _generator(seed, stream, episode)


def generate_synthetic(spec: SyntheticSpec) -> LinearMDP:
    rng = _generator(spec.seed, 0)
    S, A, d, H = spec.n_states, spec.n_actions, spec.dim, spec.horizon
    features = sample_simplex(rng, d, (S, A))
    reward_weights = sample_simplex(rng, d, (H,))
    measures = sample_simplex(rng, S, (H, d))
    return LinearMDP(features, measures, reward_weights, seed=int(spec.seed))


def _check_index(mdp: LinearMDP, s: int, a: int, h: int) -> None:
    if not 0 <= s < mdp.n_states:
        raise IndexError(f"state {s} out of range")
    if not 0 <= a < mdp.n_actions:
        raise IndexError(f"action {a} out of range")
    if not 0 <= h < mdp.horizon:
        raise IndexError(f"step {h} out of range")


def sample_categorical(p: np.ndarray, u: float) -> int:
    """Inverse-CDF draw from (possibly unnormalized) weights ``p`` given ``u`` in [0, 1)."""
    cdf = np.cumsum(p)
    idx = int(np.searchsorted(cdf, u * cdf[-1], side="right"))
    return min(idx, len(p) - 1)


def transition_sample(mdp: LinearMDP, s: int, a: int, h: int, rng: np.random.Generator) -> int:
    _check_index(mdp, s, a, h)
    return sample_categorical(mdp.transition_vector(s, a, h), rng.random())


def reward(mdp: LinearMDP, s: int, a: int, h: int) -> float:
    _check_index(mdp, s, a, h)
    return float(mdp.features[s, a] @ mdp.reward_weights[h])


@dataclass(frozen=True)
class Violation:
    kind: str  # "transition_sum", "transition_negative" or "reward_range"
    state: int
    action: int
    step: int
    value: float
    magnitude: float


def validate(mdp: LinearMDP) -> List[Violation]:
    """Every (s, a, h) that breaks the transition-simplex or reward-range invariants."""
    out: List[Violation] = []
    R = mdp.rewards
    for h in range(mdp.horizon):
        P = mdp.transition_matrix(h)
        sums = P.sum(axis=-1)
        for s, a in zip(*np.nonzero(np.abs(sums - 1.0) > SUM_TOL)):
            v = float(sums[s, a])
            out.append(Violation("transition_sum", int(s), int(a), h, v, abs(v - 1.0)))
        mins = P.min(axis=-1)
        for s, a in zip(*np.nonzero(mins < -NEG_TOL)):
            v = float(mins[s, a])
            out.append(Violation("transition_negative", int(s), int(a), h, v, -v))
        r = R[h]
        for s, a in zip(*np.nonzero((r < -NEG_TOL) | (r > 1.0 + NEG_TOL))):
            v = float(r[s, a])
            out.append(Violation("reward_range", int(s), int(a), h, v, v - 1.0 if v > 1 else -v))
    return out


def serialize(mdp: LinearMDP) -> bytes:
    S, A, d, H = mdp.n_states, mdp.n_actions, mdp.dim, mdp.horizon
    payload = b"".join(
        [
            _HEADER.pack(S, A, d, H, int(mdp.seed)),
            mdp.features.astype("<f8").tobytes(),
            mdp.reward_weights.astype("<f8").tobytes(),
            mdp.measures.astype("<f8").tobytes(),
        ]
    )
    return MAGIC + payload + _CRC.pack(zlib.crc32(payload))


def deserialize(data: bytes) -> LinearMDP:
    if len(data) < len(MAGIC) or data[: len(MAGIC)] != MAGIC:
        raise ValidationError("malformed header: bad magic tag")
    if len(data) < len(MAGIC) + _HEADER.size:
        raise ValidationError("shape mismatch: stream shorter than header")
    S, A, d, H, seed = _HEADER.unpack_from(data, len(MAGIC))
    if min(S, A, d, H) < 1:
        raise ValidationError("malformed header: zero size")
    n_floats = S * A * d + H * d + H * d * S
    expected = len(MAGIC) + _HEADER.size + 8 * n_floats + _CRC.size
    if len(data) != expected:
        raise ValidationError(f"shape mismatch: expected {expected} bytes, got {len(data)}")
    payload = data[len(MAGIC) : -_CRC.size]
    (crc,) = _CRC.unpack(data[-_CRC.size :])
    if zlib.crc32(payload) != crc:
        raise ValidationError("checksum failure")
    floats = np.frombuffer(payload, dtype="<f8", offset=_HEADER.size).astype(np.float64)
    i = 0
    features = floats[i : i + S * A * d].reshape(S, A, d)
    i += S * A * d
    reward_weights = floats[i : i + H * d].reshape(H, d)
    i += H * d
    measures = floats[i:].reshape(H, d, S)
    return LinearMDP(features, measures, reward_weights, seed=int(seed))
