"""Dense numerics shared by every agent.

The Gram inverse is kept up to date with Sherman-Morrison updates and never
re-inverted unless a refresh interval is requested.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import NumericalError

__all__ = [
    "GramInverse",
    "rank_one_update",
    "frobenius_distance",
    "ellipsoid_bonus",
    "ellipsoid_bonus_batch",
    "operator_norm_estimate",
]


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class GramInverse:
    """Inverse of ``ridge * I + sum_i u_i u_i^T``.

    Instances are immutable; :func:`rank_one_update` returns a new one.
    ``gram`` holds the un-inverted matrix only when ``refresh_interval > 0``.
    """

    dim: int
    inv: np.ndarray
    ridge: float
    rank_one_count: int = 0
    refresh_interval: int = 0
    gram: Optional[np.ndarray] = field(default=None, repr=False)

    @classmethod
    def identity(cls, dim: int, ridge: float = 1.0, refresh_interval: int = 0) -> "GramInverse":
        if dim < 1:
            raise ValueError("dim must be positive")
        if not ridge > 0:
            raise ValueError("ridge must be positive")
        inv = _frozen(np.eye(dim) / ridge)
        gram = _frozen(np.eye(dim) * ridge) if refresh_interval > 0 else None
        return cls(dim, inv, float(ridge), 0, int(refresh_interval), gram)

    def matrix(self) -> np.ndarray:
        """The represented (un-inverted) matrix, by direct inversion."""
        if self.gram is not None:
            return self.gram.copy()
        return np.linalg.inv(self.inv)


def rank_one_update(g: GramInverse, u) -> GramInverse:
    """Return the inverse of ``A + u u^T`` given ``g`` holding ``A^{-1}``."""
    u = np.asarray(u, dtype=np.float64)
    if u.shape != (g.dim,):
        raise ValueError(f"expected vector of length {g.dim}, got shape {u.shape}")
    if not np.all(np.isfinite(u)):
        raise ValueError("update vector must be finite")

    au = g.inv @ u
    denom = 1.0 + u @ au
    # A is positive definite, so the denominator is at least one
    if not denom >= 1.0 - 1e-12:
        raise NumericalError(f"Sherman-Morrison denominator {denom!r} < 1; inverse is corrupted")
    inv = g.inv - np.outer(au, au) / denom
    inv = 0.5 * (inv + inv.T)

    count = g.rank_one_count + 1
    gram = None
    if g.refresh_interval > 0:
        gram = g.gram + np.outer(u, u)
        if count % g.refresh_interval == 0:
            inv = np.linalg.inv(gram)
            inv = 0.5 * (inv + inv.T)
        gram = _frozen(gram)
    return GramInverse(g.dim, _frozen(inv), g.ridge, count, g.refresh_interval, gram)


def frobenius_distance(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a - b))


def _inv_of(g) -> np.ndarray:
    return g.inv if isinstance(g, GramInverse) else np.asarray(g, dtype=np.float64)


def ellipsoid_bonus_batch(x, g) -> np.ndarray:
    """``sqrt(x^T A^{-1} x)`` for every row of ``x`` (any leading shape).

    Round-off below ``1e-12`` relative scale is treated as zero; anything more
    negative means the inverse is no longer positive definite.
    """
    inv = _inv_of(g)
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != inv.shape[0]:
        raise ValueError(f"feature length {x.shape[-1]} does not match dim {inv.shape[0]}")
    quad = np.einsum("...i,ij,...j->...", x, inv, x)
    floor = -1e-12 * (1.0 + np.einsum("...i,...i->...", x, x)) * max(1.0, float(np.abs(inv).max()))
    if np.any(quad < floor):
        raise NumericalError(f"negative quadratic form {quad.min()!r}; Gram inverse is not positive definite")
    return np.sqrt(np.maximum(quad, 0.0))


def ellipsoid_bonus(x, g) -> float:
    """Ellipsoid norm ``||x||_{A^{-1}}`` of a single vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("expected a single vector")
    return float(ellipsoid_bonus_batch(x, g))


def operator_norm_estimate(a, iterations: int = 200) -> float:
    """Largest absolute eigenvalue of a square matrix by power iteration on ``a^T a``.

    Starts from the normalized all-ones vector, so the result is deterministic.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if iterations < 1:
        raise ValueError("iterations must be positive")
    ata = a.T @ a
    v = np.ones(a.shape[0]) / np.sqrt(a.shape[0])
    rayleigh = float(v @ ata @ v)
    for _ in range(iterations):
        nv = ata @ v
        norm = np.linalg.norm(nv)
        if norm == 0.0:
            return 0.0
        v = nv / norm
        rayleigh = float(v @ ata @ v)
    return float(np.sqrt(max(rayleigh, 0.0)))
