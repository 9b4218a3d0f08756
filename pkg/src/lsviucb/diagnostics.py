"""Empirical checks of the convergence facts behind the adaptive variant.

High-probability statements are checked as frequencies over seeded trials,
and decay rates as ratios of scaled medians between an early and a late
window.  None of the unknown constants are asserted.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .linalg import GramInverse, operator_norm_estimate, rank_one_update

__all__ = [
    "GaussianFeatureSpec",
    "DecaySeries",
    "EllipsoidReport",
    "lambda_step_norm_series",
    "min_eigenvalue_series",
    "min_eigenvalue_trials",
    "ellipsoid_inequality_check",
    "weight_step_norm_series",
    "scaled_median_ratio",
]


def _rng(*key: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(k) for k in key])))


@dataclass(frozen=True)
class GaussianFeatureSpec:
    """``n_samples`` i.i.d. draws from N(0, covariance).

    ``degenerate=True`` replaces every draw by the zero vector.
    """

    dim: int
    covariance: np.ndarray
    n_samples: int
    seed: int = 0
    degenerate: bool = False

    def __post_init__(self):
        cov = np.asarray(self.covariance, dtype=np.float64)
        if cov.shape != (self.dim, self.dim):
            raise ValueError(f"covariance must be {self.dim}x{self.dim}")
        if np.abs(cov - cov.T).max() > 1e-12:
            raise ValueError("covariance must be symmetric")
        if np.linalg.eigvalsh(cov)[0] <= 0:
            raise ValueError("covariance must be positive definite")
        if self.n_samples < 1:
            raise ValueError("n_samples must be positive")
        object.__setattr__(self, "covariance", cov)

    @classmethod
    def isotropic(cls, dim: int, n_samples: int, seed: int = 0, **kw) -> "GaussianFeatureSpec":
        return cls(dim, np.eye(dim), n_samples, seed, **kw)

    @property
    def c_min(self) -> float:
        return float(np.linalg.eigvalsh(self.covariance)[0])

    def draw(self) -> np.ndarray:
        if self.degenerate:
            return np.zeros((self.n_samples, self.dim))
        z = _rng(self.seed, 7).standard_normal((self.n_samples, self.dim))
        return z @ np.linalg.cholesky(self.covariance).T


@dataclass
class DecaySeries:
    indices: np.ndarray
    values: np.ndarray
    label: str

    def __post_init__(self):
        self.indices = np.asarray(self.indices)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.indices.shape != self.values.shape:
            raise ValueError("indices and values must have the same length")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("series values must be finite")

    def window(self, lo: int, hi: int) -> np.ndarray:
        mask = (self.indices >= lo) & (self.indices <= hi)
        return self.values[mask]


def scaled_median_ratio(series: DecaySeries, early: Tuple[int, int], late: Tuple[int, int], power: float = 2) -> float:
    """median_{k in late}(k^p v_k) / median_{k in early}(k^p v_k)."""
    scaled = DecaySeries(series.indices, series.values * series.indices.astype(np.float64) ** power, series.label)
    e = np.median(scaled.window(*early))
    l = np.median(scaled.window(*late))
    if e == 0.0:
        return 0.0 if l == 0.0 else np.inf
    return float(l / e)


def lambda_step_norm_series(spec: GaussianFeatureSpec, ridge: float = 1.0, iterations: int = 200) -> DecaySeries:
    """v_k = ||Lambda_k^{-1} - Lambda_{k+1}^{-1}||_{2->2} with Lambda_k = ridge I + sum_{i<k} x_i x_i^T."""
    xs = spec.draw()
    g = GramInverse.identity(spec.dim, ridge)
    vals = np.empty(spec.n_samples)
    for k, x in enumerate(xs):
        nxt = rank_one_update(g, x)
        vals[k] = operator_norm_estimate(g.inv - nxt.inv, iterations)
        g = nxt
    return DecaySeries(np.arange(1, spec.n_samples + 1), vals, "lambda_step_norm")


def _checkpoints(dim: int, n: int) -> List[int]:
    out, k = [], dim
    while k <= n:
        out.append(k)
        k *= 2
    return out


def min_eigenvalue_series(spec: GaussianFeatureSpec, checkpoints: Optional[Sequence[int]] = None) -> DecaySeries:
    """lambda_min(sum_{i<=k} w_i w_i^T) at k in {d, 2d, 4d, ...} (or the given checkpoints)."""
    xs = spec.draw()
    ks = list(checkpoints) if checkpoints is not None else _checkpoints(spec.dim, spec.n_samples)
    vals = []
    for k in ks:
        if not 1 <= k <= spec.n_samples:
            raise ValueError(f"checkpoint {k} outside 1..{spec.n_samples}")
        w = xs[:k]
        lam = float(np.linalg.eigvalsh(w.T @ w)[0])
        # rank-deficient sums are exactly singular
        vals.append(0.0 if k < spec.dim else max(lam, 0.0))
    return DecaySeries(np.array(ks), np.array(vals), "min_eigenvalue")


def min_eigenvalue_trials(spec: GaussianFeatureSpec, k: int, trials: int, factor: float = 100.0) -> Tuple[int, float]:
    """How many seeded trials satisfy lambda_min(sum_{i<=k} w_i w_i^T) >= k c_min / factor."""
    threshold = k * spec.c_min / factor
    passed = 0
    for t in range(trials):
        trial = GaussianFeatureSpec(spec.dim, spec.covariance, k, seed=spec.seed * 1_000_003 + t)
        lam = min_eigenvalue_series(trial, [k]).values[0]
        passed += lam >= threshold
    return passed, threshold


@dataclass
class EllipsoidReport:
    trials: int
    violations: List[tuple] = field(default_factory=list)
    max_slack_used: float = 0.0

    @property
    def passed(self) -> bool:
        return not self.violations


def _random_pd(rng: np.random.Generator, d: int, eps: float = 1e-3) -> np.ndarray:
    m = rng.standard_normal((d, d))
    return m @ m.T + eps * np.eye(d)


def ellipsoid_inequality_check(trials: int, dim: int, seed: int = 0, slack: float = 1e-9) -> EllipsoidReport:
    """|x^T A x - x^T A' x| <= ||x||^2 ||A - A'||_{2->2} on random positive definite pairs."""
    if trials < 1:
        raise ValueError("trials must be positive")
    rng = _rng(seed, 11)
    report = EllipsoidReport(trials)
    for _ in range(trials):
        a = _random_pd(rng, dim)
        b = _random_pd(rng, dim)
        x = rng.standard_normal(dim)
        lhs = abs(x @ a @ x - x @ b @ x)
        rhs = (x @ x) * float(np.abs(np.linalg.eigvalsh(a - b)).max())
        report.max_slack_used = max(report.max_slack_used, lhs - rhs)
        if lhs > rhs + slack:
            report.violations.append((x, a, b))
    return report


def weight_step_norm_series(weights, h: Optional[int] = None, label: str = "weight_step_norm") -> DecaySeries:
    """||w_{h,k+1} - w_{h,k}||_2 against k.

    ``weights`` is either a (K, d) array for one step, or a list of recorded
    PolicySnapshot objects together with the step ``h``.
    """
    if weights is None or (hasattr(weights, "__len__") and len(weights) == 0):
        raise ValueError("run has no recorded weights")
    if not isinstance(weights, np.ndarray) and hasattr(weights[0], "weights"):
        if h is None:
            raise ValueError("step h is required when passing snapshots")
        w = np.array([snap.weights[h] for snap in weights])
    else:
        w = np.asarray(weights, dtype=np.float64)
    steps = np.linalg.norm(np.diff(w, axis=0), axis=1)
    return DecaySeries(np.arange(1, len(steps) + 1), steps, label)
