"""Flat ``dotted.key = value`` experiment configuration.

One key per line, ``#`` starts a comment.  Every key can be overridden with
``--set dotted.key=value`` on the command line.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Union

from .agents import VARIANTS, Hyperparameters, default_beta
from .errors import ConfigError
from .mdp import SyntheticSpec

__all__ = ["ExperimentConfig", "DEFAULTS", "parse_text", "load_config", "canonical_text"]


def _bool(v: str) -> bool:
    low = v.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _int_list(v: str) -> List[int]:
    return [int(x) for x in v.split(",") if x.strip()]


def _float_list(v: str) -> List[float]:
    return [float(x) for x in v.split(",") if x.strip()]


# key -> (parser, default text); an empty default means "unset"
DEFAULTS: Dict[str, tuple] = {
    "env.kind": (str, "synthetic"),
    "env.path": (str, ""),
    "env.n_states": (int, "50"),
    "env.n_actions": (int, "5"),
    "env.dim": (int, "8"),
    "env.horizon": (int, "10"),
    "hp.variant": (str, "baseline"),
    "hp.K": (int, "1000"),
    "hp.lambda": (float, "1.0"),
    "hp.beta": (float, ""),
    "hp.beta_c": (float, "1.0"),
    "hp.beta_p": (float, "0.01"),
    "hp.rho": (float, "1.0"),
    "hp.m": (int, "0"),
    "hp.tau": (float, ""),
    "hp.tau_c": (float, "0.0"),
    "hp.budget": (int, ""),
    "hp.budget_c": (float, ""),
    "hp.refresh_interval": (int, "0"),
    "run.seeds": (_int_list, "0"),
    "run.initial_state": (str, "fixed"),
    "run.initial_state_index": (int, "0"),
    "run.policy": (str, "agent"),
    "run.record_snapshots": (_bool, "false"),
    "run.out": (str, "out"),
    "sweep.rho": (_float_list, ""),
    "sweep.m": (_int_list, ""),
    "sweep.tau_c": (_float_list, ""),
    "sweep.budget_c": (_float_list, ""),
}


def parse_text(text: str) -> Dict[str, str]:
    out: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        key, value = (p.strip() for p in line.split("=", 1))
        if key not in DEFAULTS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        out[key] = value
    return out


def canonical_text(mapping: Dict[str, str]) -> str:
    return "".join(f"{k}={mapping[k]}\n" for k in sorted(mapping))


@dataclass(frozen=True)
class ExperimentConfig:
    """Parsed configuration; ``values`` keeps the explicitly set keys as text."""

    values: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        for k in self.values:
            if k not in DEFAULTS:
                raise ConfigError(f"unknown key {k!r}")
        for k in DEFAULTS:
            try:
                self.get(k)
            except ValueError as e:
                raise ConfigError(f"{k}: {e}") from None
        if self.get("hp.variant") not in VARIANTS:
            raise ConfigError(f"hp.variant must be one of {VARIANTS}")
        if self.get("env.kind") not in ("synthetic", "file"):
            raise ConfigError("env.kind must be 'synthetic' or 'file'")
        if self.get("env.kind") == "file" and not self.get("env.path"):
            raise ConfigError("env.path is required when env.kind = file")
        if self.get("run.initial_state") not in ("fixed", "uniform"):
            raise ConfigError("run.initial_state must be 'fixed' or 'uniform'")
        if self.get("run.policy") not in ("agent", "optimal"):
            raise ConfigError("run.policy must be 'agent' or 'optimal'")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if any(not 0 <= s < 2**64 for s in self.seeds):
            raise ConfigError("seeds must be 64-bit unsigned integers")
        if self.K < 1:
            raise ConfigError("hp.K must be >= 1")
        if self.get("env.kind") == "synthetic":
            try:
                self.synthetic_spec(0)
            except ValueError as e:
                raise ConfigError(str(e)) from None

    @classmethod
    def from_text(cls, text: str, overrides: Optional[Dict[str, str]] = None) -> "ExperimentConfig":
        values = parse_text(text)
        values.update(overrides or {})
        return cls(values)

    def get(self, key: str):
        parser, default = DEFAULTS[key]
        raw = self.values.get(key, default)
        if raw == "" and parser is not str:
            return None
        return parser(raw)

    def with_values(self, **dotted) -> "ExperimentConfig":
        vals = dict(self.values)
        vals.update({k: str(v) for k, v in dotted.items()})
        return ExperimentConfig(vals)

    def to_mapping(self) -> Dict[str, str]:
        return dict(sorted(self.values.items()))

    def canonical(self) -> str:
        return canonical_text(self.values)

    def digest(self) -> str:
        """Short hash of the canonical config; the output location does not count."""
        vals = {k: v for k, v in self.values.items() if k != "run.out"}
        return hashlib.sha256(canonical_text(vals).encode()).hexdigest()[:10]

    @property
    def K(self) -> int:
        return self.get("hp.K")

    @property
    def seeds(self) -> List[int]:
        return self.get("run.seeds")

    @property
    def variant(self) -> str:
        return self.get("hp.variant")

    @property
    def T(self) -> int:
        return self.get("env.horizon") * self.K

    def synthetic_spec(self, seed: int) -> SyntheticSpec:
        return SyntheticSpec(
            self.get("env.n_states"), self.get("env.n_actions"), self.get("env.dim"), self.get("env.horizon"), seed
        )

    def hyperparameters(self, dim: int, horizon: int) -> Hyperparameters:
        """Resolve derived values: beta by formula, tau = tau_c * d^2, Budget = floor(K^c)."""
        K = self.K
        beta = self.get("hp.beta")
        if beta is None:
            beta = default_beta(dim, horizon, K, self.get("hp.beta_c"), self.get("hp.beta_p"))
        tau = self.get("hp.tau")
        if tau is None:
            tau = self.get("hp.tau_c") * dim * dim
        budget = self.get("hp.budget")
        if budget is None and self.get("hp.budget_c") is not None:
            budget = max(1, int(math.floor(K ** self.get("hp.budget_c") * (1 + 1e-12))))
        try:
            return Hyperparameters(
                K=K,
                beta=beta,
                lam=self.get("hp.lambda"),
                rho=self.get("hp.rho"),
                m=self.get("hp.m"),
                tau=tau,
                budget=budget,
                variant=self.variant,
                refresh_interval=self.get("hp.refresh_interval"),
            )
        except ValueError as e:
            raise ConfigError(str(e)) from None

    def sweep_points(self) -> List["ExperimentConfig"]:
        """Cartesian grid over the non-empty ``sweep.*`` lists."""
        axes = []
        for key, target in (("sweep.rho", "hp.rho"), ("sweep.m", "hp.m"), ("sweep.tau_c", "hp.tau_c"), ("sweep.budget_c", "hp.budget_c")):
            vals = self.get(key)
            if vals:
                axes.append((target, vals))
        base = {k: v for k, v in self.values.items() if not k.startswith("sweep.")}
        points = [base]
        for target, vals in axes:
            points = [dict(p, **{target: repr(v)}) for p in points for v in vals]
        return [ExperimentConfig(p) for p in points]


def load_config(path: Optional[Union[str, Path]], overrides: Optional[Dict[str, str]] = None) -> ExperimentConfig:
    text = ""
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e}") from None
    return ExperimentConfig.from_text(text, overrides)
