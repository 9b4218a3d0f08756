"""Experiment orchestration, logical space metering and record I/O."""
from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from .agents import (
    EpisodeRecord,
    LSVIUCBAdaptive,
    ReplayAgent,
    SpaceMeter,
    make_agent,
    step_episode,
)
from .config import ExperimentConfig
from .errors import ValidationError
from .mdp import LinearMDP, deserialize, episode_rng, generate_synthetic, validate
from .oracle import ValueTables, greedy_policy, optimal_values, stochastic_policy_value

__all__ = [
    "CSV_COLUMNS",
    "RunResult",
    "SublinearityReport",
    "load_environment",
    "initial_state",
    "run_single",
    "run_experiment",
    "space_account",
    "retained_per_episode",
    "uniform_policy_regret",
    "emit_csv",
    "parse_csv",
    "emit_json",
    "sublinearity_report",
    "mean_cum_regret",
]

CSV_COLUMNS = (
    "run_id",
    "seed",
    "variant",
    "episode",
    "regret",
    "cum_regret",
    "logical_space",
    "process_time_s",
    "learn_events",
    "resets",
)


def load_environment(cfg: ExperimentConfig, seed: int) -> LinearMDP:
    """Synthetic instances are drawn with the run seed; file instances are validated."""
    if cfg.get("env.kind") == "synthetic":
        return generate_synthetic(cfg.synthetic_spec(seed))
    try:
        data = Path(cfg.get("env.path")).read_bytes()
    except OSError as e:
        raise ValidationError(f"cannot read environment: {e}") from None
    mdp = deserialize(data)
    problems = validate(mdp)
    if problems:
        worst = max(problems, key=lambda v: v.magnitude)
        raise ValidationError(f"{len(problems)} invariant violations, worst: {worst}")
    return mdp


def initial_state(cfg: ExperimentConfig, mdp: LinearMDP, seed: int, k: int) -> int:
    if cfg.get("run.initial_state") == "fixed":
        s = cfg.get("run.initial_state_index")
        if not 0 <= s < mdp.n_states:
            raise ValidationError(f"initial state {s} out of range")
        return s
    return int(episode_rng(seed, k, stream=2).integers(mdp.n_states))


@dataclass
class RunResult:
    seed: int
    records: List[EpisodeRecord]
    snapshots: Optional[list] = None
    agent: object = field(default=None, repr=False)


def run_single(cfg: ExperimentConfig, seed: int, audit_every: int = 0, keep_agent: bool = False) -> RunResult:
    """One seed of one configuration.

    With ``audit_every > 0`` the incremental space meter is checked against a
    from-scratch recount every ``audit_every`` episodes.
    """
    mdp = load_environment(cfg, seed)
    vt = optimal_values(mdp)
    if cfg.get("run.policy") == "optimal":
        agent = ReplayAgent(greedy_policy(vt.q_star))
        variant = "optimal"
    else:
        agent = make_agent(mdp, cfg.hyperparameters(mdp.dim, mdp.horizon))
        variant = agent.variant
    run_id = f"{variant}-{cfg.digest()}-{seed}"
    snapshots = [] if cfg.get("run.record_snapshots") else None
    records: List[EpisodeRecord] = []
    cum = 0.0
    t0 = time.process_time()
    for k in range(1, cfg.K + 1):
        rec = step_episode(
            agent,
            mdp,
            vt,
            k,
            episode_rng(seed, k),
            s1=initial_state(cfg, mdp, seed, k),
            cum_regret=cum,
            clock_start=t0,
            snapshots=snapshots,
        )
        rec = replace(rec, seed=seed, run_id=run_id, variant=variant)
        cum = rec.cum_regret
        records.append(rec)
        if audit_every and k % audit_every == 0:
            recount = space_account(agent)
            if recount != agent.meter:
                raise AssertionError(f"space meter drifted at episode {k}: {agent.meter} != {recount}")
    return RunResult(seed, records, snapshots, agent if keep_agent else None)


def _run_one(args):
    cfg, seed = args
    return run_single(cfg, seed).records


def run_experiment(cfg: ExperimentConfig, jobs: int = 1) -> Dict[int, List[EpisodeRecord]]:
    """Run every seed; ``jobs > 1`` runs seeds in worker processes with identical output."""
    seeds = cfg.seeds
    if jobs > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_one, [(cfg, s) for s in seeds]))
    else:
        results = [_run_one((cfg, s)) for s in seeds]
    return dict(zip(seeds, results))


def retained_per_episode(dim: int, n_actions: int) -> int:
    """Scalars kept per retained episode per step: executed feature, next-state rows, reward."""
    return dim + n_actions * dim + 1


def space_account(agent) -> SpaceMeter:
    """Recount the agent's retained scalars from its data structures."""
    if isinstance(agent, ReplayAgent):
        return SpaceMeter()
    d, H = agent.dim, agent.horizon
    n_gram = 2 * H if isinstance(agent, LSVIUCBAdaptive) else H
    meter = SpaceMeter(gram_inverses=n_gram * d * d, weights=agent.weights.size)
    for st in agent.steps:
        meter.stored_features += st.features.view.size + st.next_features.view.size
        meter.stored_rewards += st.rewards.view.size
        if isinstance(agent, LSVIUCBAdaptive):
            meter.window_matrices += sum(np.asarray(m).size for m in st.window)
    return meter


def uniform_policy_regret(mdp: LinearMDP, vt: ValueTables, s1: int = 0) -> float:
    """Exact per-episode regret of the uniformly random policy."""
    probs = np.full((mdp.horizon, mdp.n_states, mdp.n_actions), 1.0 / mdp.n_actions)
    return float(vt.v_star[0, s1] - stochastic_policy_value(mdp, probs)[0, s1])


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def emit_csv(records: Sequence[EpisodeRecord], path) -> Path:
    if not records:
        raise ValueError("no records to emit")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in records:
            w.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])
    return path


_INT_COLS = {"seed", "episode", "logical_space", "learn_events", "resets"}
_FLOAT_COLS = {"regret", "cum_regret", "process_time_s"}


def parse_csv(path) -> List[EpisodeRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ValueError(f"unexpected CSV header {reader.fieldnames}")
        out = []
        for row in reader:
            vals = {}
            for c in CSV_COLUMNS:
                if c in _INT_COLS:
                    vals[c] = int(row[c])
                elif c in _FLOAT_COLS:
                    vals[c] = float(row[c])
                else:
                    vals[c] = row[c]
            out.append(EpisodeRecord(**vals))
    return out


def emit_json(records: Sequence[EpisodeRecord], path, cfg: ExperimentConfig) -> Path:
    if not records:
        raise ValueError("no records to emit")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {
        "config": cfg.to_mapping(),
        "records": [{c: getattr(r, c) for c in CSV_COLUMNS} for r in records],
    }
    path.write_text(json.dumps(doc, indent=1, sort_keys=False) + "\n", encoding="utf-8")
    return path


@dataclass
class SublinearityReport:
    K: int
    avg_regret: Dict[int, float]
    decay_ratio: float
    fit_a: float
    fit_b: float
    fit_residual: float
    zero_regret: bool
    sublinear: bool

    def as_dict(self):
        return asdict(self)


def mean_cum_regret(runs: Iterable[Sequence[EpisodeRecord]]) -> np.ndarray:
    curves = [np.array([r.cum_regret for r in recs]) for recs in runs]
    return np.mean(curves, axis=0)


def sublinearity_report(records, threshold: float = 0.8) -> SublinearityReport:
    """Average-regret decay and an ``a sqrt(k) + b`` fit over the second half.

    ``records`` is a sequence of EpisodeRecord or a cumulative-regret array.
    The residual is ``||y - fit||_2 / ||y||_2`` over ``k in [K/2, K]``.
    """
    if len(records) and isinstance(records[0], EpisodeRecord):
        cum = np.array([r.cum_regret for r in records], dtype=np.float64)
    else:
        cum = np.asarray(records, dtype=np.float64)
    K = len(cum)
    if K < 100:
        raise ValueError(f"need at least 100 episodes, got {K}")
    marks = [K // 4, K // 2, K]
    avg = {k: float(cum[k - 1] / k) for k in marks}
    zero = avg[K // 4] == 0.0
    ratio = 0.0 if zero else avg[K] / avg[K // 4]

    ks = np.arange(K // 2, K + 1)
    y = cum[ks - 1]
    X = np.column_stack([np.sqrt(ks), np.ones_like(ks, dtype=np.float64)])
    (a, b), *_ = np.linalg.lstsq(X, y, rcond=None)
    ynorm = float(np.linalg.norm(y))
    resid = 0.0 if ynorm == 0.0 else float(np.linalg.norm(y - X @ np.array([a, b])) / ynorm)
    return SublinearityReport(
        K=K,
        avg_regret=avg,
        decay_ratio=float(ratio),
        fit_a=float(a),
        fit_b=float(b),
        fit_residual=resid,
        zero_regret=bool(zero),
        sublinear=bool(not zero and ratio <= threshold),
    )
