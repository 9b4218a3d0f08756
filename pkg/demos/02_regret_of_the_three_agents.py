"""
Regret of the baseline and the two reset variants
=================================================

Run the baseline, the fixed-interval reset variant and the adaptive variant
on one instance and compare cumulative regret with the uniform policy.
A small exploration scale is used so that learning is visible within a
few hundred episodes.
"""

from lsviucb import ExperimentConfig, run_single
from lsviucb.harness import load_environment, sublinearity_report, uniform_policy_regret
from lsviucb.oracle import optimal_values

K = 400
base = {"env.n_states": "30", "env.n_actions": "4", "env.dim": "6", "env.horizon": "6", "hp.K": str(K), "hp.beta": "0.5"}
configs = {
    "baseline": {},
    "fixed": {"hp.variant": "fixed", "hp.rho": "0.75"},
    "adaptive": {"hp.variant": "adaptive", "hp.rho": "0.75", "hp.m": "5", "hp.tau": "1e-4", "hp.budget_c": "0.5"},
}

cfg = ExperimentConfig(base)
mdp = load_environment(cfg, 0)
uniform = K * uniform_policy_regret(mdp, optimal_values(mdp), 0)
print(f"uniform policy: cumulative regret {uniform:.1f}")

for name, extra in configs.items():
    recs = run_single(ExperimentConfig({**base, **extra}), 0).records
    rep = sublinearity_report(recs)
    print(
        f"{name:>9}: cumulative regret {recs[-1].cum_regret:7.1f}  "
        f"decay ratio {rep.decay_ratio:.2f}  peak space {max(r.logical_space for r in recs)}"
    )
