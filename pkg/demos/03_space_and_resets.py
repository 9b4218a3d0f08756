"""
Logical space and the reset schedule
====================================

The baseline keeps every episode, so its retained scalar count grows
linearly.  The fixed variant drops its data every floor(K^rho) episodes.
"""

from lsviucb import ExperimentConfig, run_single
from lsviucb.agents import phase_length
from lsviucb.harness import retained_per_episode, space_account

K, rho = 500, 0.75
base = {"hp.K": str(K), "hp.beta": "1.0"}
print("phase length floor(500^0.75) =", phase_length(K, rho))

baseline = run_single(ExperimentConfig(base), 0).records
fixed = run_single(ExperimentConfig({**base, "hp.variant": "fixed", "hp.rho": str(rho)}), 0, keep_agent=True)

print("reset episodes:", [r.episode for r in fixed.records if r.resets])
for k in (1, 100, 105, 106, 250, 500):
    print(f"k={k:>3}  baseline {baseline[k - 1].logical_space:>7}  fixed {fixed.records[k - 1].logical_space:>7}")

# each retained episode costs d + |A| d + 1 scalars per step
print("per step per episode:", retained_per_episode(8, 5))
print("meter equals a recount:", space_account(fixed.agent) == fixed.agent.meter)
