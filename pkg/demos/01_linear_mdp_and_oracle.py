"""
Linear MDPs and the exact oracle
================================

Draw a small synthetic linear MDP, check that its transition rows are
distributions, solve it by backward induction and score a few policies.
"""

import numpy as np

from lsviucb import SyntheticSpec, generate_synthetic, validate
from lsviucb.oracle import greedy_policy, optimal_values, policy_value

# every feature, reward weight and measure row is a point on the simplex
mdp = generate_synthetic(SyntheticSpec(n_states=20, n_actions=4, dim=5, horizon=6, seed=0))
print("features", mdp.features.shape, "measures", mdp.measures.shape)
print("violations:", validate(mdp))

# P_h(s' | s, a) = <phi(s, a), mu_h(s')>
P0 = mdp.transition_matrix(0)
print("row sums in [%.15f, %.15f]" % (P0.sum(-1).min(), P0.sum(-1).max()))

vt = optimal_values(mdp)
print("V*_1(s) for the first five states:", np.round(vt.v_star[0, :5], 4))

# the greedy policy of Q* attains V*, a random one does not
pi_star = greedy_policy(vt.q_star)
rng = np.random.default_rng(1)
pi_rand = rng.integers(0, mdp.n_actions, (mdp.n_states, mdp.horizon))
for name, pi in (("greedy(Q*)", pi_star), ("random", pi_rand)):
    v = policy_value(mdp, pi)
    print(f"{name:>11}: V_1(0) = {v[0, 0]:.4f}, regret = {vt.v_star[0, 0] - v[0, 0]:.4f}")
