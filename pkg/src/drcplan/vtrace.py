"""Off-policy corrected value targets and policy-gradient advantages.

Given a trajectory scored under both the behaviour policy (at collection
time) and the current target policy, compute per-step value targets

    v_s = V_s + sum_{t >= s} gamma^{t-s} (prod_{s <= i < t} c_i) delta_t
    delta_t = rho_t (R_t + gamma V_{t+1} - V_t)

with truncated importance weights rho_t = min(rho_bar, pi/mu) and
c_i = lambda * min(c_bar, pi/mu). Advantages are
rho_s (R_s + gamma v_{s+1} - V_s). Episode boundaries cut the recursion: no
value or importance information flows across a done flag. With behaviour ==
target and caps at 1 this reduces exactly to lambda-returns.

Everything here is plain numpy on (T, B) arrays; gradients never flow
through target computation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class VTraceOutput:
    vs: np.ndarray  # (T, B) value targets
    pg_advantages: np.ndarray  # (T, B)
    rhos: np.ndarray  # (T, B) truncated importance weights
    cs: np.ndarray  # (T, B) trace-cutting coefficients (lambda folded in)


def vtrace_targets(rewards, dones, behaviour_logp, target_logp, values, bootstrap,
                   gamma, lam=1.0, rho_bar=1.0, c_bar=1.0):
    """V-trace targets over a (T, B) batch of unrolls.

    `behaviour_logp`/`target_logp` are log-probabilities of the actions
    actually taken; `values` are current-policy value estimates per step and
    `bootstrap` the estimate for the state after the unroll.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    bootstrap = np.asarray(bootstrap, dtype=np.float64)
    behaviour_logp = np.asarray(behaviour_logp, dtype=np.float64)
    target_logp = np.asarray(target_logp, dtype=np.float64)
    not_done = 1.0 - np.asarray(dones, dtype=np.float64)
    if not np.isfinite(behaviour_logp).all():
        raise ValueError("behaviour policy assigned zero probability to a taken action")

    t_len = rewards.shape[0]
    ratios = np.exp(target_logp - behaviour_logp)
    rhos = np.minimum(rho_bar, ratios)
    cs = lam * np.minimum(c_bar, ratios)

    next_values = np.concatenate([values[1:], bootstrap[None, :]], axis=0) * not_done
    deltas = rhos * (rewards + gamma * next_values - values)

    vs_minus_v = np.zeros_like(values)
    acc = np.zeros_like(values[0])
    for t in range(t_len - 1, -1, -1):
        acc = deltas[t] + gamma * not_done[t] * cs[t] * acc
        vs_minus_v[t] = acc
    vs = values + vs_minus_v

    next_vs = np.concatenate([vs[1:], bootstrap[None, :]], axis=0) * not_done
    pg_advantages = rhos * (rewards + gamma * next_vs - values)

    if not (np.isfinite(vs).all() and np.isfinite(pg_advantages).all()):
        raise FloatingPointError("non-finite value targets")
    return VTraceOutput(vs, pg_advantages, rhos, cs)
