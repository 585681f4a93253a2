"""Agent-based difficulty filtering.

A level is kept when the probe policy fails to solve it in every one of
`attempts` rollouts; sets built this way are strictly harder for that policy
than their source distribution.
"""

from __future__ import annotations

import numpy as np

from ..envs.sokoban_env import SokobanEnv
from .levels import LevelSet


def filter_by_agent(level_set, policy, attempts=10, step_limit=120, seed=0, tier="medium"):
    """Keep exactly the levels `policy` never solves across all attempts.

    `policy` is any callable (obs, rng) -> action; if it has a
    `begin_episode(env)` method it is called at every episode start.
    `attempts=0` returns an empty set by convention.
    """
    out = LevelSet(tier=tier, split=level_set.split)
    if attempts <= 0:
        return out
    for level_id, level in zip(level_set.ids, level_set.levels):
        if not any(_rollout_solves(level, policy, step_limit, [seed, level_id, a])
                   for a in range(attempts)):
            out.add(level, level_id)
    return out


def _rollout_solves(level, policy, step_limit, seed):
    env = SokobanEnv(level, step_limit=step_limit)
    rng = np.random.default_rng(seed)
    obs = env.reset()
    if hasattr(policy, "begin_episode"):
        policy.begin_episode(env)
    while True:
        res = env.step(policy(obs, rng))
        if res.done:
            return res.solved
        obs = res.obs
