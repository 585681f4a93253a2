"""Action-selection policies sharing one protocol.

A policy is a callable `(obs, rng) -> action`; if it defines
`begin_episode(env)` that hook runs at every episode start (network policies
zero their recurrent state there, scripted ones rewind).
"""

from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .boxoban.levels import level_hash
from .train import sample_action


class UniformRandomPolicy:
    def __init__(self, action_count):
        self.action_count = action_count

    def __call__(self, obs, rng):
        return int(rng.integers(0, self.action_count))


class CyclePolicy:
    """Deterministic fixed action cycle; a deliberately weak probe agent."""

    def __init__(self, actions=(0, 3, 1, 2)):
        self.actions = tuple(actions)
        self._i = 0

    def begin_episode(self, env):
        self._i = 0

    def __call__(self, obs, rng):
        a = self.actions[self._i % len(self.actions)]
        self._i += 1
        return a


class SolutionReplayPolicy:
    """Replays known solutions keyed by level hash; no-ops once exhausted."""

    def __init__(self, solutions, fallback_action=4):
        self.solutions = solutions  # level_hash -> action list
        self.fallback = fallback_action
        self._plan = []
        self._i = 0

    def begin_episode(self, env):
        self._plan = self.solutions.get(level_hash(env.level), [])
        self._i = 0

    def __call__(self, obs, rng):
        if self._i < len(self._plan):
            a = self._plan[self._i]
            self._i += 1
            return a
        return self.fallback


class NetworkPolicy:
    """Wraps a recurrent network for single-environment rollouts."""

    def __init__(self, net, mode="sample"):
        if mode not in ("sample", "greedy"):
            raise ValueError(f"unknown mode {mode!r}")
        self.net = net
        self.mode = mode
        self.state = None

    def begin_episode(self, env):
        self.state = self.net.zero_state(batch=1)

    def __call__(self, obs, rng):
        if self.state is None:
            self.state = self.net.zero_state(batch=1)
        with ad.no_grad():
            self.state, logits, _ = self.net.forward(self.state, Tensor(obs[None]))
        row = logits.data[0]
        if self.mode == "greedy":
            return int(np.argmax(row))
        return sample_action(row, rng)
