"""Off-policy target construction against a brute-force lambda-return oracle."""

import numpy as np
import pytest

from drcplan.vtrace import vtrace_targets

from oracles import lambda_return_reference


def random_tape(rng, t_len):
    rewards = rng.normal(size=t_len)
    values = rng.normal(size=t_len)
    bootstrap = rng.normal()
    dones = rng.random(t_len) < 0.15
    return rewards, values, bootstrap, dones


def onpolicy_vtrace(rewards, values, bootstrap, dones, gamma, lam):
    logp = np.log(np.full((len(rewards), 1), 0.25))
    out = vtrace_targets(rewards[:, None], dones[:, None], logp, logp,
                         values[:, None], np.array([bootstrap]), gamma, lam)
    return out


@pytest.mark.parametrize("lam", [0.0, 0.5, 0.97, 1.0])
def test_onpolicy_equals_brute_force_lambda_returns(lam):
    rng = np.random.default_rng(hash(lam) % (2 ** 31))
    for _ in range(60):
        t_len = int(rng.integers(5, 21))
        rewards, values, bootstrap, dones = random_tape(rng, t_len)
        got = onpolicy_vtrace(rewards, values, bootstrap, dones, 0.97, lam).vs[:, 0]
        want = lambda_return_reference(rewards, values, bootstrap, dones, 0.97, lam)
        np.testing.assert_allclose(got, want, atol=1e-10)


def test_onpolicy_lambda1_equals_nstep_returns():
    """With lam = 1 and no dones the target is the full bootstrapped return."""
    rng = np.random.default_rng(3)
    rewards, values, bootstrap, _ = random_tape(rng, 8)
    dones = np.zeros(8, dtype=bool)
    vs = onpolicy_vtrace(rewards, values, bootstrap, dones, 0.9, 1.0).vs[:, 0]
    direct = np.zeros(8)
    for s in range(8):
        acc = sum(0.9 ** (i - s) * rewards[i] for i in range(s, 8))
        direct[s] = acc + 0.9 ** (8 - s) * bootstrap
    np.testing.assert_allclose(vs, direct, atol=1e-10)


def test_zero_rewards_zero_values_all_zero():
    t_len = 12
    zeros = np.zeros((t_len, 2))
    logp = np.log(np.full((t_len, 2), 0.2))
    out = vtrace_targets(zeros, np.zeros((t_len, 2), bool), logp, logp, zeros,
                         np.zeros(2), 0.97, 0.97)
    np.testing.assert_array_equal(out.vs, 0)
    np.testing.assert_array_equal(out.pg_advantages, 0)


def test_importance_weights_truncated_at_caps():
    rng = np.random.default_rng(5)
    t_len = 10
    behaviour = rng.normal(size=(t_len, 3)) - 3.0  # unlikely actions
    target = rng.normal(size=(t_len, 3)) + 1.0  # now likely: big ratios
    out = vtrace_targets(rng.normal(size=(t_len, 3)), np.zeros((t_len, 3), bool),
                         behaviour, target, rng.normal(size=(t_len, 3)),
                         rng.normal(size=3), 0.97, 0.97, rho_bar=1.0, c_bar=1.0)
    assert out.rhos.max() <= 1.0
    assert out.cs.max() <= 0.97  # lambda folded into the trace coefficient
    assert out.rhos.min() > 0.0


def test_done_masking_blocks_information_flow():
    rng = np.random.default_rng(9)
    t_len = 15
    rewards, values, bootstrap, _ = random_tape(rng, t_len)
    dones = np.zeros(t_len, dtype=bool)
    dones[6] = True
    base = onpolicy_vtrace(rewards, values, bootstrap, dones, 0.97, 0.97)
    # perturb everything after the boundary
    rewards2 = rewards.copy()
    values2 = values.copy()
    rewards2[7:] += 100
    values2[7:] -= 50
    pert = onpolicy_vtrace(rewards2, values2, bootstrap + 7, dones, 0.97, 0.97)
    np.testing.assert_allclose(base.vs[:7], pert.vs[:7], atol=1e-12)
    np.testing.assert_allclose(base.pg_advantages[:7], pert.pg_advantages[:7], atol=1e-12)


def test_terminal_step_bootstraps_to_zero():
    rewards = np.array([1.0])
    values = np.array([0.3])
    dones = np.array([True])
    out = onpolicy_vtrace(rewards, values, 99.0, dones, 0.9, 1.0)
    assert out.vs[0, 0] == pytest.approx(1.0)


def test_zero_behaviour_probability_rejected():
    t_len = 4
    logp = np.full((t_len, 1), -np.inf)
    with pytest.raises(ValueError, match="behaviour"):
        vtrace_targets(np.zeros((t_len, 1)), np.zeros((t_len, 1), bool), logp,
                       np.zeros((t_len, 1)), np.zeros((t_len, 1)), np.zeros(1),
                       0.97)


def test_off_policy_reduces_toward_target_policy_values():
    """Direction check: with ratios below 1 the correction shrinks."""
    rng = np.random.default_rng(13)
    t_len = 10
    rewards, values, bootstrap, _ = random_tape(rng, t_len)
    dones = np.zeros(t_len, dtype=bool)
    b_logp = np.log(np.full((t_len, 1), 0.5))
    t_logp = np.log(np.full((t_len, 1), 0.1))
    out = vtrace_targets(rewards[:, None], dones[:, None], b_logp, t_logp,
                         values[:, None], np.array([bootstrap]), 0.97, 1.0)
    on = vtrace_targets(rewards[:, None], dones[:, None], b_logp, b_logp,
                        values[:, None], np.array([bootstrap]), 0.97, 1.0)
    # smaller rho shrinks |vs - V|
    assert np.abs(out.vs - values[:, None]).sum() < np.abs(on.vs - values[:, None]).sum()
