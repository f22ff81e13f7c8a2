import dataclasses

import numpy as np
import pytest

from policypath.config import RunConfig
from policypath.errors import DegenerateBaseline, EmptyInput, InsufficientData, ShapeMismatch, StaleCache
from policypath.harness.env import EnvConfig, PointMassEnv, env_step
from policypath.harness.nets import Adam, Mlp
from policypath.harness.td3 import AgentConfig, ReplayBuffer, Td3LiteAgent, soft_update
from policypath.harness.training import (
    delta_stats,
    normalize,
    reconstruction_check,
    score_auc,
    train,
)
from policypath.pptb import PptbConfig


def make_env(x, v, g):
    env = PointMassEnv(EnvConfig(goal_x=g[0], goal_y=g[1]))
    env.set_state(x, v)
    return env


def test_env_examples():
    _, r = env_step(make_env((0, 0), (0, 0), (0, 0)), (0, 0))
    assert r == 0.0
    env = make_env((0, 0), (0, 0), (1, 0))
    obs, r = env_step(env, (1, 0))
    np.testing.assert_array_equal(obs[:4], [0, 0, 0.05, 0])
    assert r == pytest.approx(-1.1, abs=1e-15)
    # x' = x + dt v, so a goal placed at x' gives zero reward when idle
    env = make_env((0.3, -0.2), (1.0, 2.0), (0.35, -0.1))
    _, r = env_step(env, (0, 0))
    assert r == 0.0


def test_env_clamps_actions():
    a, b = make_env((0, 0), (0, 0), (0, 0)), make_env((0, 0), (0, 0), (0, 0))
    assert env_step(a, (5, -9))[1] == env_step(b, (1, -1))[1]
    assert np.array_equal(a.velocity, b.velocity)


def test_env_horizon():
    env = PointMassEnv(EnvConfig(horizon=3))
    env.reset(np.random.default_rng(0))
    for _ in range(3):
        assert not env.done
        env.step(np.zeros(2))
    assert env.done


def tiny_net(seed, sizes=(3, 4, 4, 2), squash=True, activation="tanh"):
    return Mlp(list(sizes), squash=squash, rng=np.random.default_rng(seed), activation=activation)


def test_mlp_forward_examples():
    net = Mlp([6, 32, 32, 2], squash=True)
    np.testing.assert_array_equal(net.forward(np.ones(6)), [0.0, 0.0])
    net = Mlp([6, 32, 32, 2], squash=True, rng=np.random.default_rng(0))
    out = net.forward(np.random.default_rng(1).standard_normal((50, 6)) * 100)
    assert np.all(np.abs(out) <= 1.0)
    again = Mlp([6, 32, 32, 2], squash=True, rng=np.random.default_rng(0))
    x = np.linspace(-1, 1, 6)
    assert net.forward(x).tobytes() == again.forward(x).tobytes()
    with pytest.raises(ShapeMismatch):
        net.forward(np.ones(5))


def test_layer_segments_partition():
    net = Mlp([6, 32, 32, 2], squash=True)
    assert [s.name for s in net.layers] == ["Layer1", "Layer2", "Layer3"]
    assert net.layers[0].offset == 0 and net.layers[-1].stop == net.m
    for a, b in zip(net.layers, net.layers[1:]):
        assert a.stop == b.offset
    flat = np.random.default_rng(0).standard_normal(net.m)
    net.set_params(flat)
    assert net.get_params().tobytes() == flat.tobytes()


@pytest.mark.parametrize("seed, squash, activation", [(0, True, "tanh"), (1, False, "tanh"), (2, True, "relu"), (3, False, "relu")])
def test_backward_matches_finite_differences(seed, squash, activation):
    net = tiny_net(seed, squash=squash, activation=activation)
    assert net.m <= 200
    rng = np.random.default_rng(seed + 10)
    x = rng.standard_normal((5, 3))
    up = rng.standard_normal((5, 2))
    net.forward(x)
    grad, dx = net.backward(up)
    base = net.get_params()
    h = 1e-6
    numeric = np.empty_like(base)
    for k in range(base.size):
        plus, minus = base.copy(), base.copy()
        plus[k] += h
        minus[k] -= h
        net.set_params(plus)
        f_plus = np.sum(net.forward(x) * up)
        net.set_params(minus)
        f_minus = np.sum(net.forward(x) * up)
        numeric[k] = (f_plus - f_minus) / (2 * h)
    np.testing.assert_allclose(grad, numeric, rtol=1e-5, atol=1e-8)
    net.set_params(base)
    num_dx = np.empty_like(x)
    for idx in np.ndindex(x.shape):
        xp, xm = x.copy(), x.copy()
        xp[idx] += h
        xm[idx] -= h
        num_dx[idx] = (np.sum(net.forward(xp) * up) - np.sum(net.forward(xm) * up)) / (2 * h)
    np.testing.assert_allclose(dx, num_dx, rtol=1e-5, atol=1e-8)


def test_backward_examples():
    net = tiny_net(3)
    net.forward(np.ones(3))
    grad, _ = net.backward(np.zeros(2))
    assert not grad.any()
    # single linear unit y = w.x + b: dL/dw = upstream * x, dL/db = upstream
    lin = Mlp([3, 1])
    lin.set_params([0.5, -1.0, 2.0, 0.1])
    x = np.array([[1.0, 2.0, 3.0], [-1.0, 0.0, 4.0]])
    up = np.array([[2.0], [0.5]])
    lin.forward(x)
    grad, dx = lin.backward(up)
    np.testing.assert_allclose(grad[:3], (x * up).sum(axis=0))
    assert grad[3] == 2.5
    np.testing.assert_allclose(dx, up * [0.5, -1.0, 2.0])


def test_relu_copy_and_rejects_unknown():
    net = tiny_net(0, activation="relu")
    twin = net.copy()
    x = np.linspace(-2, 2, 3)
    assert twin.activation == "relu" and twin.forward(x).tobytes() == net.forward(x).tobytes()
    with pytest.raises(ValueError):
        Mlp([2, 2], activation="sigmoid")


def test_stale_cache():
    net = tiny_net(0)
    with pytest.raises(StaleCache):
        net.backward(np.zeros(2))
    net.forward(np.ones(3))
    net.set_params(net.get_params())
    with pytest.raises(StaleCache):
        net.backward(np.zeros(2))


def frozen_batch(size=64, seed=0):
    rng = np.random.default_rng(seed)
    obs = rng.uniform(-1, 1, (size, 6))
    act = rng.uniform(-1, 1, (size, 2))
    rew = -np.sum(obs[:, :2] ** 2, axis=1) - 0.1 * np.sum(act ** 2, axis=1)
    next_obs = rng.uniform(-1, 1, (size, 6))
    return obs, act, rew, next_obs, np.zeros(size)


def test_gamma_zero_target_is_reward():
    agent = Td3LiteAgent(6, 2, AgentConfig(gamma=0.0), np.random.default_rng(0))
    _, _, rew, next_obs, done = frozen_batch()
    np.testing.assert_array_equal(agent.critic_targets(rew, next_obs, done, np.random.default_rng(1)), rew)


def test_soft_update_endpoints():
    rng = np.random.default_rng(0)
    online, target = tiny_net(0), tiny_net(1)
    before = target.get_params()
    soft_update(target, online, 0.0)
    assert target.get_params().tobytes() == before.tobytes()
    soft_update(target, online, 1.0)
    assert target.get_params().tobytes() == online.get_params().tobytes()
    target.set_params(before)
    soft_update(target, online, 0.3)
    lo = np.minimum(before, online.params) - 1e-15
    hi = np.maximum(before, online.params) + 1e-15
    assert np.all((target.params >= lo) & (target.params <= hi))
    del rng


REGRESSION = AgentConfig(gamma=0.0, target_noise=0.0, expl_noise=0.0, policy_delay=10**9)


@pytest.mark.xfail(reason="Adam is not a descent method; a few steps may tick up", strict=False)
def test_critic_loss_strictly_decreases_on_frozen_batch():
    agent = Td3LiteAgent(6, 2, REGRESSION, np.random.default_rng(0))
    batch = frozen_batch()
    rng = np.random.default_rng(1)
    losses = [agent.update(batch, rng)["critic1"] for _ in range(101)]
    assert all(b < a for a, b in zip(losses, losses[1:]))


def test_critic_fits_reward_regression():
    agent = Td3LiteAgent(6, 2, REGRESSION, np.random.default_rng(0))
    batch = frozen_batch()
    rng = np.random.default_rng(1)
    losses = [agent.update(batch, rng)["critic1"] for _ in range(300)]
    assert losses[-1] < 0.2 * losses[0]
    assert np.all(np.diff(np.convolve(losses, np.ones(10) / 10, mode="valid")[::10]) < 0)


@pytest.mark.parametrize("activation", ["relu", "tanh"])
def test_small_gradient_steps_strictly_decrease_loss(activation):
    # descent lemma: plain gradient steps small enough always reduce the loss
    critic = Mlp([8, 32, 32, 1], rng=np.random.default_rng(0), activation=activation)
    obs, act, rew, _, _ = frozen_batch()
    sa = np.concatenate([obs, act], axis=1)
    losses = []
    for _ in range(101):
        err = critic.forward(sa)[:, 0] - rew
        losses.append(0.5 * float(np.mean(err * err)))
        grad, _ = critic.backward((err / len(rew))[:, None])
        critic.set_params(critic.params - 1e-2 * grad)
    assert all(b < a for a, b in zip(losses, losses[1:]))


def test_replay_buffer():
    buf = ReplayBuffer(3, 1, 1)
    with pytest.raises(InsufficientData):
        buf.sample(1, np.random.default_rng(0))
    for k in range(5):
        buf.add([k], [0], float(k), [k + 1], 0.0)
    assert len(buf) == 3
    assert sorted(buf.rew) == [2.0, 3.0, 4.0]
    agent = Td3LiteAgent(6, 2, AgentConfig(batch_size=8), np.random.default_rng(0))
    with pytest.raises(InsufficientData):
        agent.learn(np.random.default_rng(0))


def test_adam_moves_against_gradient():
    net = Mlp([1, 1])
    net.set_params([1.0, 1.0])
    Adam(net.m, lr=0.1).step(net, np.array([2.0, -3.0]))
    np.testing.assert_allclose(net.params, [0.9, 1.1])


def test_score_auc_examples():
    assert score_auc([1, 3, 2]) == (3.0, 2.0)
    assert score_auc([4.5, 4.5]) == (4.5, 4.5)
    assert score_auc([-7.0]) == (-7.0, -7.0)
    with pytest.raises(EmptyInput):
        score_auc([])


def test_normalize_examples():
    assert normalize(100, 50, 150) == 0.5
    assert normalize(150, 50, 150) == 1.0
    assert normalize(50, 50, 150) == 0.0
    with pytest.raises(DegenerateBaseline):
        normalize(1, 2, 2)


def test_delta_stats_example():
    row = delta_stats(4, [10, -5, 20])
    assert row.avg == pytest.approx(8.33, abs=5e-3)
    assert row.avg_abs == pytest.approx(11.67, abs=5e-3)
    assert (row.max, row.min) == (20.0, -5.0)


SMALL = RunConfig(
    seed=3,
    max_steps=600,
    eval_interval=200,
    eval_episodes=3,
    archive_interval=50,
    agent=AgentConfig(warmup_steps=200, batch_size=32),
)


def test_train_is_deterministic():
    a, b = train(SMALL), train(SMALL)
    assert a.path.params.tobytes() == b.path.params.tobytes()
    assert a.path.steps.tobytes() == b.path.steps.tobytes()
    assert a.report.checkpoints == b.report.checkpoints
    assert a.report.random_baseline == b.report.random_baseline
    assert a.transforms == []
    assert [s for s, _ in a.report.checkpoints] == [200, 400, 600]
    assert list(a.path.steps) == list(range(0, 601, 50))
    assert [s.name for s in a.path.layers] == ["Layer1", "Layer2", "Layer3"]


def test_train_with_pptb_hook():
    pp = PptbConfig(r_t=4, r_b=2, p_b=0.1, t_s=25, t_p=200, capacity_k=20)
    res = train(SMALL.replace(pptb_enabled=True, pptb=pp))
    assert res.transforms == [200, 400, 600]
    short = train(SMALL.replace(pptb_enabled=True, pptb=dataclasses.replace(pp, t_p=1000)))
    assert short.transforms == []


def test_reconstruction_full_rank_is_exact():
    res = train(SMALL)
    d = min(res.path.n, res.path.m)
    rows = reconstruction_check(res.path, [1, 2, d], episodes=2, config=SMALL)
    assert rows[-1].r_t == d
    assert all(x == 0.0 for x in rows[-1].deltas)
