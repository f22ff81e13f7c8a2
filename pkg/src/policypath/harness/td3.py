"""TD3-lite: twin critics, target policy smoothing and delayed actor updates."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InsufficientData, InvalidConfig
from .nets import Adam, Mlp


@dataclass(frozen=True)
class AgentConfig:
    """Agent hyperparameters.

    The point mass has unbounded states and quadratic costs, so a policy that
    saturates early flies off and floods the replay with huge costs.  The
    defaults guard against that: relu critics (no saturation on far states),
    a long warmup during which only the critics learn, a slow actor, a short
    discount horizon and fast-tracking target nets.
    """

    hidden: int = 32
    critic_hidden: int = 32
    critic_activation: str = "relu"
    actor_out_init: float = 3e-3
    gamma: float = 0.95
    tau: float = 0.05
    actor_lr: float = 1e-4
    critic_lr: float = 1e-3
    batch_size: int = 128
    policy_delay: int = 2
    expl_noise: float = 0.1
    target_noise: float = 0.2
    noise_clip: float = 0.5
    replay_capacity: int = 100_000
    warmup_steps: int = 3000

    def __post_init__(self):
        if self.critic_activation not in ("tanh", "relu"):
            raise InvalidConfig(f"critic_activation must be 'tanh' or 'relu', got {self.critic_activation!r}")


class ReplayBuffer:
    def __init__(self, capacity: int, obs_dim: int, act_dim: int):
        self.capacity = capacity
        self.obs = np.zeros((capacity, obs_dim))
        self.act = np.zeros((capacity, act_dim))
        self.rew = np.zeros(capacity)
        self.next_obs = np.zeros((capacity, obs_dim))
        self.done = np.zeros(capacity)
        self.ptr = 0
        self.size = 0

    def __len__(self) -> int:
        return self.size

    def add(self, obs, act, rew, next_obs, done) -> None:
        i = self.ptr
        self.obs[i], self.act[i], self.rew[i] = obs, act, rew
        self.next_obs[i], self.done[i] = next_obs, done
        self.ptr = (self.ptr + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch_size: int, rng: np.random.Generator):
        if self.size < batch_size:
            raise InsufficientData(f"replay holds {self.size} transitions, batch needs {batch_size}")
        idx = rng.integers(0, self.size, size=batch_size)
        return self.obs[idx], self.act[idx], self.rew[idx], self.next_obs[idx], self.done[idx]


def soft_update(target: Mlp, online: Mlp, tau: float) -> None:
    target.set_params((1.0 - tau) * target.params + tau * online.params)


class Td3LiteAgent:
    def __init__(self, obs_dim: int, act_dim: int, config: AgentConfig, rng: np.random.Generator):
        self.config = config
        self.obs_dim, self.act_dim = obs_dim, act_dim
        h, hc = config.hidden, config.critic_hidden
        self.actor = Mlp([obs_dim, h, h, act_dim], squash=True, rng=rng, out_init=config.actor_out_init)
        act_fn = config.critic_activation
        self.critic1 = Mlp([obs_dim + act_dim, hc, hc, 1], rng=rng, activation=act_fn)
        self.critic2 = Mlp([obs_dim + act_dim, hc, hc, 1], rng=rng, activation=act_fn)
        self.actor_target = self.actor.copy()
        self.critic1_target = self.critic1.copy()
        self.critic2_target = self.critic2.copy()
        self.actor_opt = Adam(self.actor.m, lr=config.actor_lr)
        self.critic1_opt = Adam(self.critic1.m, lr=config.critic_lr)
        self.critic2_opt = Adam(self.critic2.m, lr=config.critic_lr)
        self.replay = ReplayBuffer(config.replay_capacity, obs_dim, act_dim)
        self.updates = 0
        self.actor_updates = 0

    def act(self, obs, rng: np.random.Generator, explore: bool = True) -> np.ndarray:
        a = self.actor.predict(obs)
        if explore and self.config.expl_noise > 0:
            a = a + rng.normal(0.0, self.config.expl_noise, size=a.shape)
        return np.clip(a, -1.0, 1.0)

    def critic_targets(self, rew, next_obs, done, rng: np.random.Generator) -> np.ndarray:
        c = self.config
        next_act = self.actor_target.predict(next_obs)
        if c.target_noise > 0:
            noise = np.clip(rng.normal(0.0, c.target_noise, size=next_act.shape), -c.noise_clip, c.noise_clip)
            next_act = np.clip(next_act + noise, -1.0, 1.0)
        sa = np.concatenate([next_obs, next_act], axis=1)
        q_next = np.minimum(self.critic1_target.predict(sa), self.critic2_target.predict(sa))[:, 0]
        return rew + c.gamma * (1.0 - done) * q_next

    def update(self, batch, rng: np.random.Generator, train_actor: bool = True) -> dict:
        """One critic step on both critics; actor and target nets every `policy_delay` steps.

        With ``train_actor=False`` only the critics (and their targets) move,
        which is how the critics are fitted on warmup data.
        """
        obs, act, rew, next_obs, done = batch
        c = self.config
        n = obs.shape[0]
        target = self.critic_targets(rew, next_obs, done, rng)
        sa = np.concatenate([obs, act], axis=1)
        losses = {}
        for name, critic, opt in (("critic1", self.critic1, self.critic1_opt), ("critic2", self.critic2, self.critic2_opt)):
            err = critic.forward(sa)[:, 0] - target
            losses[name] = 0.5 * float(np.mean(err * err))
            grad, _ = critic.backward((err / n)[:, None])
            opt.step(critic, grad)
        self.updates += 1
        if self.updates % c.policy_delay != 0:
            return losses
        if train_actor:
            pi = self.actor.forward(obs)
            q = self.critic1.forward(np.concatenate([obs, pi], axis=1))
            losses["actor"] = -float(np.mean(q))
            _, dq_dsa = self.critic1.backward(np.full((n, 1), -1.0 / n))
            grad, _ = self.actor.backward(dq_dsa[:, self.obs_dim:])
            self.actor_opt.step(self.actor, grad)
            self.actor_updates += 1
            soft_update(self.actor_target, self.actor, c.tau)
        soft_update(self.critic1_target, self.critic1, c.tau)
        soft_update(self.critic2_target, self.critic2, c.tau)
        return losses

    def learn(self, rng: np.random.Generator, train_actor: bool = True) -> dict:
        return self.update(self.replay.sample(self.config.batch_size, rng), rng, train_actor)


def td3_update(agent: Td3LiteAgent, batch, rng: np.random.Generator) -> Td3LiteAgent:
    agent.update(batch, rng)
    return agent
