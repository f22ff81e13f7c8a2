"""Deterministic 2-D point mass driven towards a goal under a quadratic cost."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

OBS_DIM = 6
ACT_DIM = 2


@dataclass(frozen=True)
class EnvConfig:
    dt: float = 0.05
    action_cost: float = 0.1
    horizon: int = 200
    goal_x: float = 0.0
    goal_y: float = 0.0


class PointMassEnv:
    """Batched point mass: position/velocity arrays have shape ``(batch, 2)``.

    Observations are ``[position, velocity, goal]``.  Starting positions are
    uniform on ``[-1, 1]^2`` with zero velocity; each episode lasts exactly
    ``horizon`` steps.
    """

    def __init__(self, config: EnvConfig = EnvConfig(), batch: int = 1):
        self.config = config
        self.goal = np.array([config.goal_x, config.goal_y], dtype=np.float64)
        self.batch = batch
        self.position = np.zeros((batch, 2))
        self.velocity = np.zeros((batch, 2))
        self.t = 0

    @property
    def done(self) -> bool:
        return self.t >= self.config.horizon

    def observe(self) -> np.ndarray:
        goal = np.broadcast_to(self.goal, self.position.shape)
        return np.concatenate([self.position, self.velocity, goal], axis=1)

    def reset(self, rng: np.random.Generator) -> np.ndarray:
        self.position = rng.uniform(-1.0, 1.0, size=(self.batch, 2))
        self.velocity = np.zeros((self.batch, 2))
        self.t = 0
        return self.observe()

    def set_state(self, position, velocity) -> None:
        self.position = np.array(position, dtype=np.float64).reshape(self.batch, 2)
        self.velocity = np.array(velocity, dtype=np.float64).reshape(self.batch, 2)
        self.t = 0

    def step(self, action) -> tuple[np.ndarray, np.ndarray]:
        """Advance one step; returns ``(next_obs, reward)`` for every batch row."""
        a = np.clip(np.asarray(action, dtype=np.float64).reshape(self.batch, 2), -1.0, 1.0)
        dt = self.config.dt
        self.position = self.position + dt * self.velocity
        self.velocity = self.velocity + dt * a
        err = self.position - self.goal
        reward = -(np.sum(err * err, axis=1) + self.config.action_cost * np.sum(a * a, axis=1))
        self.t += 1
        return self.observe(), reward


def env_step(env: PointMassEnv, action) -> tuple[np.ndarray, float]:
    """Single-environment step returning ``(next_state, reward)``."""
    obs, reward = env.step(action)
    return obs[0], float(reward[0])
