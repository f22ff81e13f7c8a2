"""Training loop with the PPTB hook, evaluation protocol and reconstruction check."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from ..config import RunConfig
from ..errors import DegenerateBaseline, EmptyInput, InvalidRank, PathTooShort
from ..linalg import temporal_svd
from ..path_metrics import ParameterPath
from ..pptb import PolicyPathBuffer, Transformed, ppt, scheduler_step
from .env import ACT_DIM, OBS_DIM, EnvConfig, PointMassEnv
from .nets import Mlp
from .td3 import Td3LiteAgent

log = logging.getLogger(__name__)

RECON_GRID = (1, 2, 4, 8, 16, 32, 64, 128)


def score_auc(eval_returns: Sequence[float]) -> tuple[float, float]:
    """SCORE is the best averaged evaluation return, AUC the mean of them."""
    returns = np.asarray(eval_returns, dtype=np.float64)
    if returns.size == 0:
        raise EmptyInput("no evaluation returns")
    return float(returns.max()), float(returns.mean())


def normalize(metric: float, random_baseline: float, base_algo: float) -> float:
    """Rescale so the random agent maps to 0 and the base algorithm to 1."""
    span = base_algo - random_baseline
    if span == 0:
        raise DegenerateBaseline("base algorithm and random baseline coincide")
    return (metric - random_baseline) / span


@dataclass
class EvalReport:
    checkpoints: list[tuple[int, float]]
    random_baseline: Optional[float] = None
    normalized_score: Optional[float] = None
    normalized_auc: Optional[float] = None

    @property
    def returns(self) -> np.ndarray:
        return np.array([r for _, r in self.checkpoints])

    @property
    def score(self) -> float:
        return score_auc(self.returns)[0]

    @property
    def auc(self) -> float:
        return score_auc(self.returns)[1]

    def normalize_against(self, base: "EvalReport") -> None:
        """Fill the normalized fields relative to a base-algorithm report."""
        if self.random_baseline is None:
            raise ValueError("report has no random baseline")
        self.normalized_score = normalize(self.score, self.random_baseline, base.score)
        self.normalized_auc = normalize(self.auc, self.random_baseline, base.auc)


@dataclass
class TrainResult:
    path: ParameterPath
    report: EvalReport
    transforms: list[int] = field(default_factory=list)
    seed: int = 0


def eval_starts(seed: int, episodes: int) -> np.ndarray:
    """Start positions shared by every evaluation that uses the same seed."""
    return np.random.default_rng([seed, 0xE7A1]).uniform(-1.0, 1.0, size=(episodes, 2))


def evaluate_policy(policy, env_config: EnvConfig, starts: np.ndarray) -> float:
    """Average undiscounted return of a deterministic policy over all starts.

    `policy` maps a batch of observations to a batch of actions.
    """
    env = PointMassEnv(env_config, batch=starts.shape[0])
    env.set_state(starts, np.zeros_like(starts))
    obs = env.observe()
    total = np.zeros(starts.shape[0])
    while not env.done:
        obs, reward = env.step(policy(obs))
        total += reward
    return float(total.mean())


def random_policy_return(env_config: EnvConfig, starts: np.ndarray, seed: int) -> float:
    rng = np.random.default_rng([seed, 0x5A4D])
    return evaluate_policy(lambda obs: rng.uniform(-1.0, 1.0, size=(obs.shape[0], ACT_DIM)), env_config, starts)


def optimal_return_bound(env_config: EnvConfig, starts: np.ndarray) -> float:
    """Best achievable average return from `starts`, ignoring the action clamp.

    Each axis is an independent finite-horizon LQR problem with state
    ``(x - g, v)``, stage cost ``(x + dt v - g)^2 + c a^2`` and no terminal
    cost, so the optimum is ``-s0' P0 s0`` from the backward Riccati pass.
    Dropping the clamp only enlarges the feasible set, hence an upper bound.
    """
    dt, c = env_config.dt, env_config.action_cost
    a = np.array([[1.0, dt], [0.0, 1.0]])
    b = np.array([[0.0], [dt]])
    q = np.outer([1.0, dt], [1.0, dt])
    p = np.zeros((2, 2))
    for _ in range(env_config.horizon):
        gain = np.linalg.solve(c + b.T @ p @ b, b.T @ p @ a)
        p = q + a.T @ p @ a - a.T @ p @ b @ gain
    goal = np.array([env_config.goal_x, env_config.goal_y])
    offset = np.asarray(starts, dtype=np.float64) - goal
    # zero initial velocity, so only P[0, 0] matters
    return float(-(p[0, 0] * np.sum(offset * offset, axis=1)).mean())


def make_actor(config: RunConfig) -> Mlp:
    h = config.agent.hidden
    return Mlp([OBS_DIM, h, h, ACT_DIM], squash=True)


def params_return(params: np.ndarray, actor: Mlp, env_config: EnvConfig, starts: np.ndarray) -> float:
    actor.set_params(params)
    return evaluate_policy(actor.predict, env_config, starts)


def train(config: RunConfig) -> TrainResult:
    """Run one seeded training job and return its archived path and report.

    The actor is snapshotted at step 0 and every ``archive_interval`` steps
    (after any transform at that step).  With PPTB enabled the scheduler
    stores into its own FIFO every ``t_s`` steps and rewrites the actor every
    ``t_p`` steps.
    """
    root = np.random.SeedSequence(config.seed)
    init_ss, env_ss, act_ss, learn_ss = root.spawn(4)
    agent = Td3LiteAgent(OBS_DIM, ACT_DIM, config.agent, np.random.default_rng(init_ss))
    env = PointMassEnv(config.env)
    env_rng = np.random.default_rng(env_ss)
    act_rng = np.random.default_rng(act_ss)
    learn_rng = np.random.default_rng(learn_ss)
    starts = eval_starts(config.seed, config.eval_episodes)

    pptb_cfg = config.pptb
    buffer = PolicyPathBuffer(pptb_cfg.capacity_k)
    buffer.push(0, agent.actor.params)
    archive_steps = [0]
    archive_rows = [agent.actor.get_params()]
    checkpoints = []
    transforms = []

    obs = env.reset(env_rng)[0]
    for t in range(1, config.max_steps + 1):
        if t <= config.agent.warmup_steps:
            action = act_rng.uniform(-1.0, 1.0, size=ACT_DIM)
        else:
            action = agent.act(obs, act_rng)
        next_obs, reward = env.step(action)
        # time-limit ends are truncations, not terminal states
        agent.replay.add(obs, action, reward[0], next_obs[0], 0.0)
        obs = next_obs[0]
        if env.done:
            obs = env.reset(env_rng)[0]
        # the critics already fit the random warmup data; the actor waits
        if len(agent.replay) >= config.agent.batch_size:
            agent.learn(learn_rng, train_actor=t > config.agent.warmup_steps)
        if config.pptb_enabled:
            step_action = scheduler_step(t, pptb_cfg, buffer, agent.actor.params, agent.actor.layers)
            if isinstance(step_action, Transformed):
                agent.actor.set_params(step_action.params)
                transforms.append(t)
        if t % config.archive_interval == 0:
            archive_steps.append(t)
            archive_rows.append(agent.actor.get_params())
        if t % config.eval_interval == 0:
            ret = evaluate_policy(agent.actor.predict, config.env, starts)
            checkpoints.append((t, ret))
            log.debug("seed %d step %d return %.3f", config.seed, t, ret)

    path = ParameterPath(steps=np.array(archive_steps), params=np.stack(archive_rows), layers=agent.actor.layers)
    report = EvalReport(checkpoints=checkpoints, random_baseline=random_policy_return(config.env, starts, config.seed))
    return TrainResult(path=path, report=report, transforms=transforms, seed=config.seed)


def train_many(config: RunConfig, seeds: Iterable[int], processes: Optional[int] = None) -> list[TrainResult]:
    """Train one run per seed, optionally in isolated worker processes."""
    configs = [config.replace(seed=int(s)) for s in seeds]
    if processes is None or processes <= 1:
        return [train(c) for c in configs]
    import multiprocessing as mp

    with mp.get_context("spawn").Pool(processes) as pool:
        return pool.map(train, configs)


def aggregate(values: Sequence[float]) -> tuple[float, float]:
    """Mean and (population) standard deviation across independent runs."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise EmptyInput("nothing to aggregate")
    return float(arr.mean()), float(arr.std())


@dataclass(frozen=True)
class ReconRow:
    r_t: int
    avg: float
    avg_std: float
    avg_abs: float
    avg_abs_std: float
    max: float
    min: float
    deltas: tuple[float, ...] = ()


def delta_stats(r_t: int, deltas: Sequence[float]) -> ReconRow:
    d = np.asarray(deltas, dtype=np.float64)
    if d.size == 0:
        raise EmptyInput("no return deltas")
    absd = np.abs(d)
    return ReconRow(
        r_t=r_t,
        avg=float(d.mean()),
        avg_std=float(d.std()),
        avg_abs=float(absd.mean()),
        avg_abs_std=float(absd.std()),
        max=float(d.max()),
        min=float(d.min()),
        deltas=tuple(float(x) for x in d),
    )


def reconstruction_check(
    path: ParameterPath,
    r_t_grid: Sequence[int] = RECON_GRID,
    episodes: int = 10,
    config: RunConfig = RunConfig(),
    policies: Optional[Sequence[int]] = None,
    eval_seed: int = 0,
) -> list[ReconRow]:
    """Return gap between each stored policy and its rank-``r_t`` rebuild.

    ``Delta_R(theta_i) = return(ppt(theta_i)) - return(theta_i)`` with both
    policies run from the same start states.  `policies` restricts the check
    to a subset of snapshot indices (all by default).
    """
    if path.n < 2:
        raise PathTooShort("reconstruction check needs at least 2 snapshots")
    svd = temporal_svd(path.params, steps=path.steps)
    grid = [int(r) for r in r_t_grid]
    for r in grid:
        if not 1 <= r <= svd.d:
            raise InvalidRank(f"r_t {r} outside [1, {svd.d}]")
    idx = list(range(path.n)) if policies is None else [int(i) for i in policies]
    actor = make_actor(config)
    if actor.m != path.m:
        raise ValueError(f"path has {path.m} parameters but the configured actor has {actor.m}")
    starts = eval_starts(eval_seed, episodes)
    base = [params_return(path.params[i], actor, config.env, starts) for i in idx]
    rows = []
    for r in grid:
        deltas = [params_return(ppt(svd, i, r), actor, config.env, starts) - b for i, b in zip(idx, base)]
        rows.append(delta_stats(r, deltas))
    return rows
