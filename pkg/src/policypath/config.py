"""Run configuration and its ``key = value`` text format.

Lines are ``key = value``; blank lines and ``#`` comments are ignored.
Recognized keys are the top-level run settings, ``pptb.*`` (transform
schedule), ``env.*`` and ``agent.*``.  Unknown keys are rejected.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

from .errors import InvalidConfig
from .harness.env import EnvConfig
from .harness.td3 import AgentConfig
from .pptb import PptbConfig


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    max_steps: int = 30_000
    eval_interval: int = 1000
    eval_episodes: int = 10
    archive_interval: int = 100
    pptb_enabled: bool = False
    pptb: PptbConfig = field(default_factory=lambda: PptbConfig(r_t=16, t_p=1000, capacity_k=200))
    env: EnvConfig = field(default_factory=EnvConfig)
    agent: AgentConfig = field(default_factory=AgentConfig)

    def __post_init__(self):
        for name in ("max_steps", "eval_interval", "eval_episodes", "archive_interval"):
            if getattr(self, name) < 1:
                raise InvalidConfig(f"{name} must be >= 1")
        if self.seed < 0:
            raise InvalidConfig("seed must be >= 0")
        if self.env.horizon < 1 or self.env.dt <= 0 or self.env.action_cost < 0:
            raise InvalidConfig("env.horizon >= 1, env.dt > 0 and env.action_cost >= 0 are required")
        a = self.agent
        if not (0 <= a.gamma <= 1 and 0 <= a.tau <= 1):
            raise InvalidConfig("agent.gamma and agent.tau must lie in [0, 1]")
        if a.batch_size < 1 or a.policy_delay < 1 or a.hidden < 1 or a.critic_hidden < 1:
            raise InvalidConfig("agent sizes, batch_size and policy_delay must be >= 1")
        if a.replay_capacity < a.batch_size:
            raise InvalidConfig("agent.replay_capacity must be >= agent.batch_size")
        self.pptb.validate()

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)


def _coerce(raw: str, current, key: str):
    if isinstance(current, bool):
        low = raw.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise InvalidConfig(f"{key}: expected a boolean, got {raw!r}")
    try:
        if isinstance(current, int):
            return int(raw)
        if isinstance(current, float):
            return float(raw)
    except ValueError:
        raise InvalidConfig(f"{key}: cannot parse {raw!r} as {type(current).__name__}") from None
    return raw


def parse_run_config(text: str) -> RunConfig:
    top: dict = {}
    sections: dict[str, dict] = {"pptb": {}, "env": {}, "agent": {}}
    base = RunConfig()
    defaults = {"pptb": base.pptb, "env": base.env, "agent": base.agent}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidConfig(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key == "pptb.enabled":
            top["pptb_enabled"] = _coerce(raw, False, key)
            continue
        if "." in key:
            section, name = key.split(".", 1)
            if section not in sections or not any(f.name == name for f in dataclasses.fields(defaults[section])):
                raise InvalidConfig(f"line {lineno}: unknown key {key!r}")
            sections[section][name] = _coerce(raw, getattr(defaults[section], name), key)
            continue
        if key not in ("seed", "max_steps", "eval_interval", "eval_episodes", "archive_interval"):
            raise InvalidConfig(f"line {lineno}: unknown key {key!r}")
        top[key] = _coerce(raw, getattr(base, key), key)
    pptb = PptbConfig(**{**dataclasses.asdict(base.pptb), **sections["pptb"]})
    return RunConfig(
        **top,
        pptb=pptb,
        env=dataclasses.replace(base.env, **sections["env"]),
        agent=dataclasses.replace(base.agent, **sections["agent"]),
    )


def load_run_config(path: Union[str, Path]) -> RunConfig:
    return parse_run_config(Path(path).read_text())


def format_run_config(config: RunConfig) -> str:
    lines = [
        f"seed = {config.seed}",
        f"max_steps = {config.max_steps}",
        f"eval_interval = {config.eval_interval}",
        f"eval_episodes = {config.eval_episodes}",
        f"archive_interval = {config.archive_interval}",
        f"pptb.enabled = {str(config.pptb_enabled).lower()}",
    ]
    for section in ("pptb", "env", "agent"):
        for k, v in dataclasses.asdict(getattr(config, section)).items():
            if isinstance(v, bool):
                value = str(v).lower()
            else:
                value = v if isinstance(v, str) else repr(v)
            lines.append(f"{section}.{k} = {value}")
    return "\n".join(lines) + "\n"
