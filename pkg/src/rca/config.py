"""Run configuration: model roles, constraint policy, memory, executor.

A single TOML file configures everything; every section is optional and
falls back to the defaults below (planner temperature 0.8, worker 0.2,
validity-retry budgets 8/4/1, pool limit 15 decaying at 0.01).
"""

import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import UsageError

BASE_PLANNER = "base_planner"
INTERMEDIATE_PLANNER = "intermediate_planner"
EXPERT_PLANNER = "expert_planner"
WORKER = "worker"

PLANNER_TEMPERATURE = 0.8
WORKER_TEMPERATURE = 0.2

CONFIG_ENV_VAR = "RCA_CONFIG"


@dataclass
class RoleConfig:
    """Binding of one model role to a provider."""

    tag: str
    temperature: float
    retry_budget: int
    provider: str = "http"
    model: str = ""
    endpoint: str = ""
    credential_env: str = ""


@dataclass
class ConstraintsConfig:
    k0: int = 15
    decay_rate: float = 0.01
    floor: int = 1


@dataclass
class MemoryConfig:
    window: int = 3
    observation_threshold: int = 4000


@dataclass
class ExecutorConfig:
    timeout: float = 1800.0
    backend: str = "plain"
    trace_command: str = "trace_shim"


@dataclass
class AgentConfig:
    roles: Dict[str, RoleConfig] = field(default_factory=dict)
    constraints: ConstraintsConfig = field(default_factory=ConstraintsConfig)
    memory: MemoryConfig = field(default_factory=MemoryConfig)
    executor: ExecutorConfig = field(default_factory=ExecutorConfig)
    expert_help_budget: int = 3
    max_steps: int = 50
    worker_file_chunk: int = 12000
    worker_retry_budget: int = 8
    transport_retries: int = 2

    def __post_init__(self) -> None:
        for tag, temperature, budget in _ROLE_DEFAULTS:
            self.roles.setdefault(tag, RoleConfig(tag, temperature, budget))

    def cascade_levels(self) -> List[Tuple[str, int]]:
        """Planner escalation order with per-level validity-retry budgets."""
        return [
            (tag, self.roles[tag].retry_budget)
            for tag in (BASE_PLANNER, INTERMEDIATE_PLANNER, EXPERT_PLANNER)
        ]

    def credential_env_vars(self) -> List[str]:
        return sorted({r.credential_env for r in self.roles.values() if r.credential_env})


_ROLE_DEFAULTS = [
    (BASE_PLANNER, PLANNER_TEMPERATURE, 8),
    (INTERMEDIATE_PLANNER, PLANNER_TEMPERATURE, 4),
    (EXPERT_PLANNER, PLANNER_TEMPERATURE, 1),
    (WORKER, WORKER_TEMPERATURE, 8),
]


def _role_from_table(tag: str, table: dict, default: RoleConfig) -> RoleConfig:
    return RoleConfig(
        tag=tag,
        temperature=float(table.get("temperature", default.temperature)),
        retry_budget=int(table.get("retry_budget", default.retry_budget)),
        provider=str(table.get("provider", default.provider)),
        model=str(table.get("model", default.model)),
        endpoint=str(table.get("endpoint", default.endpoint)),
        credential_env=str(table.get("credential_env", default.credential_env)),
    )


def load_config(path: Optional[Path] = None) -> AgentConfig:
    """Load a TOML config file; missing path means built-in defaults."""
    if path is None:
        env_path = os.environ.get(CONFIG_ENV_VAR)
        if not env_path:
            return AgentConfig()
        path = Path(env_path)
    try:
        raw = tomllib.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise UsageError(f"config file not found: {path}")
    except tomllib.TOMLDecodeError as exc:
        raise UsageError(f"config file {path} is not valid TOML: {exc}")

    config = AgentConfig()
    for tag, table in raw.get("roles", {}).items():
        if tag not in config.roles:
            raise UsageError(
                f"unknown role {tag!r} in config; expected one of "
                f"{sorted(config.roles)}"
            )
        config.roles[tag] = _role_from_table(tag, table, config.roles[tag])
    c = raw.get("constraints", {})
    config.constraints = ConstraintsConfig(
        k0=int(c.get("k0", config.constraints.k0)),
        decay_rate=float(c.get("decay_rate", config.constraints.decay_rate)),
        floor=int(c.get("floor", config.constraints.floor)),
    )
    m = raw.get("memory", {})
    config.memory = MemoryConfig(
        window=int(m.get("window", config.memory.window)),
        observation_threshold=int(
            m.get("observation_threshold", config.memory.observation_threshold)
        ),
    )
    e = raw.get("executor", {})
    config.executor = ExecutorConfig(
        timeout=float(e.get("timeout", config.executor.timeout)),
        backend=str(e.get("backend", config.executor.backend)),
        trace_command=str(e.get("trace_command", config.executor.trace_command)),
    )
    run = raw.get("run", {})
    config.expert_help_budget = int(run.get("expert_help_budget", config.expert_help_budget))
    config.max_steps = int(run.get("max_steps", config.max_steps))
    config.worker_file_chunk = int(run.get("worker_file_chunk", config.worker_file_chunk))
    config.worker_retry_budget = int(run.get("worker_retry_budget", config.worker_retry_budget))
    config.transport_retries = int(run.get("transport_retries", config.transport_retries))
    return config
