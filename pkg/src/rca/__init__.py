"""Plan-and-edit agent for turning methodology descriptions into code.

The package wires a planning loop (six-section responses, LLM cascade,
pool/duplicate/recursive/zero-diff guards) to persona workers acting on a
sandboxed workspace, with a record/replay gateway that makes every run
reproducible offline, plus the metric suite used to evaluate runs.
"""

__version__ = "0.1.0"

from .actions import ActionInvocation, ActionSpec, lookup, parse_invocation, pool_of
from .config import AgentConfig, load_config
from .constraints import (
    ConstraintVerdict,
    PoolPolicy,
    check_duplicate,
    check_pool_streak,
    check_recursive,
    check_zero_diff,
    max_consecutive,
)
from .evaluation import (
    MetricsReport,
    RunAssessment,
    RunMetrics,
    aggregate,
    bin_quality,
    classify_outcome,
    lines_edited,
    time_saving,
)
from .executor import ExecutionReport, LineTrace, execute_script, parse_cover_file
from .gateway import CassetteEntry, Gateway, load_cassette, save_cassette
from .planner import (
    GENERATED_SCRIPT_NAME,
    PlannerLoop,
    RunResult,
    build_prompt,
    run_loop,
    run_prescribed,
    run_single_call,
)
from .research_log import ResearchLog, StepRecord
from .responses import PlannerResponse, parse_planner_response
from .workers import SubpartReport, WorkerPool
from .workspace import KnownFile, Workspace

__all__ = [
    "ActionInvocation",
    "ActionSpec",
    "AgentConfig",
    "CassetteEntry",
    "ConstraintVerdict",
    "ExecutionReport",
    "GENERATED_SCRIPT_NAME",
    "Gateway",
    "KnownFile",
    "LineTrace",
    "MetricsReport",
    "PlannerLoop",
    "PlannerResponse",
    "PoolPolicy",
    "ResearchLog",
    "RunAssessment",
    "RunMetrics",
    "RunResult",
    "StepRecord",
    "SubpartReport",
    "WorkerPool",
    "Workspace",
    "aggregate",
    "bin_quality",
    "build_prompt",
    "check_duplicate",
    "check_pool_streak",
    "check_recursive",
    "check_zero_diff",
    "classify_outcome",
    "execute_script",
    "lines_edited",
    "load_cassette",
    "load_config",
    "lookup",
    "max_consecutive",
    "parse_cover_file",
    "parse_invocation",
    "parse_planner_response",
    "pool_of",
    "run_loop",
    "run_prescribed",
    "run_single_call",
    "save_cassette",
    "time_saving",
]
