"""Programmatic guards on planner behavior.

Four checks: same-pool streak limits with exponential decay, consecutive
duplicate actions, recursive (non-terminating) responses, and zero-diff
edits. All are pure functions producing verdicts; rejections never mutate
run state, and their messages are fed back to the planner on retry.
"""

import math
import re
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

from .actions import ActionInvocation, POOL_C

VIOLATION_POOL_STREAK = "pool_streak"
VIOLATION_DUPLICATE = "duplicate_action"
VIOLATION_RECURSIVE = "recursive_response"
VIOLATION_ZERO_DIFF = "zero_diff"

_ACTION_HEADING = re.compile(r"^Action:", re.MULTILINE)


@dataclass(frozen=True)
class PoolPolicy:
    k0: int = 15
    decay_rate: float = 0.01
    floor: int = 1

    def __post_init__(self) -> None:
        if not (self.k0 >= self.floor >= 1):
            raise ValueError(f"require k0 >= floor >= 1, got k0={self.k0} floor={self.floor}")
        if self.decay_rate < 0:
            raise ValueError(f"decay_rate must be >= 0, got {self.decay_rate}")


@dataclass(frozen=True)
class ConstraintVerdict:
    allowed: bool
    violation: Optional[str] = None
    message: str = ""

    def __post_init__(self) -> None:
        assert self.allowed == (self.violation is None)


_ALLOWED = ConstraintVerdict(allowed=True)


def max_consecutive(policy: PoolPolicy, step: int) -> int:
    """Streak limit at a 0-based planner step: max(floor, ⌊k0·e^(−rate·t)⌋)."""
    if step < 0:
        raise ValueError(f"step must be >= 0, got {step}")
    return max(policy.floor, math.floor(policy.k0 * math.exp(-policy.decay_rate * step)))


def _trailing_streak(history: Sequence[ActionInvocation], pool: str) -> int:
    streak = 0
    for invocation in reversed(history):
        if invocation.action.pool != pool:
            break
        streak += 1
    return streak


def check_pool_streak(
    policy: PoolPolicy,
    history: Sequence[ActionInvocation],
    candidate: ActionInvocation,
    step: int,
) -> ConstraintVerdict:
    """Reject pool A/B candidates that would extend a maxed-out streak."""
    pool = candidate.action.pool
    if pool == POOL_C:
        return _ALLOWED
    limit = max_consecutive(policy, step)
    streak = _trailing_streak(history, pool)
    if streak >= limit:
        return ConstraintVerdict(
            allowed=False,
            violation=VIOLATION_POOL_STREAK,
            message=(
                f"The last {streak} actions were all from pool {pool} and the "
                f"current limit on consecutive same-pool actions is {limit}. "
                f"Choose an action from a different pool."
            ),
        )
    return _ALLOWED


def check_duplicate(
    history: Sequence[ActionInvocation], candidate: ActionInvocation
) -> ConstraintVerdict:
    """Reject a candidate identical (name and inputs) to the previous action."""
    if history and candidate.same_call(history[-1]):
        return ConstraintVerdict(
            allowed=False,
            violation=VIOLATION_DUPLICATE,
            message=(
                f"The previous action was already {candidate.describe()}; "
                f"repeating it with identical inputs is not allowed. Change the "
                f"inputs or pick a different action."
            ),
        )
    return _ALLOWED


def _normalize_whitespace(text: str) -> str:
    return " ".join(text.split())


def check_recursive(
    previous_response_text: Optional[str], candidate_response_text: str
) -> ConstraintVerdict:
    """Reject verbatim repeats of the previous response and nested responses."""
    if len(_ACTION_HEADING.findall(candidate_response_text)) > 1:
        return ConstraintVerdict(
            allowed=False,
            violation=VIOLATION_RECURSIVE,
            message=(
                "The response contains more than one 'Action:' heading; emit "
                "exactly one action per response."
            ),
        )
    if previous_response_text is not None and _normalize_whitespace(
        candidate_response_text
    ) == _normalize_whitespace(previous_response_text):
        return ConstraintVerdict(
            allowed=False,
            violation=VIOLATION_RECURSIVE,
            message=(
                "The response repeats the previous response verbatim; produce "
                "a new reasoning step instead of looping."
            ),
        )
    return _ALLOWED


def check_zero_diff(edit_diff_counts: Tuple[int, int]) -> ConstraintVerdict:
    """Reject edit actions whose saved script is identical to the source."""
    additions, deletions = edit_diff_counts
    if additions == 0 and deletions == 0:
        return ConstraintVerdict(
            allowed=False,
            violation=VIOLATION_ZERO_DIFF,
            message=(
                "The edit produced no change (0 additions, 0 deletions); the "
                "no-op save was undone. Give edit instructions that actually "
                "modify the script."
            ),
        )
    return _ALLOWED
