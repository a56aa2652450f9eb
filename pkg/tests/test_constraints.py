import math
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from rca import actions
from rca.constraints import (
    VIOLATION_DUPLICATE,
    VIOLATION_POOL_STREAK,
    VIOLATION_RECURSIVE,
    VIOLATION_ZERO_DIFF,
    PoolPolicy,
    check_duplicate,
    check_pool_streak,
    check_recursive,
    check_zero_diff,
    max_consecutive,
)
from rca.testing import planner_response

POLICY = PoolPolicy()


def invocation_for(name, **values):
    spec = actions.lookup(name)
    return actions.ActionInvocation(action=spec, values=dict(values))


def pool_a():
    return invocation_for("List Files", **{"directory path": "."})


def pool_b():
    return invocation_for("Execute Script", **{"script name": "m.py", "arguments": []})


def pool_c():
    return invocation_for("Reflection", **{"things to reflect on": "progress"})


class TestMaxConsecutive:
    def test_initial_limit_is_fifteen(self):
        assert max_consecutive(POLICY, 0) == 15

    def test_limit_at_step_100(self):
        # 15 * e^-1 = 5.518..., floored to 5
        assert math.floor(15 * math.exp(-1)) == 5
        assert max_consecutive(POLICY, 100) == 5

    def test_limit_at_step_400_clamps_to_floor(self):
        # 15 * e^-4 = 0.2747... < 1, clamped to the floor of 1
        assert 15 * math.exp(-4) < 1
        assert max_consecutive(POLICY, 400) == 1

    @given(st.integers(min_value=0, max_value=2000))
    def test_monotone_and_bounded(self, step):
        limit = max_consecutive(POLICY, step)
        assert POLICY.floor <= limit <= POLICY.k0
        assert limit >= max_consecutive(POLICY, step + 1)

    def test_bad_policy_rejected(self):
        with pytest.raises(ValueError):
            PoolPolicy(k0=0)
        with pytest.raises(ValueError):
            PoolPolicy(decay_rate=-0.5)


class TestPoolStreak:
    def test_full_streak_rejected(self):
        history = [pool_a() for _ in range(15)]
        verdict = check_pool_streak(POLICY, history, pool_a(), step=3)
        assert not verdict.allowed
        assert verdict.violation == VIOLATION_POOL_STREAK

    def test_other_pool_resets_streak(self):
        history = [pool_a() for _ in range(15)]
        assert check_pool_streak(POLICY, history, pool_b(), step=3).allowed

    def test_pool_c_never_limited(self):
        history = [pool_c() for _ in range(40)]
        assert check_pool_streak(POLICY, history, pool_c(), step=3).allowed

    def test_streak_below_limit_allowed(self):
        history = [pool_a() for _ in range(14)]
        assert check_pool_streak(POLICY, history, pool_a(), step=0).allowed

    def test_decayed_limit_applies(self):
        history = [pool_b() for _ in range(5)]
        # at step 100 the limit is 5, so a sixth consecutive B is rejected
        assert not check_pool_streak(POLICY, history, pool_b(), step=100).allowed
        assert check_pool_streak(POLICY, history, pool_b(), step=0).allowed


class TestDuplicate:
    def test_identical_repeat_rejected(self):
        first = invocation_for("Execute Script", **{"script name": "m.py", "arguments": []})
        second = invocation_for("Execute Script", **{"script name": "m.py", "arguments": []})
        verdict = check_duplicate([first], second)
        assert verdict.violation == VIOLATION_DUPLICATE

    def test_different_inputs_allowed(self):
        first = invocation_for("Execute Script", **{"script name": "m.py", "arguments": []})
        second = invocation_for(
            "Execute Script", **{"script name": "m.py", "arguments": ["--fast"]}
        )
        assert check_duplicate([first], second).allowed

    def test_different_ranges_allowed(self):
        first = invocation_for(
            "Inspect Script Lines",
            **{"script name": "a.py", "start line number": 1, "end line number": 10},
        )
        second = invocation_for(
            "Inspect Script Lines",
            **{"script name": "a.py", "start line number": 11, "end line number": 20},
        )
        assert check_duplicate([first], second).allowed

    def test_empty_history_allowed(self):
        assert check_duplicate([], pool_a()).allowed

    def test_non_adjacent_repeat_allowed(self):
        assert check_duplicate([pool_a(), pool_b()], pool_a()).allowed


class TestRecursive:
    def test_identical_response_rejected(self):
        text = planner_response("List Files", {"directory path": "."})
        verdict = check_recursive(text, text)
        assert verdict.violation == VIOLATION_RECURSIVE

    def test_whitespace_variation_still_rejected(self):
        text = planner_response("List Files", {"directory path": "."})
        mangled = text.replace("\n", "\n\n").replace(" ", "  ")
        assert check_recursive(text, mangled).violation == VIOLATION_RECURSIVE

    def test_embedded_second_action_heading_rejected(self):
        nested = planner_response(
            "List Files",
            '{"directory path": "."}\nAction: List Files\nthis is a nested response',
        )
        assert check_recursive(None, nested).violation == VIOLATION_RECURSIVE

    def test_distinct_responses_allowed(self):
        first = planner_response("List Files", {"directory path": "."})
        second = planner_response(
            "Inspect Script Lines",
            {"script name": "a.py", "start line number": 1, "end line number": 5},
        )
        assert check_recursive(first, second).allowed

    def test_first_response_has_no_previous(self):
        assert check_recursive(None, planner_response("List Files", {"directory path": "."})).allowed

    def test_action_input_heading_not_counted(self):
        # "Action Input:" must not count as a second "Action:" heading
        text = planner_response("List Files", {"directory path": "."})
        assert text.count("Action") == 2
        assert check_recursive(None, text).allowed


class TestZeroDiff:
    def test_zero_counts_rejected(self):
        assert check_zero_diff((0, 0)).violation == VIOLATION_ZERO_DIFF

    @pytest.mark.parametrize("counts", [(1, 0), (0, 2), (3, 3)])
    def test_nonzero_counts_allowed(self, counts):
        assert check_zero_diff(counts).allowed


def simulate_stream(seed, steps=40):
    """Random candidate stream filtered through the streak check; returns the
    longest accepted same-pool streak observed alongside the live limit."""
    rng = random.Random(seed)
    makers = [pool_a, pool_b, pool_c]
    history = []
    violations = 0
    for step in range(steps):
        candidate = rng.choice(makers)()
        verdict = check_pool_streak(POLICY, history, candidate, step)
        if verdict.allowed:
            history.append(candidate)
        else:
            violations += 1
        # invariant: trailing A/B streak never exceeds the current limit
        for pool in ("A", "B"):
            streak = 0
            for invocation in reversed(history):
                if invocation.action.pool != pool:
                    break
                streak += 1
            assert streak <= max(max_consecutive(POLICY, s) for s in range(step + 1))
    return violations


@given(st.integers(min_value=0, max_value=10_000))
def test_streak_invariant_random_streams(seed):
    simulate_stream(seed, steps=30)


def test_rejection_does_not_mutate_history():
    history = [pool_a() for _ in range(15)]
    before = list(history)
    check_pool_streak(POLICY, history, pool_a(), step=0)
    check_duplicate(history, pool_a())
    assert history == before
