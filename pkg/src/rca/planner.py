"""The agent control loop.

Each step: assemble the prompt (problem statement, action catalog, long-term
summary, last-3 responses, response format), ask the planner cascade for a
valid six-section response, dispatch the chosen action, and append the step
to the research log. Invalid attempts burn the current cascade level's
retry budget and escalate base -> intermediate -> expert; rejected edits
(zero diff) are undone and retried within the same step.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from . import actions, constraints, executor
from .actions import ActionInvocation, render_catalog
from .config import (
    BASE_PLANNER,
    EXPERT_PLANNER,
    AgentConfig,
)
from .errors import (
    ActionInputError,
    ActionLookupError,
    RcaError,
    ResponseFormatError,
)
from .gateway import Gateway
from .prompts import load_template
from .research_log import ResearchLog, StepRecord, compose_step_summary
from .responses import PlannerResponse, parse_planner_response
from .workers import WorkerPool, render_subpart_reports
from .workspace import (
    ROLE_DATASET,
    ROLE_METHODOLOGY,
    ROLE_PSEUDOCODE,
    ROLE_STARTER_CODE,
    ROLE_STARTER_PERFORMANCE,
    ROLE_SUBPART,
    ROLE_SUPPLEMENTARY,
    Workspace,
)

MODE_AGENT = "agent"
MODE_PRESCRIBED = "prescribed"
MODE_SINGLE = "single"
RUN_MODES = (MODE_AGENT, MODE_PRESCRIBED, MODE_SINGLE)

TERMINATION_FINAL_ANSWER = "final_answer"
TERMINATION_MAX_STEPS = "max_steps"
TERMINATION_CASCADE_EXHAUSTED = "cascade_exhausted"
TERMINATION_ABORTED = "aborted"

GENERATED_SCRIPT_NAME = "methodology_implementation.py"

EDIT_ACTIONS = ("Edit Script", "Edit Script with Context")

SECTION_PROBLEM = "=== PROBLEM STATEMENT ==="
SECTION_ACTIONS = "=== AVAILABLE ACTIONS ==="
SECTION_SUMMARY = "=== RESEARCH LOG SUMMARY (LONG-TERM MEMORY) ==="
SECTION_RECENT = "=== RECENT STEPS (SHORT-TERM MEMORY) ==="
SECTION_FORMAT = "=== RESPONSE FORMAT ==="
SECTION_FEEDBACK = "=== CONSTRAINT FEEDBACK ==="


@dataclass
class RunResult:
    termination: str
    steps_taken: int
    final_answer_text: Optional[str] = None
    generated_script: Optional[str] = None


@dataclass
class _StepContext:
    """Retry bookkeeping for one planner step, shared across re-validation."""

    violations: List[str] = field(default_factory=list)
    attempts: Dict[str, int] = field(default_factory=dict)
    level_index: int = 0


@dataclass
class _DispatchOutcome:
    observation: str
    final_answer: bool = False
    edit_counts: Optional[Tuple[int, int]] = None
    edit_target: Optional[str] = None


class CascadeExhausted(RcaError):
    """Every cascade level burned its retry budget without a valid response."""


def build_prompt(
    problem_statement: str,
    action_catalog: str,
    long_term_summary: str,
    short_term_records: List[StepRecord],
    response_format: str,
) -> str:
    """Deterministic prompt assembly in the fixed section order."""
    parts = [
        load_template("planner_persona.txt").strip(),
        "",
        SECTION_PROBLEM,
        problem_statement.strip(),
        "",
        SECTION_ACTIONS,
        action_catalog,
        "",
    ]
    if long_term_summary.strip():
        parts.extend([SECTION_SUMMARY, long_term_summary.strip(), ""])
    if short_term_records:
        parts.append(SECTION_RECENT)
        for record in short_term_records:
            parts.extend(
                [
                    f"--- Step {record.index} response ---",
                    record.response.raw_text.strip(),
                    f"--- Step {record.index} observation ---",
                    record.observation_shown,
                    "",
                ]
            )
    parts.extend([SECTION_FORMAT, response_format.strip(), ""])
    return "\n".join(parts)


def render_problem_statement(workspace: Workspace, mode: str) -> str:
    template_name = {
        MODE_AGENT: "problem_statement_agent.txt",
        MODE_PRESCRIBED: "problem_statement_prescribed.txt",
    }[mode]
    return load_template(template_name).format(
        methodology_file=workspace.path_for_role(ROLE_METHODOLOGY),
        dataset_file=workspace.path_for_role(ROLE_DATASET),
        pseudocode_file=workspace.path_for_role(ROLE_PSEUDOCODE),
        starter_code_file=workspace.path_for_role(ROLE_STARTER_CODE),
        performance_file=workspace.path_for_role(ROLE_STARTER_PERFORMANCE),
        generated_file=GENERATED_SCRIPT_NAME,
    )


def render_single_call_prompt(workspace: Workspace) -> str:
    """The one-pass baseline prompt embedding every input file's full text."""
    extra = []
    for known in workspace.files_with_role(ROLE_SUBPART):
        i, j = known.subpart_index
        extra.append(
            f"SUBPART_{i}_{j} CODE:\n\n{workspace.read_file(known.relative_path)}\n\n"
        )
    for known in workspace.files_with_role(ROLE_SUPPLEMENTARY):
        extra.append(
            f"SUPPLEMENTARY FILE {known.relative_path}:\n\n"
            f"{workspace.read_file(known.relative_path)}\n\n"
        )
    return load_template("single_call.txt").format(
        methodology=workspace.read_file(workspace.path_for_role(ROLE_METHODOLOGY)),
        starter_code=workspace.read_file(workspace.path_for_role(ROLE_STARTER_CODE)),
        data=workspace.read_file(workspace.path_for_role(ROLE_DATASET)),
        pseudocode=workspace.read_file(workspace.path_for_role(ROLE_PSEUDOCODE)),
        starter_code_performance=workspace.read_file(
            workspace.path_for_role(ROLE_STARTER_PERFORMANCE)
        ),
        extra_sections="".join(extra),
    )


class PlannerLoop:
    """One run of the agent against a workspace."""

    def __init__(
        self,
        workspace: Workspace,
        gateway: Gateway,
        config: AgentConfig,
        run_dir: Path,
        mode: str = MODE_AGENT,
    ):
        if mode not in (MODE_AGENT, MODE_PRESCRIBED):
            raise RcaError(f"PlannerLoop runs agent/prescribed modes, not {mode!r}")
        self.workspace = workspace
        self.gateway = gateway
        self.config = config
        self.run_dir = Path(run_dir)
        self.run_dir.mkdir(parents=True, exist_ok=True)
        self.mode = mode
        self.workers = WorkerPool(workspace, gateway, config)
        self.log = ResearchLog(self.run_dir, gateway=gateway, config=config)
        self.problem_statement = render_problem_statement(workspace, mode)
        self.pool_policy = constraints.PoolPolicy(
            k0=config.constraints.k0,
            decay_rate=config.constraints.decay_rate,
            floor=config.constraints.floor,
        )
        self.expert_calls_used = 0
        self._accepted: List[ActionInvocation] = []
        self._last_response_text: Optional[str] = None
        self._attempt_journal = self.run_dir / "attempts.jsonl"

    # -- prompt assembly ---------------------------------------------------

    def base_prompt(self) -> str:
        return build_prompt(
            problem_statement=self.problem_statement,
            action_catalog=render_catalog(),
            long_term_summary=self.log.long_term_summary,
            short_term_records=self.log.short_term(),
            response_format=load_template("response_format.txt"),
        )

    def _attempt_prompt(self, violations: List[str]) -> str:
        prompt = self.base_prompt()
        if violations:
            feedback = "\n".join(f"- {message}" for message in violations)
            prompt += (
                f"\n{SECTION_FEEDBACK}\n"
                f"Your previous attempt(s) at this step were rejected:\n"
                f"{feedback}\n"
                f"Produce a corrected response.\n"
            )
        return prompt

    # -- planning ------------------------------------------------------------

    def _journal_attempt(self, step: int, level: str, verdict: str) -> None:
        with open(self._attempt_journal, "a", encoding="utf-8") as handle:
            handle.write(
                json.dumps({"step": step, "level": level, "verdict": verdict}) + "\n"
            )

    def _validate_attempt(
        self, text: str, step: int
    ) -> Tuple[Optional[Tuple[PlannerResponse, ActionInvocation]], Optional[str]]:
        recursive = constraints.check_recursive(self._last_response_text, text)
        if not recursive.allowed:
            return None, recursive.message
        try:
            response = parse_planner_response(text)
        except ResponseFormatError as exc:
            return None, str(exc)
        try:
            spec = actions.lookup(response.action)
        except ActionLookupError as exc:
            return None, str(exc)
        try:
            invocation = parse_invocation_checked(spec, response.action_input)
        except ActionInputError as exc:
            return None, str(exc)
        duplicate = constraints.check_duplicate(self._accepted, invocation)
        if not duplicate.allowed:
            return None, duplicate.message
        streak = constraints.check_pool_streak(
            self.pool_policy, self._accepted, invocation, step
        )
        if not streak.allowed:
            return None, streak.message
        return (response, invocation), None

    def plan_step(
        self, context: Optional[_StepContext] = None
    ) -> Tuple[PlannerResponse, ActionInvocation, str, _StepContext]:
        """Produce the next valid (response, invocation) via the cascade.

        Raises CascadeExhausted when every level's validity-retry budget is
        spent. The returned context allows post-dispatch rejections (zero
        diff) to resume the same step where it left off.
        """
        context = context or _StepContext()
        step = len(self.log.records)
        levels = self.config.cascade_levels()
        while context.level_index < len(levels):
            tag, budget = levels[context.level_index]
            while context.attempts.get(tag, 0) < budget:
                prompt = self._attempt_prompt(context.violations)
                text = self.gateway.complete(tag, prompt)
                context.attempts[tag] = context.attempts.get(tag, 0) + 1
                candidate, violation = self._validate_attempt(text, step)
                if candidate is None:
                    context.violations.append(violation)
                    self._journal_attempt(step, tag, violation)
                    continue
                self._journal_attempt(step, tag, "accepted")
                response, invocation = candidate
                return response, invocation, tag, context
            context.level_index += 1
        raise CascadeExhausted(
            f"step {step}: no valid planner response after exhausting "
            + ", ".join(f"{tag} ({budget})" for tag, budget in levels)
        )

    # -- dispatch ------------------------------------------------------------

    def dispatch(self, invocation: ActionInvocation) -> _DispatchOutcome:
        """Run one validated action; handler errors become observation text."""
        try:
            return self._dispatch_inner(invocation)
        except RcaError as exc:
            return _DispatchOutcome(observation=f"ERROR: {exc}")

    def _dispatch_inner(self, invocation: ActionInvocation) -> _DispatchOutcome:
        name = invocation.action.name
        values = invocation.values
        ws = self.workspace

        if name == "List Files":
            entries = ws.list_files(values["directory path"])
            return _DispatchOutcome("\n".join(entries) if entries else "(empty directory)")
        if name == "Copy File":
            return _DispatchOutcome(ws.copy_file(values["source"], values["destination"]))
        if name == "Inspect Script Lines":
            excerpt = ws.inspect_lines(
                values["script name"],
                values["start line number"],
                values["end line number"],
            )
            return _DispatchOutcome(excerpt if excerpt else "(no lines in range)")
        if name == "Execute Script":
            report = executor.execute_script(
                ws,
                values["script name"],
                values["arguments"],
                backend=self.config.executor.backend,
                timeout=self.config.executor.timeout,
                trace_command=self.config.executor.trace_command,
                scrub_env=self.config.credential_env_vars(),
            )
            return _DispatchOutcome(executor.render_observation(report))
        if name == "Undo Edit Script":
            return _DispatchOutcome(ws.undo_edit(values["script name"]))
        if name == "Get Code Diff":
            diff = ws.get_diff(values["script 1 name"], values["script 2 name"])
            if diff.is_empty:
                return _DispatchOutcome("The two scripts are identical (0 additions, 0 deletions).")
            return _DispatchOutcome(
                f"{diff.text}additions: {diff.additions}, deletions: {diff.deletions}"
            )
        if name == "Final Answer":
            return _DispatchOutcome(
                "Final answer recorded; the run ends here.", final_answer=True
            )
        if name == "Request Planning Expert Help":
            return _DispatchOutcome(
                self.request_expert_help(values["request description"])
            )
        if name == "Understand File":
            return _DispatchOutcome(
                self.workers.understand_file(values["file name"], values["things to look for"])
            )
        if name == "Understand File with Code Context":
            return _DispatchOutcome(
                self.workers.understand_file_with_context(
                    values["file name"],
                    values["file start line number"],
                    values["file end line number"],
                    values["script name"],
                    values["script start line number"],
                    values["script end line number"],
                    values["things to look for"],
                )
            )
        if name == "Edit Script":
            diff = self.workers.edit_script(
                values["script name"],
                values["edit instructions"],
                values["save script name"],
            )
            return self._edit_outcome(values["script name"], values["save script name"], diff)
        if name == "Edit Script with Context":
            diff = self.workers.edit_script_with_context(
                values["script name"],
                values["edit instructions"],
                values["context file name"],
                values["file start line number"],
                values["file end line number"],
                values["save script name"],
            )
            return self._edit_outcome(values["script name"], values["save script name"], diff)
        if name == "Reflection":
            return _DispatchOutcome(
                self.workers.reflect(
                    values["things to reflect on"], self.log.long_term_summary
                )
            )
        if name == "Check Implementation":
            self.workers.decompose_methodology()
            reports = self.workers.check_implementation(values["script name"])
            return _DispatchOutcome(render_subpart_reports(reports))
        raise RcaError(f"no dispatch handler for action {name!r}")

    def _edit_outcome(self, source: str, save_as: str, diff) -> _DispatchOutcome:
        observation = (
            f"Saved edited script to {save_as}. Diff vs {source}:\n"
            f"{diff.text if diff.text else '(no change)'}"
            f"additions: {diff.additions}, deletions: {diff.deletions}"
        )
        return _DispatchOutcome(
            observation, edit_counts=diff.counts(), edit_target=save_as
        )

    def request_expert_help(self, request_description: str) -> str:
        """One expert-model call per request, capped by the per-run budget."""
        if not request_description.strip():
            return "ERROR: request description must not be empty"
        if self.expert_calls_used >= self.config.expert_help_budget:
            return (
                f"Expert help budget exhausted: all "
                f"{self.config.expert_help_budget} planning expert calls for this "
                f"run have been used."
            )
        prompt = load_template("expert_help.txt").format(
            planning_context=self.base_prompt(),
            request_description=request_description,
        )
        response = self.gateway.complete(EXPERT_PLANNER, prompt)
        self.expert_calls_used += 1
        return response

    # -- the loop ------------------------------------------------------------

    def run_loop(self) -> RunResult:
        try:
            return self._run_loop_inner()
        except OSError:
            # unrecoverable persistence failure; the partial log stays on disk
            return RunResult(
                termination=TERMINATION_ABORTED, steps_taken=len(self.log.records)
            )

    def _run_loop_inner(self) -> RunResult:
        final_answer_text: Optional[str] = None
        while len(self.log.records) < self.config.max_steps:
            context = _StepContext()
            while True:
                try:
                    response, invocation, level, context = self.plan_step(context)
                except CascadeExhausted:
                    return RunResult(
                        termination=TERMINATION_CASCADE_EXHAUSTED,
                        steps_taken=len(self.log.records),
                    )
                outcome = self.dispatch(invocation)
                if outcome.edit_counts is not None:
                    verdict = constraints.check_zero_diff(outcome.edit_counts)
                    if not verdict.allowed:
                        # roll back the no-op save and retry within this step
                        self.workspace.undo_edit(outcome.edit_target)
                        context.violations.append(verdict.message)
                        self._journal_attempt(
                            len(self.log.records), level, verdict.message
                        )
                        continue
                break
            observation = outcome.observation
            record = StepRecord(
                index=len(self.log.records),
                response=response,
                invocation=invocation,
                observation=observation,
                observation_shown=self.log.summarize_observation(observation),
                step_summary=compose_step_summary(
                    len(self.log.records), response, invocation, observation
                ),
                cascade_level_used=level,
                attempts_per_level=dict(context.attempts),
            )
            self.log.append_step(record)
            self._accepted.append(invocation)
            self._last_response_text = response.raw_text
            if outcome.final_answer:
                final_answer_text = invocation.values.get("description", "")
                return RunResult(
                    termination=TERMINATION_FINAL_ANSWER,
                    steps_taken=len(self.log.records),
                    final_answer_text=final_answer_text,
                    generated_script=self._generated_script(),
                )
        return RunResult(
            termination=TERMINATION_MAX_STEPS, steps_taken=len(self.log.records)
        )

    def _generated_script(self) -> Optional[str]:
        path = self.workspace.resolve(GENERATED_SCRIPT_NAME)
        return GENERATED_SCRIPT_NAME if path.is_file() else None


def parse_invocation_checked(spec, action_input: str) -> ActionInvocation:
    if not action_input.strip():
        raise ActionInputError(
            f"Action Input for {spec.name!r} is empty; give a JSON object with "
            f"fields: " + ", ".join(spec.field_names())
        )
    return actions.parse_invocation(spec, action_input)


def run_loop(
    workspace: Workspace,
    gateway: Gateway,
    config: AgentConfig,
    run_dir: Path,
    mode: str = MODE_AGENT,
) -> RunResult:
    return PlannerLoop(workspace, gateway, config, run_dir, mode=mode).run_loop()


def run_prescribed(
    workspace: Workspace, gateway: Gateway, config: AgentConfig, run_dir: Path
) -> RunResult:
    return run_loop(workspace, gateway, config, run_dir, mode=MODE_PRESCRIBED)


def run_single_call(
    workspace: Workspace, gateway: Gateway, config: AgentConfig, run_dir: Path
) -> RunResult:
    """One-pass baseline: a single completion, saved as the generated script."""
    from .workers import extract_code_block

    Path(run_dir).mkdir(parents=True, exist_ok=True)
    prompt = render_single_call_prompt(workspace)
    budget = max(1, config.roles[BASE_PLANNER].retry_budget)
    nudge = (
        "\n\nYour previous reply did not contain a fenced code block. Return "
        "the complete edited script inside one fenced code block."
    )
    current = prompt
    for _ in range(budget):
        reply = gateway.complete(BASE_PLANNER, current)
        code = extract_code_block(reply)
        if code is not None:
            workspace.apply_edit(GENERATED_SCRIPT_NAME, code)
            return RunResult(
                termination=TERMINATION_FINAL_ANSWER,
                steps_taken=1,
                final_answer_text="single-call implementation written",
                generated_script=GENERATED_SCRIPT_NAME,
            )
        current = prompt + nudge
    return RunResult(termination=TERMINATION_ABORTED, steps_taken=1)
