"""Append-only run history backing short- and long-term memory.

Short-term memory is the last three full responses with their (possibly
summarized) observations; long-term memory is a running summary extended by
one worker call per appended step. Every step is persisted to disk before
append returns, so a reload always reproduces the in-memory log.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

from . import actions
from .actions import ActionInvocation
from .config import WORKER, AgentConfig
from .errors import GatewayError, RcaError
from .gateway import Gateway
from .prompts import load_template
from .responses import PlannerResponse

OBSERVATION_SUMMARY_PREFIX = "SUMMARY OF LONG OBSERVATION:"
_FALLBACK_HEAD = 2000
_FALLBACK_TAIL = 1000
_ELISION = "\n... [observation truncated] ...\n"
_SUMMARY_FILE = "long_term_summary.txt"
_STEPS_DIR = "steps"


@dataclass
class StepRecord:
    index: int
    response: PlannerResponse
    invocation: ActionInvocation
    observation: str
    observation_shown: str
    step_summary: str
    cascade_level_used: str
    attempts_per_level: Dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "response": self.response.to_dict(),
            "invocation": {
                "action": self.invocation.action.name,
                "values": self.invocation.values,
                "raw_text": self.invocation.raw_text,
            },
            "observation": self.observation,
            "observation_shown": self.observation_shown,
            "step_summary": self.step_summary,
            "cascade_level_used": self.cascade_level_used,
            "attempts_per_level": self.attempts_per_level,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "StepRecord":
        spec = actions.lookup(data["invocation"]["action"])
        invocation = ActionInvocation(
            action=spec,
            values=data["invocation"]["values"],
            raw_text=data["invocation"].get("raw_text", ""),
        )
        return cls(
            index=int(data["index"]),
            response=PlannerResponse.from_dict(data["response"]),
            invocation=invocation,
            observation=data["observation"],
            observation_shown=data["observation_shown"],
            step_summary=data["step_summary"],
            cascade_level_used=data["cascade_level_used"],
            attempts_per_level={k: int(v) for k, v in data["attempts_per_level"].items()},
        )


def compose_step_summary(
    index: int, response: PlannerResponse, invocation: ActionInvocation, observation: str
) -> str:
    """Deterministic one-paragraph digest of a step for the long-term memory."""

    def head(text: str, limit: int = 240) -> str:
        flat = " ".join(text.split())
        return flat if len(flat) <= limit else flat[: limit - 3] + "..."

    return (
        f"Step {index}: ran {invocation.describe()}. "
        f"Thought: {head(response.thought)} "
        f"Observation: {head(observation)}"
    )


class ResearchLog:
    """Ordered step records plus the running long-term summary."""

    def __init__(
        self,
        run_dir: Path,
        gateway: Optional[Gateway] = None,
        config: Optional[AgentConfig] = None,
    ):
        self.run_dir = Path(run_dir)
        self.gateway = gateway
        self.config = config or AgentConfig()
        self.records: List[StepRecord] = []
        self.long_term_summary = ""
        self.short_term_window = self.config.memory.window
        (self.run_dir / _STEPS_DIR).mkdir(parents=True, exist_ok=True)

    # -- persistence ------------------------------------------------------

    def _step_path(self, index: int) -> Path:
        return self.run_dir / _STEPS_DIR / f"{index}.json"

    def _persist_record(self, record: StepRecord) -> None:
        path = self._step_path(record.index)
        tmp = path.with_suffix(".json.tmp")
        tmp.write_text(
            json.dumps(record.to_dict(), ensure_ascii=False, indent=2), encoding="utf-8"
        )
        tmp.replace(path)

    def _persist_summary(self) -> None:
        (self.run_dir / _SUMMARY_FILE).write_text(self.long_term_summary, encoding="utf-8")

    @classmethod
    def load(
        cls,
        run_dir: Path,
        gateway: Optional[Gateway] = None,
        config: Optional[AgentConfig] = None,
    ) -> "ResearchLog":
        log = cls(run_dir, gateway=gateway, config=config)
        steps_dir = log.run_dir / _STEPS_DIR
        paths = sorted(steps_dir.glob("*.json"), key=lambda p: int(p.stem))
        for expected, path in enumerate(paths):
            record = StepRecord.from_dict(json.loads(path.read_text(encoding="utf-8")))
            if record.index != expected:
                raise RcaError(
                    f"research log at {run_dir} has a gap: found step "
                    f"{record.index}, expected {expected}"
                )
            log.records.append(record)
        summary_path = log.run_dir / _SUMMARY_FILE
        if summary_path.is_file():
            log.long_term_summary = summary_path.read_text(encoding="utf-8")
        return log

    # -- appending ---------------------------------------------------------

    def append_step(self, record: StepRecord) -> None:
        if record.index != len(self.records):
            raise RcaError(
                f"step index {record.index} does not extend a log of length "
                f"{len(self.records)}"
            )
        if not record.step_summary:
            raise RcaError("accepted steps must carry a non-empty step summary")
        self._persist_record(record)
        self.long_term_summary = self._extend_summary(record.step_summary)
        self._persist_summary()
        self.records.append(record)

    def _extend_summary(self, step_summary: str) -> str:
        if self.gateway is None:
            return self._fallback_summary(step_summary)
        prompt = load_template("summarize_log_step.txt").format(
            current_summary=self.long_term_summary or "(empty)",
            step_summary=step_summary,
        )
        try:
            return self.gateway.complete(WORKER, prompt)
        except GatewayError:
            return self._fallback_summary(step_summary)

    def _fallback_summary(self, step_summary: str) -> str:
        if not self.long_term_summary:
            return step_summary
        return f"{self.long_term_summary}\n{step_summary}"

    # -- memory views ------------------------------------------------------

    def summarize_observation(self, text: str) -> str:
        """Identity below the threshold; summarized (or truncated) above it."""
        threshold = self.config.memory.observation_threshold
        if len(text) <= threshold:
            return text
        if self.gateway is not None:
            prompt = load_template("summarize_observation.txt").format(observation=text)
            try:
                summary = self.gateway.complete(WORKER, prompt)
                return f"{OBSERVATION_SUMMARY_PREFIX}\n{summary}"
            except GatewayError:
                pass
        return text[:_FALLBACK_HEAD] + _ELISION + text[-_FALLBACK_TAIL:]

    def short_term(self) -> List[StepRecord]:
        if self.short_term_window <= 0:
            return []
        return self.records[-self.short_term_window :]

    # -- rendering -----------------------------------------------------------

    def render_log_file(self) -> str:
        lines = ["# Research Log", ""]
        for record in self.records:
            attempts = ", ".join(
                f"{tag}={count}" for tag, count in sorted(record.attempts_per_level.items())
            )
            lines.extend(
                [
                    f"## Step {record.index}",
                    "",
                    f"- action: {record.invocation.describe()}",
                    f"- cascade level: {record.cascade_level_used} ({attempts})",
                    f"- summary: {record.step_summary}",
                    "",
                    "### Observation",
                    "",
                    record.observation_shown,
                    "",
                ]
            )
        if self.long_term_summary:
            lines.extend(["## Long-term summary", "", self.long_term_summary, ""])
        return "\n".join(lines)
