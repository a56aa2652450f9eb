"""LLM-backed action workers.

Each worker makes persona-scoped single calls through the gateway at the
low worker temperature. Edit workers must return the complete edited file
in one fenced code block; understanding workers chunk oversized files and
concatenate the per-chunk answers.
"""

import re
from dataclasses import dataclass
from typing import Dict, List, Optional

from .config import WORKER, AgentConfig
from .diffing import DiffSummary, unified_diff
from .errors import ValidationError, WorkerError
from .gateway import Gateway
from .prompts import load_template
from .workspace import ROLE_METHODOLOGY, ROLE_STARTER_CODE, Workspace

STATUS_IMPLEMENTED = "implemented"
STATUS_MISSING = "missing"

PERSONAS: Dict[str, str] = {
    "Understand File": (
        "You are an expert in understanding files containing both code and "
        "natural language."
    ),
    "Understand File with Code Context": (
        "You are an expert in understanding files containing both code and "
        "natural language given some context."
    ),
    "Edit Script": "You are an expert in editing code files.",
    "Edit Script with Context": (
        "You are an expert in editing code files given some code or text context."
    ),
    "Reflection": (
        "You are an expert in reflecting on previous actions when implementing "
        "code for a given research methodology."
    ),
    "Check Implementation": (
        "You are an expert in checking the implementation of a methodology in a "
        "piece of edited code given the starter code that was edited to arrive "
        "at the edited code."
    ),
}

_FENCE = re.compile(r"```[A-Za-z0-9_+-]*\n(.*?)```", re.DOTALL)
_REPORT_SECTIONS = re.compile(
    r"STATUS:\s*(?P<status>.+?)\s*^SNIPPET:\s*(?P<snippet>.*?)\s*^PROPOSED EDIT:\s*(?P<edit>.*)",
    re.DOTALL | re.MULTILINE | re.IGNORECASE,
)

_NO_FENCE_NUDGE = (
    "\n\nYour previous reply did not contain a fenced code block. Return the "
    "complete edited script inside one fenced code block."
)
_NO_LIST_NUDGE = (
    "\n\nYour previous reply was not a numbered list. Reply with only a "
    "numbered list of subparts."
)
_BAD_REPORT_NUDGE = (
    "\n\nYour previous reply did not follow the requested format. Answer with "
    "the exact STATUS / SNIPPET / PROPOSED EDIT sections."
)


@dataclass(frozen=True)
class SubpartReport:
    subpart_id: int
    description: str
    status: str
    snippet: str = ""
    proposed_edit: str = ""

    def __post_init__(self) -> None:
        if self.status not in (STATUS_IMPLEMENTED, STATUS_MISSING):
            raise WorkerError(f"invalid subpart status {self.status!r}")
        if self.status == STATUS_IMPLEMENTED and not self.snippet.strip():
            raise WorkerError(f"subpart {self.subpart_id}: implemented without a snippet")
        if self.status == STATUS_MISSING and not self.proposed_edit.strip():
            raise WorkerError(f"subpart {self.subpart_id}: missing without a proposed edit")


def extract_code_block(text: str) -> Optional[str]:
    match = _FENCE.search(text)
    return match.group(1) if match else None


def parse_numbered_list(text: str) -> List[str]:
    """Parse '1. item' style lists; continuation lines attach to the last item."""
    items: List[str] = []
    for line in text.splitlines():
        match = re.match(r"^\s*\d+[.):-]\s+(.*)$", line)
        if match:
            items.append(match.group(1).strip())
        elif items and line.strip():
            items[-1] = f"{items[-1]} {line.strip()}"
    return [item for item in items if item]


def parse_subpart_report(text: str, subpart_id: int, description: str) -> SubpartReport:
    match = _REPORT_SECTIONS.search(text)
    if not match:
        raise WorkerError(
            f"subpart {subpart_id}: reply does not contain STATUS / SNIPPET / "
            f"PROPOSED EDIT sections"
        )
    status = match.group("status").strip().lower().rstrip(".")
    if status not in (STATUS_IMPLEMENTED, STATUS_MISSING):
        raise WorkerError(f"subpart {subpart_id}: unrecognized status {status!r}")
    return SubpartReport(
        subpart_id=subpart_id,
        description=description,
        status=status,
        snippet=match.group("snippet").strip(),
        proposed_edit=match.group("edit").strip(),
    )


def _chunk_lines(content: str, limit: int) -> List[str]:
    if len(content) <= limit:
        return [content]
    chunks: List[str] = []
    current = ""
    for line in content.splitlines(keepends=True):
        if current and len(current) + len(line) > limit:
            chunks.append(current)
            current = ""
        current += line
        while len(current) > limit:  # single line longer than the budget
            chunks.append(current[:limit])
            current = current[limit:]
    if current:
        chunks.append(current)
    return chunks


class WorkerPool:
    """The six persona workers plus methodology decomposition, over one run."""

    def __init__(self, workspace: Workspace, gateway: Gateway, config: AgentConfig):
        self.workspace = workspace
        self.gateway = gateway
        self.config = config
        self._decomposition: Optional[List[str]] = None

    # -- plumbing ----------------------------------------------------------

    def _call(self, prompt: str) -> str:
        return self.gateway.complete(WORKER, prompt)

    def _call_until(self, prompt: str, parse, nudge: str, failure: str):
        """Call the worker, retrying with a corrective nudge while unparseable."""
        attempts = max(1, self.config.worker_retry_budget)
        current = prompt
        for attempt in range(attempts):
            reply = self._call(current)
            result = parse(reply)
            if result is not None:
                return result
            current = prompt + nudge
        raise WorkerError(failure)

    @staticmethod
    def _require_query(value: str, field: str) -> str:
        if not value.strip():
            raise ValidationError(f"{field} must not be empty")
        return value

    # -- understanding -------------------------------------------------------

    def understand_file(self, file: str, things_to_look_for: str) -> str:
        self._require_query(things_to_look_for, "things to look for")
        content = self.workspace.read_file(file)
        template = load_template("worker_understand_file.txt")
        persona = PERSONAS["Understand File"]
        chunks = _chunk_lines(content, self.config.worker_file_chunk)
        answers = []
        for index, chunk in enumerate(chunks, start=1):
            note = f" (part {index} of {len(chunks)})" if len(chunks) > 1 else ""
            prompt = template.format(
                persona=persona,
                file_name=file,
                chunk_note=note,
                file_content=chunk,
                things_to_look_for=things_to_look_for,
            )
            answers.append(self._call(prompt))
        return "\n\n".join(answers)

    def understand_file_with_context(
        self,
        file: str,
        file_start: int,
        file_end: int,
        script: str,
        script_start: int,
        script_end: int,
        things_to_look_for: str,
    ) -> str:
        self._require_query(things_to_look_for, "things to look for")
        file_excerpt = self.workspace.inspect_lines(file, file_start, file_end)
        script_excerpt = self.workspace.inspect_lines(script, script_start, script_end)
        prompt = load_template("worker_understand_file_with_context.txt").format(
            persona=PERSONAS["Understand File with Code Context"],
            file_name=file,
            file_start=file_start,
            file_end=file_end,
            file_excerpt=file_excerpt,
            script_name=script,
            script_start=script_start,
            script_end=script_end,
            script_excerpt=script_excerpt,
            things_to_look_for=things_to_look_for,
        )
        return self._call(prompt)

    # -- editing ---------------------------------------------------------

    def _save_edit(self, source: str, save_as: str, new_content: str) -> DiffSummary:
        source_content = self.workspace.read_file(source)
        self.workspace.apply_edit(save_as, new_content)
        return unified_diff(source_content, new_content, a_label=source, b_label=save_as)

    def edit_script(self, script: str, edit_instructions: str, save_as: str) -> DiffSummary:
        self._require_query(edit_instructions, "edit instructions")
        content = self.workspace.read_file(script)
        prompt = load_template("worker_edit_script.txt").format(
            persona=PERSONAS["Edit Script"],
            script_name=script,
            script_content=content,
            edit_instructions=edit_instructions,
        )
        new_content = self._call_until(
            prompt,
            extract_code_block,
            _NO_FENCE_NUDGE,
            f"edit worker returned no fenced code block for {script!r} after "
            f"{self.config.worker_retry_budget} attempts",
        )
        return self._save_edit(script, save_as, new_content)

    def edit_script_with_context(
        self,
        script: str,
        edit_instructions: str,
        context_file: str,
        context_start: int,
        context_end: int,
        save_as: str,
    ) -> DiffSummary:
        self._require_query(edit_instructions, "edit instructions")
        context_excerpt = self.workspace.inspect_lines(context_file, context_start, context_end)
        content = self.workspace.read_file(script)
        prompt = load_template("worker_edit_script_with_context.txt").format(
            persona=PERSONAS["Edit Script with Context"],
            script_name=script,
            script_content=content,
            context_file=context_file,
            context_start=context_start,
            context_end=context_end,
            context_excerpt=context_excerpt,
            edit_instructions=edit_instructions,
        )
        new_content = self._call_until(
            prompt,
            extract_code_block,
            _NO_FENCE_NUDGE,
            f"edit worker returned no fenced code block for {script!r} after "
            f"{self.config.worker_retry_budget} attempts",
        )
        return self._save_edit(script, save_as, new_content)

    # -- reflection ----------------------------------------------------------

    def reflect(self, things_to_reflect_on: str, research_log_summary: str) -> str:
        self._require_query(things_to_reflect_on, "things to reflect on")
        threshold = self.config.memory.observation_threshold
        summary = research_log_summary
        if len(summary) > threshold:
            # keep the most recent entries; the tail is the fresh part
            summary = "... [older entries omitted] ...\n" + summary[-threshold:]
        prompt = load_template("worker_reflection.txt").format(
            persona=PERSONAS["Reflection"],
            research_log_summary=summary,
            things_to_reflect_on=things_to_reflect_on,
        )
        return self._call(prompt)

    # -- implementation checking ---------------------------------------------

    def decompose_methodology(self) -> List[str]:
        """Split the methodology file into ordered subparts (cached per run)."""
        if self._decomposition is not None:
            return list(self._decomposition)
        rel = self.workspace.path_for_role(ROLE_METHODOLOGY)
        content = self.workspace.read_file(rel)
        prompt = load_template("worker_decompose_methodology.txt").format(
            persona=PERSONAS["Understand File"],
            file_name=rel,
            file_content=content,
        )

        def parse(reply: str) -> Optional[List[str]]:
            items = parse_numbered_list(reply)
            return items or None

        self._decomposition = self._call_until(
            prompt,
            parse,
            _NO_LIST_NUDGE,
            f"could not parse a numbered subpart list from the methodology "
            f"worker after {self.config.worker_retry_budget} attempts",
        )
        return list(self._decomposition)

    def has_decomposition(self) -> bool:
        return self._decomposition is not None

    def check_implementation(self, script: str) -> List[SubpartReport]:
        """One persona call per cached subpart, aggregated in subpart order."""
        if self._decomposition is None:
            raise WorkerError(
                "no methodology decomposition is cached; run decompose_methodology first"
            )
        script_content = self.workspace.read_file(script)
        starter_rel = self.workspace.path_for_role(ROLE_STARTER_CODE)
        starter_content = self.workspace.read_file(starter_rel)
        template = load_template("worker_check_implementation.txt")
        reports: List[SubpartReport] = []
        for subpart_id, description in enumerate(self._decomposition, start=1):
            prompt = template.format(
                persona=PERSONAS["Check Implementation"],
                starter_name=starter_rel,
                starter_content=starter_content,
                script_name=script,
                script_content=script_content,
                subpart_id=subpart_id,
                subpart_description=description,
            )

            def parse(reply: str, _id=subpart_id, _desc=description):
                try:
                    return parse_subpart_report(reply, _id, _desc)
                except WorkerError:
                    return None

            reports.append(
                self._call_until(
                    prompt,
                    parse,
                    _BAD_REPORT_NUDGE,
                    f"subpart {subpart_id}: implementation-check reply stayed "
                    f"unparseable after {self.config.worker_retry_budget} attempts",
                )
            )
        return reports


def render_subpart_reports(reports: List[SubpartReport]) -> str:
    parts = []
    for report in reports:
        lines = [
            f"Subpart {report.subpart_id}: {report.description}",
            f"  status: {report.status}",
        ]
        if report.snippet:
            lines.append(f"  snippet: {report.snippet}")
        if report.status == STATUS_MISSING:
            lines.append(f"  proposed edit: {report.proposed_edit}")
        parts.append("\n".join(lines))
    return "\n".join(parts)
