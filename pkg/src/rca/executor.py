"""Child-process execution of target scripts with optional line tracing.

The plain backend runs the workspace's interpreter directly; the traced
backend delegates to the external trace shim, which writes a
`<stem>_execution_trace.cover` file beside the script (count-colon
prefixes, `>>>>>>` for executable lines never run) plus a JSON sidecar.
"""

import json
import os
import re
import shlex
import subprocess
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from .errors import MissingFileError, RcaError
from .workspace import Workspace

BACKEND_PLAIN = "plain"
BACKEND_TRACED = "traced"

DEFAULT_TIMEOUT = 1800.0

LINE_NEVER_EXECUTED = "never_executed"
LINE_NON_EXECUTABLE = "non_executable"

NEVER_MARKER = ">>>>>>"
_COUNT_PREFIX = re.compile(r"^\s*(\d+):\s?(.*)$", re.DOTALL)

_STREAM_LIMIT = 2000
_TRACE_LIST_CAP = 50


@dataclass(frozen=True)
class TraceLine:
    line_number: int
    kind: str  # "count" | "never_executed" | "non_executable"
    count: int = 0


@dataclass(frozen=True)
class LineTrace:
    lines: Tuple[TraceLine, ...]

    def __post_init__(self) -> None:
        for i, line in enumerate(self.lines, start=1):
            if line.line_number != i:
                raise RcaError(
                    f"trace lines must be contiguous from 1; entry {i} has "
                    f"line number {line.line_number}"
                )

    @property
    def total_lines(self) -> int:
        return len(self.lines)

    def executed_lines(self) -> List[int]:
        return [l.line_number for l in self.lines if l.kind == "count" and l.count > 0]

    def never_executed_lines(self) -> List[int]:
        return [l.line_number for l in self.lines if l.kind == LINE_NEVER_EXECUTED]


@dataclass
class ExecutionReport:
    script: str
    arguments: List[str]
    exit_status: int
    stdout: str
    stderr: str
    duration: float
    timed_out: bool = False
    trace: Optional[LineTrace] = None
    extracted_performance: Optional[float] = None


def parse_cover_file(path: Path) -> LineTrace:
    """Parse a `.cover` report into per-line execution counts."""
    cover = Path(path)
    if not cover.is_file():
        raise MissingFileError(f"cover file not found: {path}")
    lines: List[TraceLine] = []
    for number, raw in enumerate(cover.read_text(encoding="utf-8").splitlines(), start=1):
        stripped = raw.lstrip()
        if stripped.startswith(NEVER_MARKER):
            lines.append(TraceLine(line_number=number, kind=LINE_NEVER_EXECUTED))
            continue
        match = _COUNT_PREFIX.match(raw)
        if match:
            lines.append(TraceLine(line_number=number, kind="count", count=int(match.group(1))))
            continue
        lines.append(TraceLine(line_number=number, kind=LINE_NON_EXECUTABLE))
    return LineTrace(lines=tuple(lines))


def _scrubbed_env(scrub: Sequence[str]) -> dict:
    env = dict(os.environ)
    for name in scrub:
        env.pop(name, None)
    return env


def _run_child(
    command: List[str],
    cwd: Path,
    timeout: float,
    env: dict,
) -> Tuple[int, str, str, float, bool]:
    start = time.monotonic()
    try:
        completed = subprocess.run(
            command,
            cwd=str(cwd),
            env=env,
            capture_output=True,
            text=True,
            timeout=timeout,
        )
        return (
            completed.returncode,
            completed.stdout,
            completed.stderr,
            time.monotonic() - start,
            False,
        )
    except subprocess.TimeoutExpired as exc:
        stdout = exc.stdout or b""
        stderr = exc.stderr or b""
        if isinstance(stdout, bytes):
            stdout = stdout.decode("utf-8", errors="replace")
        if isinstance(stderr, bytes):
            stderr = stderr.decode("utf-8", errors="replace")
        return (-1, stdout, stderr, time.monotonic() - start, True)
    except FileNotFoundError as exc:
        raise RcaError(f"could not spawn {command[0]!r}: {exc}")


def cover_path_for(script_path: Path) -> Path:
    return script_path.parent / f"{script_path.stem}_execution_trace.cover"


def execute_script(
    workspace: Workspace,
    script: str,
    arguments: Sequence[str] = (),
    backend: str = BACKEND_PLAIN,
    timeout: float = DEFAULT_TIMEOUT,
    trace_command: str = "trace_shim",
    scrub_env: Sequence[str] = (),
) -> ExecutionReport:
    """Run a workspace script and capture streams, status and performance."""
    if timeout <= 0:
        raise RcaError(f"timeout must be positive, got {timeout}")
    if backend not in (BACKEND_PLAIN, BACKEND_TRACED):
        raise RcaError(f"unknown executor backend {backend!r}")
    script_path = workspace.resolve(script)
    if not script_path.is_file():
        raise MissingFileError(f"script not found: {script}")
    args = [str(a) for a in arguments]
    env = _scrubbed_env(scrub_env)

    trace: Optional[LineTrace] = None
    if backend == BACKEND_PLAIN:
        command = shlex.split(workspace.script_interpreter) + [str(script_path)] + args
        status, stdout, stderr, duration, timed_out = _run_child(
            command, workspace.root_dir, timeout, env
        )
    else:
        with tempfile.TemporaryDirectory(prefix="trace-shim-") as out_dir:
            command = shlex.split(trace_command) + [str(script_path)] + args + ["--out", out_dir]
            status, stdout, stderr, duration, timed_out = _run_child(
                command, workspace.root_dir, timeout, env
            )
            sidecar = Path(out_dir) / "shim_report.json"
            if not timed_out and sidecar.is_file():
                shim_report = json.loads(sidecar.read_text(encoding="utf-8"))
                status = int(shim_report.get("exit_status", status))
                cover = Path(shim_report.get("cover_path", ""))
                if cover.is_file():
                    trace = parse_cover_file(cover)

    performance = workspace.extract_performance(stdout) if status == 0 else None
    return ExecutionReport(
        script=script,
        arguments=args,
        exit_status=status,
        stdout=stdout,
        stderr=stderr,
        duration=duration,
        timed_out=timed_out,
        trace=trace,
        extracted_performance=performance,
    )


def _truncate_stream(text: str, limit: int = _STREAM_LIMIT) -> str:
    if len(text) <= limit:
        return text
    marker = "\n... [truncated] ...\n"
    head = (limit - len(marker)) * 3 // 5
    tail = limit - len(marker) - head
    return text[:head] + marker + text[-tail:]


def render_observation(report: ExecutionReport) -> str:
    """Deterministic observation text relayed back to the planner."""
    parts = [f"exit status: {report.exit_status}"]
    if report.timed_out:
        parts.append(
            f"the script timed out and was terminated after "
            f"{report.duration:.1f} seconds"
        )
    parts.append("--- stdout ---")
    parts.append(_truncate_stream(report.stdout) if report.stdout else "(empty)")
    parts.append("--- stderr ---")
    parts.append(_truncate_stream(report.stderr) if report.stderr else "(empty)")
    if report.extracted_performance is not None:
        parts.append(f"extracted performance: {report.extracted_performance}")
    if report.trace is not None:
        never = report.trace.never_executed_lines()
        shown = never[:_TRACE_LIST_CAP]
        suffix = " ..." if len(never) > _TRACE_LIST_CAP else ""
        parts.append(
            "--- execution trace ---\n"
            f"total lines: {report.trace.total_lines}, "
            f"executed: {len(report.trace.executed_lines())}, "
            f"never executed: {len(never)}"
        )
        if never:
            parts.append(
                "never-executed line numbers: "
                + ", ".join(str(n) for n in shown)
                + suffix
            )
    return "\n".join(parts)
