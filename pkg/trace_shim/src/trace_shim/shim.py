"""Run a Python script under line-count tracing.

The target runs in-process (so counts survive crashes and SystemExit) with
stdout/stderr teed to files while passing through unchanged. The report is
a `<stem>_execution_trace.cover` file beside the script: executed lines get
a `count:` prefix, executable-but-never-run lines get `>>>>>>`, everything
else is left unprefixed.
"""

import dis
import json
import sys
import time
import trace
import traceback
import types
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Set, TextIO

NEVER_MARKER = ">>>>>>"
SIDECAR_NAME = "shim_report.json"


class ShimError(Exception):
    pass


@dataclass
class ShimReport:
    exit_status: int
    wall_seconds: float
    cover_path: Path
    stdout_path: Path
    stderr_path: Path

    def to_dict(self) -> dict:
        return {
            "exit_status": self.exit_status,
            "wall_seconds": self.wall_seconds,
            "cover_path": str(self.cover_path),
            "stdout_path": str(self.stdout_path),
            "stderr_path": str(self.stderr_path),
        }


class _Tee:
    """Writes to the real stream and a capture file simultaneously."""

    def __init__(self, stream: TextIO, capture: TextIO):
        self._stream = stream
        self._capture = capture

    def write(self, text: str) -> int:
        self._capture.write(text)
        return self._stream.write(text)

    def flush(self) -> None:
        self._capture.flush()
        self._stream.flush()

    def isatty(self) -> bool:
        return False

    @property
    def encoding(self):
        return getattr(self._stream, "encoding", "utf-8")


def executable_lines(code: types.CodeType) -> Set[int]:
    """Line numbers that carry bytecode, recursing into nested code objects."""
    lines = {line for _, line in dis.findlinestarts(code) if line is not None}
    for const in code.co_consts:
        if isinstance(const, types.CodeType):
            lines |= executable_lines(const)
    return lines


def cover_path_for(script_path: Path) -> Path:
    return script_path.parent / f"{script_path.stem}_execution_trace.cover"


def write_cover(script_path: Path, source: str, counts: Dict[int, int]) -> Path:
    """Render the per-line report next to the script."""
    compiled = compile(source, str(script_path), "exec")
    executable = executable_lines(compiled)
    out_lines: List[str] = []
    for number, text in enumerate(source.splitlines(), start=1):
        count = counts.get(number, 0)
        if count > 0:
            out_lines.append(f"{count:5d}: {text}")
        elif number in executable:
            out_lines.append(f"{NEVER_MARKER} {text}")
        else:
            out_lines.append(f"       {text}")
    path = cover_path_for(script_path)
    path.write_text("".join(line + "\n" for line in out_lines), encoding="utf-8")
    return path


def _trimmed_traceback(script_path: Path) -> str:
    """The current exception's traceback from the script's own frame down."""
    exc_type, exc, tb = sys.exc_info()
    frames = traceback.extract_tb(tb)
    start = next(
        (i for i, f in enumerate(frames) if f.filename == str(script_path)), 0
    )
    lines = ["Traceback (most recent call last):\n"]
    lines.extend(traceback.format_list(frames[start:]))
    lines.extend(traceback.format_exception_only(exc_type, exc))
    return "".join(lines)


def shim_run(script: str, arguments: Sequence[str], output_dir: str) -> ShimReport:
    """Execute the script with given arguments under line counting.

    stdout/stderr are teed to files in `output_dir` and passed through; the
    cover file is written beside the script even when the script fails.
    """
    script_path = Path(script).resolve()
    if not script_path.is_file():
        raise ShimError(f"script not found: {script}")
    out_dir = Path(output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stdout_path = out_dir / "stdout.txt"
    stderr_path = out_dir / "stderr.txt"
    source = script_path.read_text(encoding="utf-8")
    code = compile(source, str(script_path), "exec")

    tracer = trace.Trace(count=1, trace=0, ignoredirs=[sys.prefix, sys.exec_prefix])
    script_globals = {
        "__name__": "__main__",
        "__file__": str(script_path),
        "__package__": None,
        "__spec__": None,
        "__cached__": None,
        "__builtins__": __builtins__,
    }

    saved_argv = sys.argv
    saved_path0: Optional[str] = None
    saved_stdout, saved_stderr = sys.stdout, sys.stderr
    exit_status = 0
    started = time.monotonic()
    with open(stdout_path, "w", encoding="utf-8") as out_file, open(
        stderr_path, "w", encoding="utf-8"
    ) as err_file:
        sys.stdout = _Tee(saved_stdout, out_file)
        sys.stderr = _Tee(saved_stderr, err_file)
        sys.argv = [str(script_path)] + [str(a) for a in arguments]
        sys.path.insert(0, str(script_path.parent))
        saved_path0 = str(script_path.parent)
        try:
            tracer.runctx(code, script_globals, script_globals)
        except SystemExit as exc:
            if exc.code is None:
                exit_status = 0
            elif isinstance(exc.code, int):
                exit_status = exc.code
            else:
                sys.stderr.write(f"{exc.code}\n")
                exit_status = 1
        except BaseException:
            sys.stderr.write(_trimmed_traceback(script_path))
            exit_status = 1
        finally:
            sys.stdout.flush()
            sys.stderr.flush()
            sys.stdout, sys.stderr = saved_stdout, saved_stderr
            sys.argv = saved_argv
            if saved_path0 is not None and sys.path and sys.path[0] == saved_path0:
                sys.path.pop(0)
    wall_seconds = time.monotonic() - started

    raw_counts = tracer.results().counts
    counts = {
        line: count
        for (filename, line), count in raw_counts.items()
        if filename == str(script_path)
    }
    cover_path = write_cover(script_path, source, counts)

    report = ShimReport(
        exit_status=exit_status,
        wall_seconds=wall_seconds,
        cover_path=cover_path,
        stdout_path=stdout_path,
        stderr_path=stderr_path,
    )
    (out_dir / SIDECAR_NAME).write_text(
        json.dumps(report.to_dict(), indent=2), encoding="utf-8"
    )
    return report
