"""The on-disk environment the agent works against.

A workspace is a directory holding the five mandatory input files
(methodology description, dataset description, pseudocode, starter code,
starter-code performance) plus optional subpart/supplementary scripts,
declared in a `workspace.toml` manifest at its root. All file operations
are sandboxed to the root; script edits are tracked in a per-script undo
stack persisted outside the workspace.
"""

import re
import shutil
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .diffing import DiffSummary, unified_diff
from .errors import (
    InvalidRangeError,
    MissingFileError,
    NothingToUndoError,
    PerformanceExtractionError,
    SandboxViolation,
    WorkspaceValidationError,
)

ROLE_METHODOLOGY = "methodology"
ROLE_DATASET = "dataset"
ROLE_PSEUDOCODE = "pseudocode"
ROLE_STARTER_CODE = "starter_code"
ROLE_STARTER_PERFORMANCE = "starter_performance"
ROLE_SUBPART = "subpart"
ROLE_SUPPLEMENTARY = "supplementary"
ROLE_GENERATED = "generated"

MANDATORY_ROLES = (
    ROLE_METHODOLOGY,
    ROLE_DATASET,
    ROLE_PSEUDOCODE,
    ROLE_STARTER_CODE,
    ROLE_STARTER_PERFORMANCE,
)

HIGHER_BETTER = "higher_better"
LOWER_BETTER = "lower_better"

MANIFEST_NAME = "workspace.toml"

# window cap for inspect_lines; larger spans flood short-term memory
INSPECT_MAX_LINES = 100

_SUBPART_NAME = re.compile(r"subpart_([A-Za-z0-9]+)_([A-Za-z0-9]+)\.\w+$")


@dataclass(frozen=True)
class KnownFile:
    relative_path: str
    role: str
    subpart_index: Optional[Tuple[str, str]] = None

    def __post_init__(self) -> None:
        if (self.role == ROLE_SUBPART) != (self.subpart_index is not None):
            raise WorkspaceValidationError(
                f"{self.relative_path}: subpart_index is required exactly for "
                f"role={ROLE_SUBPART!r}"
            )


@dataclass(frozen=True)
class PerformanceValue:
    value: float
    direction: str

    def improved_by(self, other: float) -> bool:
        """True when `other` is strictly better than this value."""
        if self.direction == HIGHER_BETTER:
            return other > self.value
        return other < self.value


class EditHistory:
    """Per-script stacks of prior full file contents, mirrored to disk.

    `None` on the stack marks "file did not exist before this edit"; popping
    it removes the file again.
    """

    _ABSENT_SUFFIX = ".absent"
    _SNAP_SUFFIX = ".snap"

    def __init__(self, directory: Optional[Path] = None):
        if directory is None:
            directory = Path(tempfile.mkdtemp(prefix="edit-history-"))
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def _script_dir(self, script: str) -> Path:
        return self.directory / script.replace("/", "__").replace("\\", "__")

    def _entries(self, script: str) -> List[Path]:
        d = self._script_dir(script)
        if not d.is_dir():
            return []
        return sorted(p for p in d.iterdir() if p.suffix in (self._SNAP_SUFFIX, self._ABSENT_SUFFIX))

    def depth(self, script: str) -> int:
        return len(self._entries(script))

    def push(self, script: str, prior_content: Optional[str]) -> None:
        d = self._script_dir(script)
        d.mkdir(parents=True, exist_ok=True)
        index = self.depth(script)
        if prior_content is None:
            (d / f"{index:06d}{self._ABSENT_SUFFIX}").write_text("", encoding="utf-8")
        else:
            (d / f"{index:06d}{self._SNAP_SUFFIX}").write_text(prior_content, encoding="utf-8")

    def pop(self, script: str) -> Optional[str]:
        entries = self._entries(script)
        if not entries:
            raise NothingToUndoError(f"no edits recorded for {script!r}; nothing to undo")
        top = entries[-1]
        content = None if top.suffix == self._ABSENT_SUFFIX else top.read_text(encoding="utf-8")
        top.unlink()
        return content

    def tracked_scripts(self) -> List[str]:
        if not self.directory.is_dir():
            return []
        return sorted(
            d.name.replace("__", "/") for d in self.directory.iterdir() if d.is_dir() and self._entries_raw(d)
        )

    def _entries_raw(self, d: Path) -> List[Path]:
        return [p for p in d.iterdir() if p.suffix in (self._SNAP_SUFFIX, self._ABSENT_SUFFIX)]


class Workspace:
    """Sandboxed file environment with manifest, diffing and edit history."""

    def __init__(
        self,
        root_dir: Path,
        manifest: List[KnownFile],
        script_interpreter: str,
        perf_pattern: str,
        perf_direction: str,
        history_dir: Optional[Path] = None,
    ):
        self.root_dir = Path(root_dir).resolve()
        if not self.root_dir.is_dir():
            raise WorkspaceValidationError(f"workspace root is not a directory: {root_dir}")
        self.manifest = list(manifest)
        self.script_interpreter = script_interpreter
        self.perf_pattern = perf_pattern
        self.perf_direction = perf_direction
        self.history = EditHistory(history_dir)
        self._validate()

    # -- construction ---------------------------------------------------

    @classmethod
    def load(cls, root_dir: Path, history_dir: Optional[Path] = None) -> "Workspace":
        """Build a workspace from the `workspace.toml` manifest at its root."""
        root = Path(root_dir)
        manifest_path = root / MANIFEST_NAME
        if not manifest_path.is_file():
            raise WorkspaceValidationError(f"missing {MANIFEST_NAME} in {root}")
        try:
            raw = tomllib.loads(manifest_path.read_text(encoding="utf-8"))
        except tomllib.TOMLDecodeError as exc:
            raise WorkspaceValidationError(f"{manifest_path} is not valid TOML: {exc}")

        files = raw.get("files", {})
        manifest: List[KnownFile] = []
        for role in MANDATORY_ROLES:
            if role not in files:
                raise WorkspaceValidationError(
                    f"manifest does not declare mandatory role {role!r}"
                )
            manifest.append(KnownFile(relative_path=str(files[role]), role=role))
        for rel in raw.get("subparts", []):
            match = _SUBPART_NAME.search(str(rel))
            index = (match.group(1), match.group(2)) if match else None
            if index is None:
                raise WorkspaceValidationError(
                    f"subpart file {rel!r} does not follow the subpart_<i>_<j> naming scheme"
                )
            manifest.append(KnownFile(relative_path=str(rel), role=ROLE_SUBPART, subpart_index=index))
        for rel in raw.get("supplementary", []):
            manifest.append(KnownFile(relative_path=str(rel), role=ROLE_SUPPLEMENTARY))

        return cls(
            root_dir=root,
            manifest=manifest,
            script_interpreter=str(raw.get("script_interpreter", "python3")),
            perf_pattern=str(raw.get("perf_pattern", "")),
            perf_direction=str(raw.get("perf_direction", HIGHER_BETTER)),
            history_dir=history_dir,
        )

    def _validate(self) -> None:
        declared_roles = {f.role for f in self.manifest}
        missing_roles = [r for r in MANDATORY_ROLES if r not in declared_roles]
        if missing_roles:
            raise WorkspaceValidationError(
                f"manifest is missing mandatory roles: {', '.join(missing_roles)}"
            )
        paths = [f.relative_path for f in self.manifest]
        if len(paths) != len(set(paths)):
            dupes = sorted({p for p in paths if paths.count(p) > 1})
            raise WorkspaceValidationError(f"duplicate manifest paths: {', '.join(dupes)}")
        for known in self.manifest:
            if known.role == ROLE_GENERATED:
                continue
            if not self.resolve(known.relative_path).is_file():
                raise WorkspaceValidationError(
                    f"declared file for role {known.role!r} is absent: {known.relative_path}"
                )
        if self.perf_direction not in (HIGHER_BETTER, LOWER_BETTER):
            raise WorkspaceValidationError(
                f"perf_direction must be {HIGHER_BETTER!r} or {LOWER_BETTER!r}, "
                f"got {self.perf_direction!r}"
            )
        if not self.perf_pattern:
            raise WorkspaceValidationError("perf_pattern must be a non-empty regex")
        try:
            compiled = re.compile(self.perf_pattern)
        except re.error as exc:
            raise WorkspaceValidationError(f"perf_pattern is not a valid regex: {exc}")
        if compiled.groups != 1:
            raise WorkspaceValidationError(
                f"perf_pattern must have exactly one capture group, has {compiled.groups}"
            )
        # must extract exactly one value from the starter-performance file
        self.read_baseline_performance()

    # -- path handling ---------------------------------------------------

    def resolve(self, relative_path: str) -> Path:
        """Resolve a manifest-relative path, refusing escapes from the root."""
        rel = str(relative_path)
        candidate = (self.root_dir / rel).resolve()
        if candidate != self.root_dir and self.root_dir not in candidate.parents:
            raise SandboxViolation(
                f"path {relative_path!r} resolves outside the workspace root"
            )
        return candidate

    def path_for_role(self, role: str) -> str:
        for known in self.manifest:
            if known.role == role:
                return known.relative_path
        raise WorkspaceValidationError(f"no manifest entry with role {role!r}")

    def files_with_role(self, role: str) -> List[KnownFile]:
        return [f for f in self.manifest if f.role == role]

    def read_file(self, relative_path: str) -> str:
        path = self.resolve(relative_path)
        if not path.is_file():
            raise MissingFileError(f"file not found: {relative_path}")
        return path.read_text(encoding="utf-8")

    def register_generated(self, relative_path: str) -> None:
        if any(f.relative_path == relative_path for f in self.manifest):
            return
        self.manifest.append(KnownFile(relative_path=relative_path, role=ROLE_GENERATED))

    # -- file actions ----------------------------------------------------

    def list_files(self, directory: str = ".") -> List[str]:
        """Non-recursive listing, lexicographic, directories suffixed with '/'."""
        path = self.resolve(directory)
        if not path.is_dir():
            raise MissingFileError(f"directory not found: {directory}")
        entries = []
        for child in path.iterdir():
            # the manifest is runner metadata, not part of the agent's environment
            if path == self.root_dir and child.name == MANIFEST_NAME:
                continue
            entries.append(child.name + "/" if child.is_dir() else child.name)
        return sorted(entries)

    def copy_file(self, source: str, destination: str) -> str:
        src = self.resolve(source)
        dst = self.resolve(destination)
        if not src.is_file():
            raise MissingFileError(f"source file not found: {source}")
        if not dst.parent.is_dir():
            raise MissingFileError(
                f"destination parent directory does not exist: {destination}"
            )
        shutil.copyfile(src, dst)
        self.register_generated(destination)
        return f"Copied {source} to {destination}."

    def inspect_lines(self, script: str, start: int, end: int) -> str:
        """Lines start..min(end, EOF), 1-based, each prefixed '<n>: '.

        The end is clamped to EOF first (planners routinely overshoot); the
        100-line window applies to the clamped span.
        """
        if start < 1:
            raise InvalidRangeError(f"start line must be >= 1, got {start}")
        if start > end:
            raise InvalidRangeError(f"invalid range: start {start} > end {end}")
        content = self.read_file(script)
        lines = content.splitlines(keepends=True)
        if start > len(lines):
            raise InvalidRangeError(
                f"start line {start} is beyond the end of {script} ({len(lines)} lines)"
            )
        effective_end = min(end, len(lines))
        if effective_end - start + 1 > INSPECT_MAX_LINES:
            raise InvalidRangeError(
                f"requested span of {effective_end - start + 1} lines exceeds the "
                f"{INSPECT_MAX_LINES}-line window; narrow the span"
            )
        excerpt = lines[start - 1 : effective_end]
        return "".join(f"{start + i}: {line}" for i, line in enumerate(excerpt))

    def get_diff(self, script_a: str, script_b: str) -> DiffSummary:
        a = self.read_file(script_a)
        b = self.read_file(script_b)
        return unified_diff(a, b, a_label=script_a, b_label=script_b)

    def apply_edit(self, script: str, new_content: str) -> DiffSummary:
        """Write new content, pushing the prior state onto the undo stack."""
        path = self.resolve(script)
        prior = path.read_text(encoding="utf-8") if path.is_file() else None
        self.history.push(script, prior)
        path.write_text(new_content, encoding="utf-8")
        self.register_generated(script)
        return unified_diff(prior or "", new_content, a_label=script, b_label=script)

    def undo_edit(self, script: str) -> str:
        path = self.resolve(script)
        restored = self.history.pop(script)
        if restored is None:
            if path.is_file():
                path.unlink()
            return f"Removed {script}; it did not exist before the undone edit."
        path.write_text(restored, encoding="utf-8")
        return f"Restored {script} to its previous version."

    # -- performance -----------------------------------------------------

    def extract_performance(self, text: str) -> Optional[float]:
        """Single-match extraction; None when the pattern is absent or ambiguous."""
        matches = re.findall(self.perf_pattern, text)
        if len(matches) != 1:
            return None
        try:
            return float(matches[0])
        except (TypeError, ValueError):
            return None

    def read_baseline_performance(self) -> PerformanceValue:
        rel = self.path_for_role(ROLE_STARTER_PERFORMANCE)
        text = self.read_file(rel)
        matches = re.findall(self.perf_pattern, text)
        if not matches:
            raise PerformanceExtractionError(
                f"perf_pattern {self.perf_pattern!r} matched nothing in {rel}"
            )
        if len(matches) > 1:
            raise PerformanceExtractionError(
                f"perf_pattern {self.perf_pattern!r} matched {len(matches)} values "
                f"in {rel}; expected exactly one"
            )
        try:
            value = float(matches[0])
        except (TypeError, ValueError):
            raise PerformanceExtractionError(
                f"captured value {matches[0]!r} from {rel} is not numeric"
            )
        return PerformanceValue(value=value, direction=self.perf_direction)


def mandatory_file_map(workspace: Workspace) -> Dict[str, str]:
    """role -> relative path for the five mandatory inputs."""
    return {role: workspace.path_for_role(role) for role in MANDATORY_ROLES}
