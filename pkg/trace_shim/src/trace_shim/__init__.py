"""Line-count tracing shim plus its deterministic fixture corpus."""

__version__ = "0.1.0"

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Dict, List

from .shim import (
    NEVER_MARKER,
    ShimError,
    ShimReport,
    cover_path_for,
    executable_lines,
    shim_run,
    write_cover,
)

__all__ = [
    "NEVER_MARKER",
    "FixtureScript",
    "ShimError",
    "ShimReport",
    "cover_path_for",
    "executable_lines",
    "fixture_corpus",
    "shim_run",
    "write_cover",
]


@dataclass(frozen=True)
class FixtureScript:
    name: str
    path: Path
    expectation: Dict


def fixture_corpus() -> List[FixtureScript]:
    """The bundled fixture scripts with their documented expected outputs."""
    fixtures_dir = Path(str(resources.files("trace_shim") / "fixtures"))
    corpus = []
    for script in sorted(fixtures_dir.glob("*.py")):
        expect = script.with_name(f"{script.stem}.expect.json")
        corpus.append(
            FixtureScript(
                name=script.stem,
                path=script,
                expectation=json.loads(expect.read_text(encoding="utf-8")),
            )
        )
    return corpus
