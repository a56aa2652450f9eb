"""Registry of the 14 agent actions and Action Input parsing.

Action names and input field names are the human-readable strings shown to
the planner; the Action Input wire format is a single JSON object keyed by
those field names (matched case-insensitively).
"""

import difflib
import json
import shlex
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .errors import ActionInputError, ActionLookupError

POOL_A = "A"  # understanding / planning
POOL_B = "B"  # code-mutating
POOL_C = "C"  # general

KIND_PROGRAMMATIC = "programmatic"
KIND_LLM = "llm_backed"

FIELD_PATH = "path"
FIELD_TEXT = "text"
FIELD_INTEGER = "integer"
FIELD_ARGS = "argument-list"

Value = Union[str, int, List[str]]


@dataclass(frozen=True)
class ActionSpec:
    name: str
    inputs: Tuple[Tuple[str, str], ...]
    pool: str
    kind: str
    description: str

    def field_names(self) -> List[str]:
        return [name for name, _ in self.inputs]


@dataclass(frozen=True)
class ActionInvocation:
    action: ActionSpec
    values: Dict[str, Value] = field(default_factory=dict)
    raw_text: str = ""

    def same_call(self, other: "ActionInvocation") -> bool:
        return self.action.name == other.action.name and self.values == other.values

    def describe(self) -> str:
        rendered = ", ".join(f"{k}={v!r}" for k, v in self.values.items())
        return f"{self.action.name}({rendered})"


def _spec(name, inputs, pool, kind, description) -> ActionSpec:
    return ActionSpec(name=name, inputs=tuple(inputs), pool=pool, kind=kind, description=description)


_SPECS: List[ActionSpec] = [
    _spec(
        "List Files",
        [("directory path", FIELD_PATH)],
        POOL_A,
        KIND_PROGRAMMATIC,
        "List the entries of a directory inside the working directory.",
    ),
    _spec(
        "Copy File",
        [("source", FIELD_PATH), ("destination", FIELD_PATH)],
        POOL_B,
        KIND_PROGRAMMATIC,
        "Copy a file to a new path inside the working directory.",
    ),
    _spec(
        "Inspect Script Lines",
        [
            ("script name", FIELD_PATH),
            ("start line number", FIELD_INTEGER),
            ("end line number", FIELD_INTEGER),
        ],
        POOL_A,
        KIND_PROGRAMMATIC,
        "Show a numbered excerpt of a script (at most 100 lines per call).",
    ),
    _spec(
        "Execute Script",
        [("script name", FIELD_PATH), ("arguments", FIELD_ARGS)],
        POOL_B,
        KIND_PROGRAMMATIC,
        "Run a script and observe its output, errors and execution trace.",
    ),
    _spec(
        "Undo Edit Script",
        [("script name", FIELD_PATH)],
        POOL_B,
        KIND_PROGRAMMATIC,
        "Revert the most recent edit made to a script.",
    ),
    _spec(
        "Get Code Diff",
        [("script 1 name", FIELD_PATH), ("script 2 name", FIELD_PATH)],
        POOL_A,
        KIND_PROGRAMMATIC,
        "Show the line diff between two scripts.",
    ),
    _spec(
        "Final Answer",
        [("description", FIELD_TEXT)],
        POOL_C,
        KIND_PROGRAMMATIC,
        "End the run with a description of what was accomplished.",
    ),
    _spec(
        "Request Planning Expert Help",
        [("request description", FIELD_TEXT)],
        POOL_C,
        KIND_LLM,
        "Ask a stronger planning model for help when stuck (limited budget).",
    ),
    _spec(
        "Understand File",
        [("file name", FIELD_PATH), ("things to look for", FIELD_TEXT)],
        POOL_A,
        KIND_LLM,
        "Have a worker read a whole file and answer a focused question about it.",
    ),
    _spec(
        "Understand File with Code Context",
        [
            ("file name", FIELD_PATH),
            ("file start line number", FIELD_INTEGER),
            ("file end line number", FIELD_INTEGER),
            ("script name", FIELD_PATH),
            ("script start line number", FIELD_INTEGER),
            ("script end line number", FIELD_INTEGER),
            ("things to look for", FIELD_TEXT),
        ],
        POOL_A,
        KIND_LLM,
        "Answer a question about a file excerpt given a related code excerpt.",
    ),
    _spec(
        "Edit Script",
        [
            ("script name", FIELD_PATH),
            ("edit instructions", FIELD_TEXT),
            ("save script name", FIELD_PATH),
        ],
        POOL_B,
        KIND_LLM,
        "Have a worker rewrite a script according to edit instructions.",
    ),
    _spec(
        "Edit Script with Context",
        [
            ("script name", FIELD_PATH),
            ("edit instructions", FIELD_TEXT),
            ("context file name", FIELD_PATH),
            ("file start line number", FIELD_INTEGER),
            ("file end line number", FIELD_INTEGER),
            ("save script name", FIELD_PATH),
        ],
        POOL_B,
        KIND_LLM,
        "Rewrite a script with an excerpt from another file as extra context.",
    ),
    _spec(
        "Reflection",
        [("things to reflect on", FIELD_TEXT)],
        POOL_C,
        KIND_LLM,
        "Pause to reflect on past actions and observations and adjust the plan.",
    ),
    _spec(
        "Check Implementation",
        [("script name", FIELD_PATH)],
        POOL_C,
        KIND_LLM,
        "Check, subpart by subpart, whether a script implements the methodology.",
    ),
]

REGISTRY: Dict[str, ActionSpec] = {spec.name: spec for spec in _SPECS}

# legacy "(AI)" suffixed spellings map onto the canonical edit actions
_ALIASES = {
    "Edit Script (AI)": "Edit Script",
    "Edit Script (AI) with context": "Edit Script with Context",
    "Edit Script (AI) with Context": "Edit Script with Context",
    "Edit Script with context": "Edit Script with Context",
    "Understand File with code context": "Understand File with Code Context",
}

assert len(REGISTRY) == 14


def action_names() -> List[str]:
    return [spec.name for spec in _SPECS]


def lookup(name: str) -> ActionSpec:
    """Exact-match lookup (after trimming); unknown names list the registry."""
    trimmed = name.strip()
    canonical = _ALIASES.get(trimmed, trimmed)
    if canonical in REGISTRY:
        return REGISTRY[canonical]
    close = difflib.get_close_matches(trimmed, action_names(), n=1)
    hint = f" Did you mean {close[0]!r}?" if close else ""
    raise ActionLookupError(
        f"unknown action {name.strip()!r}.{hint} Valid actions: "
        + ", ".join(action_names())
    )


def pool_of(invocation: ActionInvocation) -> str:
    return invocation.action.pool


def _decode_object(block: str) -> Dict[str, object]:
    text = block.strip()
    # tolerate fenced blocks around the JSON object
    if text.startswith("```"):
        text = text.split("\n", 1)[1] if "\n" in text else ""
        if text.rstrip().endswith("```"):
            text = text.rstrip()[: -len("```")]
        text = text.strip()
    start = text.find("{")
    if start == -1:
        raise ActionInputError(
            "Action Input must be a single JSON object such as "
            '{"field name": "value"}'
        )
    try:
        obj, _ = json.JSONDecoder().raw_decode(text[start:])
    except json.JSONDecodeError as exc:
        raise ActionInputError(f"Action Input is not valid JSON: {exc}")
    if not isinstance(obj, dict):
        raise ActionInputError("Action Input must be a JSON object, not a list or scalar")
    return obj


def _coerce(field_name: str, kind: str, value: object) -> Value:
    if kind == FIELD_INTEGER:
        if isinstance(value, bool):
            raise ActionInputError(f"field {field_name!r} must be an integer")
        if isinstance(value, int):
            return value
        if isinstance(value, float) and value.is_integer():
            return int(value)
        if isinstance(value, str):
            try:
                return int(value.strip())
            except ValueError:
                pass
        raise ActionInputError(f"field {field_name!r} must be an integer, got {value!r}")
    if kind == FIELD_ARGS:
        if isinstance(value, str):
            return shlex.split(value)
        if isinstance(value, list) and all(isinstance(item, str) for item in value):
            return list(value)
        raise ActionInputError(
            f"field {field_name!r} must be a string or a list of strings, got {value!r}"
        )
    # path and free text
    if isinstance(value, str):
        return value
    raise ActionInputError(f"field {field_name!r} must be a string, got {value!r}")


def parse_invocation(spec: ActionSpec, action_input_block: str) -> ActionInvocation:
    """Validate an Action Input block against the action's schema."""
    obj = _decode_object(action_input_block)
    by_lower = {name.lower(): (name, kind) for name, kind in spec.inputs}
    values: Dict[str, Value] = {}
    for key, value in obj.items():
        matched = by_lower.get(str(key).strip().lower())
        if matched is None:
            raise ActionInputError(
                f"unknown field {key!r} for action {spec.name!r}; expected fields: "
                + ", ".join(spec.field_names())
            )
        canonical, kind = matched
        if canonical in values:
            raise ActionInputError(f"field {canonical!r} given more than once")
        values[canonical] = _coerce(canonical, kind, value)
    missing = [name for name in spec.field_names() if name not in values]
    if missing:
        raise ActionInputError(
            f"action {spec.name!r} is missing required fields: " + ", ".join(missing)
        )
    ordered = {name: values[name] for name in spec.field_names()}
    return ActionInvocation(action=spec, values=ordered, raw_text=action_input_block)


def render_input(invocation: ActionInvocation) -> str:
    """Canonical Action Input block; parse_invocation(render(x)) == x."""
    return json.dumps(invocation.values, ensure_ascii=False)


def render_catalog(specs: Optional[Sequence[ActionSpec]] = None) -> str:
    """The action catalog text injected into planner prompts."""
    lines = []
    for spec in specs or _SPECS:
        fields = ", ".join(spec.field_names())
        lines.append(f"- {spec.name} ({fields}): {spec.description}")
    return "\n".join(lines)
