"""The six-section planner response format and its parser."""

import re
from dataclasses import dataclass
from typing import Dict, List, Tuple

from .errors import ResponseFormatError

HEADINGS: Tuple[str, ...] = (
    "Reflection:",
    "Research Plan and Status:",
    "Fact Check:",
    "Thought:",
    "Action:",
    "Action Input:",
)

_FIELD_BY_HEADING = {
    "Reflection:": "reflection",
    "Research Plan and Status:": "research_plan_and_status",
    "Fact Check:": "fact_check",
    "Thought:": "thought",
    "Action:": "action",
    "Action Input:": "action_input",
}


@dataclass(frozen=True)
class PlannerResponse:
    reflection: str
    research_plan_and_status: str
    fact_check: str
    thought: str
    action: str
    action_input: str
    raw_text: str = ""

    def to_dict(self) -> Dict[str, str]:
        return {
            "reflection": self.reflection,
            "research_plan_and_status": self.research_plan_and_status,
            "fact_check": self.fact_check,
            "thought": self.thought,
            "action": self.action,
            "action_input": self.action_input,
            "raw_text": self.raw_text,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, str]) -> "PlannerResponse":
        return cls(
            reflection=data["reflection"],
            research_plan_and_status=data["research_plan_and_status"],
            fact_check=data["fact_check"],
            thought=data["thought"],
            action=data["action"],
            action_input=data["action_input"],
            raw_text=data.get("raw_text", ""),
        )

    def render(self) -> str:
        return (
            f"Reflection: {self.reflection}\n"
            f"Research Plan and Status: {self.research_plan_and_status}\n"
            f"Fact Check: {self.fact_check}\n"
            f"Thought: {self.thought}\n"
            f"Action: {self.action}\n"
            f"Action Input: {self.action_input}"
        )


def _heading_positions(text: str) -> List[Tuple[int, int, str]]:
    """(start, content_start, heading) for every heading found at a line start."""
    positions = []
    for heading in HEADINGS:
        for match in re.finditer(
            rf"^{re.escape(heading)}", text, flags=re.MULTILINE
        ):
            positions.append((match.start(), match.end(), heading))
    positions.sort()
    return positions


def parse_planner_response(text: str) -> PlannerResponse:
    """Split a response on the six exact headings, in order.

    Trailing text after the Action Input heading belongs to the Action Input
    section. Missing, duplicated, or out-of-order headings are format errors.
    """
    positions = _heading_positions(text)
    seen = [heading for _, _, heading in positions]
    for heading in HEADINGS:
        if seen.count(heading) == 0:
            raise ResponseFormatError(f"response is missing the {heading!r} section")
        if seen.count(heading) > 1:
            raise ResponseFormatError(f"response repeats the {heading!r} heading")
    if seen != list(HEADINGS):
        raise ResponseFormatError(
            "response sections are out of order; expected "
            + " ".join(HEADINGS)
        )
    sections: Dict[str, str] = {}
    for i, (start, content_start, heading) in enumerate(positions):
        end = positions[i + 1][0] if i + 1 < len(positions) else len(text)
        sections[_FIELD_BY_HEADING[heading]] = text[content_start:end].strip()
    return PlannerResponse(raw_text=text, **sections)
