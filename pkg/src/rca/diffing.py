"""Line diffs: unified diff text plus added/removed line counts.

Small inputs get a true minimal (LCS) diff, which makes the counts exactly
symmetric under argument swap; inputs too large for the quadratic table
fall back to SequenceMatcher with autojunk disabled.
"""

from dataclasses import dataclass
from difflib import SequenceMatcher
from typing import Iterator, List, Tuple

# cap on len(a) * len(b) for the quadratic LCS table (~1000x1000 lines)
_LCS_CELL_LIMIT = 1_000_000

_CONTEXT = 3

Opcode = Tuple[str, int, int, int, int]


@dataclass(frozen=True)
class DiffSummary:
    text: str
    additions: int
    deletions: int

    @property
    def is_empty(self) -> bool:
        return self.additions == 0 and self.deletions == 0

    def counts(self) -> Tuple[int, int]:
        return (self.additions, self.deletions)


def _lcs_opcodes(a: List[str], b: List[str]) -> List[Opcode]:
    """Minimal edit script via a longest-common-subsequence table."""
    n, m = len(a), len(b)
    table = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        row = table[i]
        below = table[i + 1]
        for j in range(m - 1, -1, -1):
            if a[i] == b[j]:
                row[j] = below[j + 1] + 1
            else:
                row[j] = below[j] if below[j] >= row[j + 1] else row[j + 1]
    opcodes: List[Opcode] = []

    def push(tag: str, i2: int, j2: int) -> None:
        if opcodes and opcodes[-1][0] == tag:
            prev = opcodes[-1]
            opcodes[-1] = (tag, prev[1], i2, prev[3], j2)
        else:
            start_i = i2 - 1 if tag != "insert" else i2
            start_j = j2 - 1 if tag != "delete" else j2
            opcodes.append((tag, start_i, i2, start_j, j2))

    i = j = 0
    while i < n and j < m:
        if a[i] == b[j]:
            i += 1
            j += 1
            push("equal", i, j)
        elif table[i + 1][j] >= table[i][j + 1]:
            i += 1
            push("delete", i, j)
        else:
            j += 1
            push("insert", i, j)
    if i < n:
        opcodes.append(("delete", i, n, j, j))
    if j < m:
        opcodes.append(("insert", i, i, j, m))
    return opcodes


def _opcodes(a: List[str], b: List[str]) -> List[Opcode]:
    if len(a) * len(b) <= _LCS_CELL_LIMIT:
        return _lcs_opcodes(a, b)
    matcher = SequenceMatcher(None, a, b, autojunk=False)
    return list(matcher.get_opcodes())


def _grouped(opcodes: List[Opcode], context: int = _CONTEXT) -> Iterator[List[Opcode]]:
    """Split opcodes into hunks with up to `context` equal lines around changes."""
    codes = list(opcodes)
    if not codes:
        return
    if codes[0][0] == "equal":
        tag, i1, i2, j1, j2 = codes[0]
        codes[0] = (tag, max(i1, i2 - context), i2, max(j1, j2 - context), j2)
    if codes[-1][0] == "equal":
        tag, i1, i2, j1, j2 = codes[-1]
        codes[-1] = (tag, i1, min(i2, i1 + context), j1, min(j2, j1 + context))
    group: List[Opcode] = []
    for tag, i1, i2, j1, j2 in codes:
        if tag == "equal" and i2 - i1 > 2 * context:
            group.append((tag, i1, min(i2, i1 + context), j1, min(j2, j1 + context)))
            yield group
            group = [(tag, max(i1, i2 - context), i2, max(j1, j2 - context), j2)]
        else:
            group.append((tag, i1, i2, j1, j2))
    if group and not (len(group) == 1 and group[0][0] == "equal"):
        yield group


def _format_range(start: int, length: int) -> str:
    # unified format: empty ranges point at the line before the change
    if length == 1:
        return str(start + 1)
    if length == 0:
        return f"{start},0"
    return f"{start + 1},{length}"


def unified_diff(
    a_text: str,
    b_text: str,
    a_label: str = "a",
    b_label: str = "b",
    context: int = _CONTEXT,
) -> DiffSummary:
    """Minimal line-based diff of two texts with +/- line counts."""
    a = a_text.splitlines()
    b = b_text.splitlines()
    lines: List[str] = []
    additions = 0
    deletions = 0
    for group in _grouped(_opcodes(a, b), context):
        first, last = group[0], group[-1]
        a_range = _format_range(first[1], last[2] - first[1])
        b_range = _format_range(first[3], last[4] - first[3])
        lines.append(f"@@ -{a_range} +{b_range} @@")
        for tag, i1, i2, j1, j2 in group:
            if tag == "equal":
                lines.extend(" " + line for line in a[i1:i2])
                continue
            if tag in ("replace", "delete"):
                lines.extend("-" + line for line in a[i1:i2])
                deletions += i2 - i1
            if tag in ("replace", "insert"):
                lines.extend("+" + line for line in b[j1:j2])
                additions += j2 - j1
    if not lines:
        return DiffSummary(text="", additions=0, deletions=0)
    header = [f"--- {a_label}", f"+++ {b_label}"]
    return DiffSummary(
        text="\n".join(header + lines) + "\n",
        additions=additions,
        deletions=deletions,
    )


def diff_counts(a_text: str, b_text: str) -> Tuple[int, int]:
    summary = unified_diff(a_text, b_text)
    return summary.counts()
