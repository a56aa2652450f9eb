from hypothesis import given
from hypothesis import strategies as st

from rca.diffing import diff_counts, unified_diff


def lcs_length(a, b):
    """Independent O(n*m) longest-common-subsequence oracle."""
    table = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            if a[i - 1] == b[j - 1]:
                table[i][j] = table[i - 1][j - 1] + 1
            else:
                table[i][j] = max(table[i - 1][j], table[i][j - 1])
    return table[len(a)][len(b)]


BASE = "\n".join(f"line {i}" for i in range(1, 11)) + "\n"


def test_identical_files_give_empty_diff():
    summary = unified_diff(BASE, BASE)
    assert summary.text == ""
    assert summary.counts() == (0, 0)
    assert summary.is_empty


def test_one_replaced_line_counts_one_one():
    changed = BASE.replace("line 4", "line four")
    # oracle: minimal diff is one deletion plus one addition
    a, b = BASE.splitlines(), changed.splitlines()
    assert len(a) + len(b) - 2 * lcs_length(a, b) == 2
    assert diff_counts(BASE, changed) == (1, 1)


def test_three_appended_lines_count_three_zero():
    appended = BASE + "extra 1\nextra 2\nextra 3\n"
    a, b = BASE.splitlines(), appended.splitlines()
    assert len(b) - lcs_length(a, b) == 3
    assert len(a) - lcs_length(a, b) == 0
    assert diff_counts(BASE, appended) == (3, 0)


def test_diff_text_marks_changes():
    changed = BASE.replace("line 4", "line four")
    summary = unified_diff(BASE, changed, a_label="old", b_label="new")
    assert "--- old" in summary.text
    assert "+++ new" in summary.text
    assert "-line 4" in summary.text
    assert "+line four" in summary.text


@st.composite
def text_pair(draw):
    lines = st.lists(st.sampled_from(["a", "b", "c", "dd", ""]), max_size=12)
    a = "\n".join(draw(lines))
    b = "\n".join(draw(lines))
    return a, b


@given(text_pair())
def test_counts_symmetric_under_swap(pair):
    a, b = pair
    additions, deletions = diff_counts(a, b)
    swapped_additions, swapped_deletions = diff_counts(b, a)
    assert (additions, deletions) == (swapped_deletions, swapped_additions)


@given(text_pair())
def test_counts_match_lcs_oracle(pair):
    a, b = pair
    a_lines, b_lines = a.splitlines(), b.splitlines()
    lcs = lcs_length(a_lines, b_lines)
    assert diff_counts(a, b) == (len(b_lines) - lcs, len(a_lines) - lcs)


@given(text_pair())
def test_count_difference_matches_length_difference(pair):
    a, b = pair
    additions, deletions = diff_counts(a, b)
    assert additions - deletions == len(b.splitlines()) - len(a.splitlines())


@given(st.text(alphabet="ab\n", max_size=60))
def test_self_diff_always_empty(text):
    assert diff_counts(text, text) == (0, 0)
