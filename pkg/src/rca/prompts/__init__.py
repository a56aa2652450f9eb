"""Prompt template assets with named `{placeholder}` fields.

Templates that carry placeholders must not contain literal braces; templates
without placeholders (the response-format text) are loaded verbatim.
"""

from functools import lru_cache
from importlib import resources


@lru_cache(maxsize=None)
def load_template(name: str) -> str:
    return (resources.files("rca") / "prompts" / name).read_text(encoding="utf-8")
