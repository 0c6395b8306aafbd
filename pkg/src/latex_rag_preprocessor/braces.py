"""Brace-balanced scanning helpers shared by the .aux, annotation and
LaTeX-to-Markdown parsers."""

from __future__ import annotations


def skip_whitespace(text: str, pos: int) -> int:
    while pos < len(text) and text[pos] in " \t\n":
        pos += 1
    return pos


def read_group(text: str, pos: int, open_ch: str = "{", close_ch: str = "}") -> tuple[str, int] | None:
    """Read one balanced ``{...}`` group starting at ``pos``.

    Returns (content, position after the closing brace), or None when
    ``pos`` is not at an opening brace or the group never closes.
    """
    if pos >= len(text) or text[pos] != open_ch:
        return None
    depth = 0
    i = pos
    while i < len(text):
        ch = text[i]
        if ch == "\\" and i + 1 < len(text):
            i += 2
            continue
        if ch == open_ch:
            depth += 1
        elif ch == close_ch:
            depth -= 1
            if depth == 0:
                return text[pos + 1 : i], i + 1
        i += 1
    return None


def read_groups(text: str, pos: int, count: int) -> tuple[list[str], int] | None:
    """Read ``count`` consecutive brace groups, allowing whitespace (and
    newlines) between them. Returns None unless all groups close."""
    groups: list[str] = []
    for _ in range(count):
        pos = skip_whitespace(text, pos)
        got = read_group(text, pos)
        if got is None:
            return None
        content, pos = got
        groups.append(content)
    return groups, pos


def read_optional(text: str, pos: int) -> tuple[str | None, int]:
    """Read an optional ``[...]`` argument if present at ``pos``."""
    pos = skip_whitespace(text, pos)
    got = read_group(text, pos, "[", "]")
    if got is None:
        return None, pos
    return got[0], got[1]
