"""Pull figures, structural environments (exercise, theorem, ...) and
explicit chunk-break markers out of the line stream before Markdown
conversion.

Extraction never renumbers the surviving lines: every ``SourceLine`` keeps
the global position assigned at load time, so downstream stages can
interleave blocks and text in document order.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .braces import read_group, read_groups, read_optional, skip_whitespace
from .report import WarningLog
from .source import SourceDocument, SourceLine

STRUCTURAL_ENVS = (
    "exercise",
    "solution",
    "definition",
    "theorem",
    "lemma",
    "proof",
    "example",
    "remark",
)

_HEADING_ORDER = {"part": 0, "chapter": 1, "section": 2, "subsection": 3, "subsubsection": 4, "paragraph": 5}
_HEADING_RE = re.compile(r"\\(part|chapter|section|subsection|subsubsection|paragraph)\*?\s*(?:\[[^\]]*\])?\{")
_LABEL_RE = re.compile(r"\\label\s*\{([^}]*)\}")
_FIGURE_BEGIN_RE = re.compile(r"\\begin\s*\{figure\*?\}")
_FIGURE_END_RE = re.compile(r"\\end\s*\{figure\*?\}")
_INCLUDEGRAPHICS_RE = re.compile(r"\\includegraphics\s*(?:\[[^\]]*\])?\s*\{([^}]*)\}")
_TIKZ_BEGIN_RE = re.compile(r"\\begin\s*\{(tikzpicture|tikzcd)\}")
_CHUNK_BREAK_RE = re.compile(r"\\AIChunkBreak\b")


@dataclass
class FigureBlock:
    label: str = ""
    caption: str = ""
    image_file: str = ""
    tikz_source: str = ""
    ai_description: str = ""
    context_heading_path: list[str] = field(default_factory=list)
    following_context: str = ""
    span: tuple[str, int, int] = ("", 0, 0)
    pos_start: int = -1
    pos_end: int = -1

    @property
    def line_count(self) -> int:
        return self.pos_end - self.pos_start + 1


@dataclass
class StructuralBlock:
    environment: str
    label: str = ""
    body_lines: list[SourceLine] = field(default_factory=list)
    number: str = ""  # from the \Exercise{4.3}{...} macro form
    span: tuple[str, int, int] = ("", 0, 0)
    pos_start: int = -1
    pos_end: int = -1

    @property
    def body(self) -> str:
        return "\n".join(line.text for line in self.body_lines)

    @property
    def line_count(self) -> int:
        return self.pos_end - self.pos_start + 1


class _HeadingTracker:
    """Keeps the raw-title breadcrumb current while scanning the stream."""

    def __init__(self):
        self.stack: list[tuple[int, str]] = []

    def observe(self, line: SourceLine) -> None:
        if line.in_verbatim:
            return
        for m in _HEADING_RE.finditer(line.text):
            order = _HEADING_ORDER[m.group(1)]
            got = read_group(line.text, m.end() - 1)
            title = got[0] if got else line.text[m.end() :]
            self.stack = [(o, t) for (o, t) in self.stack if o < order]
            self.stack.append((order, title.strip()))

    def path(self) -> list[str]:
        return [t for (_, t) in self.stack]


def _find_env_end(lines: list[SourceLine], start: int, begin_re: re.Pattern, end_re: re.Pattern) -> int | None:
    """Index of the line closing the environment opened at ``start``,
    tracking same-environment nesting."""
    depth = 0
    for i in range(start, len(lines)):
        if lines[i].in_verbatim:
            continue
        text = lines[i].text
        depth += len(begin_re.findall(text))
        ends = len(end_re.findall(text))
        if ends:
            depth -= ends
            if depth <= 0:
                return i
    return None


def _first_following_paragraph(lines: list[SourceLine], start: int) -> str:
    """Raw text of the first paragraph after line index ``start``."""
    i = start
    while i < len(lines) and not lines[i].text.strip():
        i += 1
    collected: list[str] = []
    while i < len(lines):
        line = lines[i]
        text = line.text.strip()
        if not text or line.in_verbatim:
            break
        if text.startswith("\\begin") or _HEADING_RE.search(text):
            break
        collected.append(text)
        i += 1
    return " ".join(collected)


def extract_figures(doc: SourceDocument, warnings: WarningLog | None = None) -> tuple[SourceDocument, list[FigureBlock]]:
    """Remove every ``figure`` environment from the stream and capture its
    caption, label, payload and author-supplied description."""
    warnings = warnings if warnings is not None else WarningLog()
    tracker = _HeadingTracker()
    out: list[SourceLine] = []
    figures: list[FigureBlock] = []
    lines = doc.lines
    i = 0
    while i < len(lines):
        line = lines[i]
        if line.in_verbatim or not _FIGURE_BEGIN_RE.search(line.text):
            tracker.observe(line)
            out.append(line)
            i += 1
            continue

        end = _find_env_end(lines, i, _FIGURE_BEGIN_RE, _FIGURE_END_RE)
        if end is None:
            warnings.warn("unbalanced figure environment left in place", line.file, line.line_no)
            tracker.observe(line)
            out.append(line)
            i += 1
            continue

        region = lines[i : end + 1]
        fig = _parse_figure(region, warnings)
        fig.context_heading_path = tracker.path()
        fig.following_context = _first_following_paragraph(lines, end + 1)
        fig.span = (region[0].file, region[0].line_no, region[-1].line_no)
        fig.pos_start = region[0].pos
        fig.pos_end = region[-1].pos
        figures.append(fig)
        i = end + 1

    return SourceDocument(out, doc.main_file, doc.included_files), figures


def _parse_figure(region: list[SourceLine], warnings: WarningLog) -> FigureBlock:
    flat = "\n".join(l.text for l in region)
    fig = FigureBlock()

    cap = re.search(r"\\caption\s*", flat)
    if cap:
        pos = cap.end()
        _, pos = read_optional(flat, pos)
        got = read_group(flat, skip_whitespace(flat, pos))
        if got:
            fig.caption = got[0].strip()
    if not fig.caption:
        warnings.warn("figure without caption", region[0].file, region[0].line_no)

    label = _LABEL_RE.search(flat)
    if label:
        fig.label = label.group(1).strip()

    image = _INCLUDEGRAPHICS_RE.search(flat)
    if image:
        fig.image_file = image.group(1).strip()

    tikz = _TIKZ_BEGIN_RE.search(flat)
    if tikz:
        env = tikz.group(1)
        end = re.search(r"\\end\s*\{" + env + r"\}", flat[tikz.start() :])
        if end:
            fig.tikz_source = flat[tikz.start() : tikz.start() + end.end()]
        else:
            fig.tikz_source = flat[tikz.start() :]

    desc = re.search(r"\\AIDescription\s*", flat)
    if desc:
        got = read_group(flat, skip_whitespace(flat, desc.end()))
        if got:
            fig.ai_description = got[0].strip()

    if not fig.image_file and not fig.tikz_source:
        warnings.warn("figure without image or TikZ payload", region[0].file, region[0].line_no)
    return fig


def extract_structural(doc: SourceDocument, warnings: WarningLog | None = None) -> tuple[SourceDocument, list[StructuralBlock]]:
    """Capture the eight recognized pedagogical environments, plus the
    two-argument ``\\Exercise{number}{text}`` macro form, as blocks."""
    warnings = warnings if warnings is not None else WarningLog()
    begin_res = {
        env: re.compile(r"\\begin\s*\{" + env + r"\}") for env in STRUCTURAL_ENVS
    }
    end_res = {env: re.compile(r"\\end\s*\{" + env + r"\}") for env in STRUCTURAL_ENVS}

    out: list[SourceLine] = []
    blocks: list[StructuralBlock] = []
    lines = doc.lines
    i = 0
    while i < len(lines):
        line = lines[i]
        if line.in_verbatim:
            out.append(line)
            i += 1
            continue

        env = next((e for e in STRUCTURAL_ENVS if begin_res[e].search(line.text)), None)
        if env is None:
            consumed = _try_exercise_macro(lines, i, blocks)
            if consumed:
                i += consumed
            else:
                out.append(line)
                i += 1
            continue

        end = _find_env_end(lines, i, begin_res[env], end_res[env])
        if end is None:
            warnings.warn(f"unbalanced {env} environment left in place", line.file, line.line_no)
            out.append(line)
            i += 1
            continue

        region = lines[i : end + 1]
        nested = sum(len(begin_res[env].findall(l.text)) for l in region if not l.in_verbatim)
        if nested > 1:
            warnings.warn(f"nested {env} environments; keeping the outermost", line.file, line.line_no)

        block = _parse_structural(env, region, begin_res[env], end_res[env])
        blocks.append(block)
        i = end + 1

    return SourceDocument(out, doc.main_file, doc.included_files), blocks


def _parse_structural(env: str, region: list[SourceLine], begin_re: re.Pattern, end_re: re.Pattern) -> StructuralBlock:
    block = StructuralBlock(environment=env)
    block.span = (region[0].file, region[0].line_no, region[-1].line_no)
    block.pos_start = region[0].pos
    block.pos_end = region[-1].pos

    body: list[SourceLine] = []
    first = region[0]
    m = begin_re.search(first.text)
    head_rest = first.text[m.end() :]
    opt, consumed_to = read_optional(head_rest, 0)
    head_rest = head_rest[consumed_to:] if opt is not None else head_rest
    if head_rest.strip():
        body.append(SourceLine(first.file, first.line_no, head_rest, first.in_verbatim, first.pos))
    body.extend(region[1:-1])
    last = region[-1]
    if len(region) > 1:
        tail = last.text[: end_re.search(last.text).start()]
        if tail.strip():
            body.append(SourceLine(last.file, last.line_no, tail, last.in_verbatim, last.pos))

    block.body_lines = body
    label = _LABEL_RE.search("\n".join(l.text for l in body if not l.in_verbatim))
    if label:
        block.label = label.group(1).strip()
    return block


def _try_exercise_macro(lines: list[SourceLine], i: int, blocks: list[StructuralBlock]) -> int:
    """Recognize a standalone ``\\Exercise{number}{text}``; returns the
    number of lines consumed (0 when not matched)."""
    line = lines[i]
    m = re.match(r"\s*\\Exercise\s*\{", line.text)
    if not m:
        return 0
    window = lines[i : min(i + 50, len(lines))]
    flat = "\n".join(l.text for l in window)
    start = re.search(r"\\Exercise", flat).end()
    got = read_groups(flat, start, 2)
    if got is None:
        return 0
    (number, text), end_pos = got
    if flat[end_pos:].split("\n", 1)[0].strip():
        return 0  # trailing text on the closing line: leave it to the converter
    lines_consumed = flat[:end_pos].count("\n") + 1

    region = lines[i : i + lines_consumed]
    body = [
        SourceLine(region[0].file, region[0].line_no + k, part, False, region[0].pos)
        for k, part in enumerate(text.strip().split("\n"))
    ]
    block = StructuralBlock(
        environment="exercise",
        number=number.strip(),
        body_lines=body,
        span=(region[0].file, region[0].line_no, region[-1].line_no),
        pos_start=region[0].pos,
        pos_end=region[-1].pos,
    )
    blocks.append(block)
    return lines_consumed


def find_chunk_breaks(doc: SourceDocument) -> tuple[SourceDocument, list[int]]:
    """Record the position of every ``\\AIChunkBreak`` outside verbatim and
    drop the marker from the stream."""
    out: list[SourceLine] = []
    positions: list[int] = []
    for line in doc.lines:
        if line.in_verbatim or not _CHUNK_BREAK_RE.search(line.text):
            out.append(line)
            continue
        positions.append(line.pos)
        remainder = _CHUNK_BREAK_RE.sub("", line.text)
        if remainder.strip():
            out.append(SourceLine(line.file, line.line_no, remainder, line.in_verbatim, line.pos))
    return SourceDocument(out, doc.main_file, doc.included_files), positions
