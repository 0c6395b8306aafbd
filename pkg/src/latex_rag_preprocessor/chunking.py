"""Split converted content into retrieval chunks.

Boundaries come from headings (respecting ``min_heading_level``), explicit
break markers, structural blocks and figures; text over the token budget is
split greedily at paragraph boundaries. Every chunk gets embedding text:
a location breadcrumb plus a plain rendering, enriched with notation notes
for registered macros that occur in the chunk.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

from .annotations import MacroRegistry
from .convert import (
    ConvertedDocument,
    MarkdownConverter,
    RenderedLine,
    strip_markdown,
)
from .labels import LabelTable
from .report import WarningLog
from .structure import FigureBlock, StructuralBlock


@dataclass
class ChunkOptions:
    max_tokens: int = 900
    min_heading_level: int = 1


@dataclass
class Chunk:
    id: str
    kind: str
    heading_path: list[str]
    source_file: str
    start_line: int
    end_line: int
    labels: list[str]
    markdown: str
    embedding_text: str
    metadata: dict
    # internal bookkeeping, not serialized
    pos: int = -1
    notes: list[str] = field(default_factory=list)


def estimate_tokens(text: str) -> int:
    """Approximate token count: one token per four characters, rounded up."""
    return math.ceil(len(text) / 4)


def _page_value(page: str):
    return int(page) if page.isdigit() else page


def _plain_markdown(markdown: str, drop_leading_heading: bool = False) -> str:
    lines = markdown.splitlines()
    if drop_leading_heading:
        i = 0
        while i < len(lines) and not lines[i].strip():
            i += 1
        if i < len(lines) and lines[i].lstrip().startswith("#"):
            i += 1
            while i < len(lines) and not lines[i].strip():
                i += 1
            lines = lines[i:]
    kept = [l for l in lines if l.strip() not in ("$$",) and not re.fullmatch(r"`{3,}\w*", l.strip())]
    return strip_markdown("\n".join(kept)).strip()


def _location_text(heading_path: list[str], markdown: str, drop_leading_heading: bool = True) -> str:
    plain = _plain_markdown(markdown, drop_leading_heading)
    if heading_path:
        return ("Location: " + " > ".join(heading_path) + "\n\n" + plain).strip()
    return plain


class _Counters:
    def __init__(self):
        self.values = {"chunk": 0, "figure": 0, "glossary": 0}

    def next_id(self, family: str) -> str:
        self.values[family] += 1
        return f"{family}-{self.values[family]:05d}"


def _paragraphs(lines: list[RenderedLine]) -> list[list[RenderedLine]]:
    """Group rendered lines into paragraphs; atomic regions (fences) stay
    whole even across internal blank lines."""
    paras: list[list[RenderedLine]] = []
    cur: list[RenderedLine] = []
    i = 0
    while i < len(lines):
        line = lines[i]
        if line.atomic is not None:
            if cur:
                paras.append(cur)
                cur = []
            group = line.atomic
            block = [line]
            i += 1
            while i < len(lines) and lines[i].atomic == group:
                block.append(lines[i])
                i += 1
            paras.append(block)
            continue
        if not line.text.strip():
            if cur:
                paras.append(cur)
                cur = []
            i += 1
            continue
        cur.append(line)
        i += 1
    if cur:
        paras.append(cur)
    return paras


def _para_text(para: list[RenderedLine]) -> str:
    return "\n".join(l.text for l in para)


def _chunk_span(lines: list[RenderedLine]) -> tuple[str, int, int, int, int]:
    """(source_file, start_line, end_line, min_pos, max_pos) for a group of
    rendered lines; end_line stays within the starting file."""
    first = lines[0]
    end_line = first.line_no
    for line in lines:
        if line.file == first.file:
            end_line = max(end_line, line.line_no)
    min_pos = min(l.pos for l in lines)
    max_pos = max(l.pos for l in lines)
    return first.file, first.line_no, end_line, min_pos, max_pos


def make_glossary_chunk(registry: MacroRegistry, source_file: str = "", counters: _Counters | None = None) -> Chunk | None:
    """One generated chunk listing every registered, non-suppressed macro."""
    active = registry.active()
    if not active:
        return None
    counters = counters if counters is not None else _Counters()

    lines = ["# Notation glossary", ""]
    for name in sorted(active):
        ann = active[name]
        token = ann.display or ("\\" + name)
        lines += [f"## {token}: {ann.name}", ""]
        if ann.aliases:
            lines += ["Aliases: " + ", ".join(ann.aliases) + ".", ""]
        if ann.meaning:
            lines += [ann.meaning, ""]
        if ann.example_text:
            lines += ["Example: " + ann.example_text, ""]
    markdown = "\n".join(lines).strip()

    heading_path = ["Notation glossary"]
    return Chunk(
        id=counters.next_id("glossary"),
        kind="glossary",
        heading_path=heading_path,
        source_file=source_file,
        start_line=0,
        end_line=0,
        labels=[],
        markdown=markdown,
        embedding_text=_location_text(heading_path, markdown),
        metadata={},
        pos=1 << 60,
    )


def make_figure_chunk(
    fig: FigureBlock,
    labels: LabelTable,
    converter: MarkdownConverter | None = None,
    counters: _Counters | None = None,
    warnings: WarningLog | None = None,
    heading_path: list[str] | None = None,
    section: str = "",
) -> Chunk:
    """Turn an extracted figure into its own retrieval chunk."""
    counters = counters if counters is not None else _Counters()
    warnings = warnings if warnings is not None else WarningLog()
    converter = converter if converter is not None else MarkdownConverter(labels, warnings=warnings)
    path = heading_path if heading_path is not None else fig.context_heading_path

    file, start_line, end_line = fig.span
    caption_md = converter.convert_inline(fig.caption, file, start_line) if fig.caption else ""
    caption_plain = strip_markdown(caption_md).strip()

    if fig.image_file:
        markdown = f"![{caption_plain}]({fig.image_file})"
    elif caption_md:
        markdown = f"**Figure:** {caption_md}"
    else:
        markdown = "**Figure**"

    metadata: dict = {"caption": caption_plain}
    if fig.image_file:
        metadata["image_file"] = fig.image_file
    if fig.tikz_source:
        metadata["tikz"] = True
    if section:
        metadata["section"] = section
    entry = labels.resolve(fig.label) if fig.label else None
    if entry is not None and entry.page:
        metadata["page"] = _page_value(entry.page)

    description = " ".join(fig.ai_description.split())
    excerpt_parts = []
    if path:
        excerpt_parts.append(" > ".join(path))
    if fig.following_context:
        following = strip_markdown(converter.convert_inline(fig.following_context, file, end_line))
        excerpt_parts.append(following)
    excerpt = "\n\n".join(excerpt_parts)[:400].strip()

    if caption_plain or description:
        parts = [f"Figure: {caption_plain}".strip()]
        if description:
            parts.append(description)
        if excerpt:
            parts.append(excerpt)
    else:
        warnings.warn("figure without caption or description; embedding falls back to context", file, start_line)
        parts = [excerpt] if excerpt else ["Figure"]
    embedding_text = "\n\n".join(p for p in parts if p)

    return Chunk(
        id=counters.next_id("figure"),
        kind="figure",
        heading_path=list(path),
        source_file=file,
        start_line=start_line,
        end_line=end_line,
        labels=[fig.label] if fig.label else [],
        markdown=markdown,
        embedding_text=embedding_text,
        metadata=metadata,
        pos=fig.pos_start,
    )


def enrich_embedding_text(chunk: Chunk, registry: MacroRegistry) -> Chunk:
    """Append one notation note per registered, non-suppressed macro whose
    command occurs in the chunk's Markdown, then any inline author notes."""
    occurrences: list[tuple[int, str]] = []
    for name in registry.active():
        m = re.search(re.escape("\\" + name) + r"(?![A-Za-z])", chunk.markdown)
        if m:
            occurrences.append((m.start(), name))
    occurrences.sort()

    additions: list[str] = []
    for _, name in occurrences:
        ann = registry.annotations[name]
        note = f'Notation note: \\{name} means "{ann.name}".'
        if ann.meaning:
            note += " " + ann.meaning
            if not note.endswith("."):
                note += "."
        if ann.aliases:
            note += " Also known as: " + ", ".join(ann.aliases) + "."
        additions.append(note)
    additions.extend(chunk.notes)

    if additions:
        chunk.embedding_text = chunk.embedding_text.rstrip() + "\n\n" + "\n\n".join(additions)
    return chunk


def chunk_document(
    converted: ConvertedDocument,
    breaks: list[int],
    figures: list[FigureBlock],
    structurals: list[StructuralBlock],
    registry: MacroRegistry,
    labels: LabelTable,
    opts: ChunkOptions | None = None,
    converter: MarkdownConverter | None = None,
    warnings: WarningLog | None = None,
    main_file: str = "",
) -> list[Chunk]:
    """Assemble the full, document-ordered chunk list (glossary last)."""
    opts = opts if opts is not None else ChunkOptions()
    warnings = warnings if warnings is not None else WarningLog()
    converter = converter if converter is not None else MarkdownConverter(labels, registry=registry, warnings=warnings)
    counters = _Counters()

    # merged sweep: breaks < headings < structurals < figures < lines at a pos
    events: list[tuple[int, int, int, str, object]] = []
    for b in breaks:
        events.append((b, 0, 0, "break", None))
    for ev in converted.headings:
        events.append((ev.pos, 1, 0, "heading", ev))
    for block in structurals:
        events.append((block.pos_start, 2, 0, "structural", block))
    for fig in figures:
        events.append((fig.pos_start, 3, 0, "figure", fig))
    for idx, line in enumerate(converted.lines):
        events.append((line.pos, 4, idx, "line", line))
    events.sort(key=lambda e: (e[0], e[1], e[2]))

    path: list[tuple[int, str, str]] = []  # (level, crumb, number)
    buffer: list[RenderedLine] = []
    buffer_path: list[str] = []  # breadcrumb where the current buffer started
    buffer_section = ""
    chunks: list[Chunk] = []
    text_chunks: list[Chunk] = []

    def crumbs() -> list[str]:
        return [c for (_, c, _) in path]

    def section_number() -> str:
        for _, _, number in reversed(path):
            if number:
                return number
        return ""

    def flush() -> None:
        nonlocal buffer
        if not any(l.text.strip() for l in buffer):
            buffer = []
            return
        for pack in _pack_paragraphs(_paragraphs(buffer), opts, warnings):
            chunk = _make_text_chunk(pack, buffer_path, buffer_section, converted, labels, counters)
            chunks.append(chunk)
            text_chunks.append(chunk)
        buffer = []

    for _, _, _, kind, payload in events:
        if kind == "break":
            flush()
        elif kind == "heading":
            ev = payload
            if ev.level >= opts.min_heading_level:
                flush()
            path[:] = [(lv, c, n) for (lv, c, n) in path if lv < ev.level]
            path.append((ev.level, ev.breadcrumb(), ev.number))
        elif kind == "structural":
            flush()
            chunks.append(
                _make_structural_chunk(payload, crumbs(), labels, registry, converter, counters)
            )
        elif kind == "figure":
            flush()
            fig = payload
            fig.context_heading_path = crumbs()
            chunks.append(
                make_figure_chunk(fig, labels, converter, counters, warnings, crumbs(), section_number())
            )
        else:
            if not buffer:
                buffer_path = crumbs()
                buffer_section = section_number()
            buffer.append(payload)
    flush()

    _assign_notes(converted.notes, text_chunks)

    glossary = make_glossary_chunk(registry, main_file, counters)
    if glossary is not None:
        chunks.append(glossary)

    for chunk in chunks:
        enrich_embedding_text(chunk, registry)
    return chunks


def _pack_paragraphs(paras: list[list[RenderedLine]], opts: ChunkOptions, warnings: WarningLog):
    """Greedy forward packing of paragraphs under the token budget."""
    packs: list[list[list[RenderedLine]]] = []
    cur: list[list[RenderedLine]] = []

    def text_of(group: list[list[RenderedLine]]) -> str:
        return "\n\n".join(_para_text(p) for p in group)

    for para in paras:
        if cur and estimate_tokens(text_of(cur + [para])) > opts.max_tokens:
            packs.append(cur)
            cur = []
        if not cur and estimate_tokens(_para_text(para)) > opts.max_tokens:
            first = para[0]
            warnings.warn(
                f"paragraph of ~{estimate_tokens(_para_text(para))} tokens exceeds the {opts.max_tokens}-token budget",
                first.file,
                first.line_no,
            )
            packs.append([para])
            continue
        cur.append(para)
    if cur:
        packs.append(cur)
    return packs


def _make_text_chunk(
    pack: list[list[RenderedLine]],
    heading_path: list[str],
    section: str,
    converted: ConvertedDocument,
    labels: LabelTable,
    counters: _Counters,
) -> Chunk:
    lines = [l for para in pack for l in para]
    file, start_line, end_line, min_pos, max_pos = _chunk_span(lines)
    markdown = "\n\n".join(_para_text(p) for p in pack)

    chunk_labels: list[str] = []
    for pos, label in converted.labels:
        if min_pos <= pos <= max_pos and label not in chunk_labels:
            chunk_labels.append(label)

    metadata: dict = {}
    if section:
        metadata["section"] = section
    pages = [labels.resolve(l).page for l in chunk_labels if labels.resolve(l) is not None and labels.resolve(l).page]
    if pages:
        metadata["page_start"] = _page_value(pages[0])
        metadata["page_end"] = _page_value(pages[-1])

    return Chunk(
        id=counters.next_id("chunk"),
        kind="text",
        heading_path=list(heading_path),
        source_file=file,
        start_line=start_line,
        end_line=end_line,
        labels=chunk_labels,
        markdown=markdown,
        embedding_text=_location_text(heading_path, markdown),
        metadata=metadata,
        pos=min_pos,
    )


def _make_structural_chunk(
    block: StructuralBlock,
    heading_path: list[str],
    labels: LabelTable,
    registry: MacroRegistry,
    converter: MarkdownConverter,
    counters: _Counters,
) -> Chunk:
    body = converter.convert(block.body_lines)
    body_md = body.markdown.strip("\n")

    number = ""
    if block.label:
        entry = labels.resolve(block.label)
        if entry is not None:
            number = entry.ref
    if not number and block.number:
        number = block.number

    heading = f"### {block.environment.capitalize()} {number}".rstrip()
    markdown = heading + ("\n\n" + body_md if body_md.strip() else "")

    chunk_labels: list[str] = []
    for _, label in body.labels:
        if label not in chunk_labels:
            chunk_labels.append(label)

    metadata: dict = {}
    access = registry.visibility_for(block.environment)
    if access is not None:
        metadata["visibility"] = access
    if block.environment == "exercise" and number:
        metadata["exercise_id"] = number
    pages = [labels.resolve(l).page for l in chunk_labels if labels.resolve(l) is not None and labels.resolve(l).page]
    if pages:
        metadata["page_start"] = _page_value(pages[0])
        metadata["page_end"] = _page_value(pages[-1])

    chunk = Chunk(
        id=counters.next_id("chunk"),
        kind=block.environment,
        heading_path=list(heading_path),
        source_file=block.span[0],
        start_line=block.span[1],
        end_line=block.span[2],
        labels=chunk_labels,
        markdown=markdown,
        embedding_text=_location_text(heading_path, markdown, drop_leading_heading=False),
        metadata=metadata,
        pos=block.pos_start,
    )
    chunk.notes = [text for _, text in body.notes]
    return chunk


def _assign_notes(notes: list[tuple[int, str]], text_chunks: list[Chunk]) -> None:
    """Attach each inline note to the text chunk covering its position."""
    if not text_chunks:
        return
    ordered = sorted(text_chunks, key=lambda c: c.pos)
    for pos, text in notes:
        target = ordered[0]
        for chunk in ordered:
            if chunk.pos <= pos:
                target = chunk
            else:
                break
        target.notes.append(text)
