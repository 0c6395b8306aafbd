"""Semantic macro annotations: in-source declarations, the external YAML
file, and the merged registry used for glossary and embedding enrichment."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .braces import read_groups
from .report import PreprocessError, WarningLog
from .source import SourceDocument, SourceLine

_DECLARE_RE = re.compile(r"\\AIDeclareNotation")


@dataclass
class MacroAnnotation:
    macro_name: str
    name: str
    meaning: str = ""
    aliases: list[str] = field(default_factory=list)
    example_latex: str = ""
    example_text: str = ""
    display: str = ""
    kind: str = ""
    source: str = "in_source"  # in_source | yaml


@dataclass
class VisibilityRule:
    environment: str
    access: str


@dataclass
class MacroRegistry:
    annotations: dict[str, MacroAnnotation] = field(default_factory=dict)
    suppressed: set[str] = field(default_factory=set)
    visibility_rules: list[VisibilityRule] = field(default_factory=list)

    def is_suppressed(self, macro_name: str) -> bool:
        return macro_name in self.suppressed

    def active(self) -> dict[str, MacroAnnotation]:
        """Annotations that take part in glossary and enrichment
        (suppression wins over annotation)."""
        return {n: a for n, a in self.annotations.items() if n not in self.suppressed}

    def visibility_for(self, environment: str) -> str | None:
        for rule in self.visibility_rules:
            if rule.environment == environment:
                return rule.access
        return None


def _squash(text: str) -> str:
    return " ".join(text.split())


def scan_declarations(doc: SourceDocument, warnings: WarningLog | None = None) -> list[MacroAnnotation]:
    """Find every ``\\AIDeclareNotation{\\m}{name}{meaning}`` in the source.

    Declarations may span lines; occurrences inside verbatim environments
    are ignored.
    """
    warnings = warnings if warnings is not None else WarningLog()
    text_lines = [line.text for line in doc.lines]
    flat = "\n".join(text_lines)

    # map character offsets to line indices so matches inside verbatim
    # regions can be skipped
    starts: list[int] = []
    offset = 0
    for t in text_lines:
        starts.append(offset)
        offset += len(t) + 1

    def line_index(pos: int) -> int:
        lo, hi = 0, len(starts) - 1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if starts[mid] <= pos:
                lo = mid
            else:
                hi = mid - 1
        return lo

    found: list[MacroAnnotation] = []
    for m in _DECLARE_RE.finditer(flat):
        src_line = doc.lines[line_index(m.start())]
        if src_line.in_verbatim:
            continue
        got = read_groups(flat, m.end(), 3)
        if got is None:
            warnings.warn("\\AIDeclareNotation with unbalanced braces skipped", src_line.file, src_line.line_no)
            continue
        (macro_arg, name, meaning), _ = got
        macro_name = macro_arg.strip().lstrip("\\").strip()
        if not macro_name or any(c in macro_name for c in "\\{}"):
            warnings.warn(f"\\AIDeclareNotation with invalid macro argument {macro_arg!r} skipped", src_line.file, src_line.line_no)
            continue
        found.append(
            MacroAnnotation(
                macro_name=macro_name,
                name=_squash(name),
                meaning=_squash(meaning),
                source="in_source",
            )
        )
    return found


def remove_declarations(doc: SourceDocument) -> SourceDocument:
    """Drop every ``\\AIDeclareNotation`` declaration (including multi-line
    ones) from the stream so no trace of it reaches the Markdown output."""
    text_lines = [line.text for line in doc.lines]
    flat = "\n".join(text_lines)
    starts: list[int] = []
    offset = 0
    for t in text_lines:
        starts.append(offset)
        offset += len(t) + 1

    def line_index(pos: int) -> int:
        lo, hi = 0, len(starts) - 1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if starts[mid] <= pos:
                lo = mid
            else:
                hi = mid - 1
        return lo

    # per-line list of (start_offset, end_offset) character ranges to cut
    cuts: dict[int, list[tuple[int, int]]] = {}
    for m in _DECLARE_RE.finditer(flat):
        first = line_index(m.start())
        if doc.lines[first].in_verbatim:
            continue
        got = read_groups(flat, m.end(), 3)
        if got is None:
            continue
        _, end = got
        last = line_index(end - 1) if end > m.start() else first
        for idx in range(first, last + 1):
            line_start = starts[idx]
            line_end = line_start + len(text_lines[idx])
            lo = max(m.start(), line_start) - line_start
            hi = min(end, line_end) - line_start
            cuts.setdefault(idx, []).append((lo, hi))

    out: list[SourceLine] = []
    for idx, line in enumerate(doc.lines):
        ranges = cuts.get(idx)
        if not ranges:
            out.append(line)
            continue
        text = line.text
        for lo, hi in sorted(ranges, reverse=True):
            text = text[:lo] + text[hi:]
        if text.strip():
            out.append(SourceLine(line.file, line.line_no, text, line.in_verbatim, line.pos))
    return SourceDocument(out, doc.main_file, doc.included_files)


def load_yaml_annotations(yaml_path: str | Path) -> tuple[list[MacroAnnotation], set[str], list[VisibilityRule]]:
    """Load the annotation file: ``macros``, ``suppress_macros`` and
    ``pedagogy.visibility``. A missing file is silently treated as empty;
    an unparseable or schema-invalid file is fatal."""
    path = Path(yaml_path)
    if not path.is_file():
        return [], set(), []

    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{path}:{mark.line + 1}" if mark is not None else str(path)
        raise PreprocessError(f"invalid YAML in {where}: {exc}") from exc

    if data is None:
        return [], set(), []
    if not isinstance(data, dict):
        raise PreprocessError(f"invalid YAML in {path}: top level must be a mapping")

    annotations: list[MacroAnnotation] = []
    macros = data.get("macros") or {}
    if not isinstance(macros, dict):
        raise PreprocessError(f"invalid YAML in {path}: 'macros' must be a mapping")
    for macro_name, spec in macros.items():
        spec = spec or {}
        if not isinstance(spec, dict) or "name" not in spec:
            raise PreprocessError(f"invalid YAML in {path}: macro '{macro_name}' needs a 'name' field")
        aliases = spec.get("aliases") or []
        if not isinstance(aliases, list):
            raise PreprocessError(f"invalid YAML in {path}: aliases of '{macro_name}' must be a list")
        annotations.append(
            MacroAnnotation(
                macro_name=str(macro_name),
                name=str(spec["name"]).strip(),
                meaning=str(spec.get("meaning", "")).strip(),
                aliases=[str(a) for a in aliases],
                example_latex=str(spec.get("example_latex", "")).strip(),
                example_text=str(spec.get("example_text", "")).strip(),
                display=str(spec.get("display", "")).strip(),
                kind=str(spec.get("kind", "")).strip(),
                source="yaml",
            )
        )

    suppressed = {str(name) for name in (data.get("suppress_macros") or [])}

    rules: list[VisibilityRule] = []
    pedagogy = data.get("pedagogy") or {}
    for rule in pedagogy.get("visibility") or []:
        if not isinstance(rule, dict) or "environment" not in rule or "access" not in rule:
            raise PreprocessError(f"invalid YAML in {path}: visibility rules need 'environment' and 'access'")
        rules.append(VisibilityRule(str(rule["environment"]), str(rule["access"])))

    return annotations, suppressed, rules


def merge_registry(
    in_source: list[MacroAnnotation],
    yaml_annotations: list[MacroAnnotation],
    suppressed: set[str] | None = None,
    rules: list[VisibilityRule] | None = None,
) -> MacroRegistry:
    """Merge the two annotation sources; on a name collision the YAML record
    replaces the in-source one wholesale."""
    merged: dict[str, MacroAnnotation] = {}
    for ann in in_source:
        merged[ann.macro_name] = ann
    for ann in yaml_annotations:
        merged[ann.macro_name] = ann
    return MacroRegistry(
        annotations=merged,
        suppressed=set(suppressed or set()),
        visibility_rules=list(rules or []),
    )
