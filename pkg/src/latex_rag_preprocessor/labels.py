"""Parse compiled ``.aux`` files into a label table.

Each ``\\newlabel`` contributes the resolved number, page, title and anchor
of one label; cleveref's ``@cref`` companion entries contribute the counter
type used to render ``\\cref``/``\\Cref`` as natural language.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from .braces import read_group, skip_whitespace
from .report import WarningLog
from .source import SourceDocument

_AUX_INPUT_RE = re.compile(r"\\@input\s*\{([^}]*)\}")
_CREFNAME_RE = re.compile(r"\\crefname\s*\{([^}]*)\}\s*\{([^}]*)\}\s*\{([^}]*)\}")
_BRACKET_PREFIX_RE = re.compile(r"((?:\[[^\]]*\])*)(.*)$", re.S)

# Singular/plural nouns for the standard LaTeX and amsthm counters.
DEFAULT_NOUNS: dict[str, tuple[str, str]] = {
    "part": ("part", "parts"),
    "chapter": ("chapter", "chapters"),
    "section": ("section", "sections"),
    "subsection": ("subsection", "subsections"),
    "subsubsection": ("subsubsection", "subsubsections"),
    "paragraph": ("paragraph", "paragraphs"),
    "figure": ("figure", "figures"),
    "table": ("table", "tables"),
    "equation": ("equation", "equations"),
    "page": ("page", "pages"),
    "item": ("item", "items"),
    "footnote": ("footnote", "footnotes"),
    "theorem": ("theorem", "theorems"),
    "lemma": ("lemma", "lemmas"),
    "corollary": ("corollary", "corollaries"),
    "proposition": ("proposition", "propositions"),
    "definition": ("definition", "definitions"),
    "example": ("example", "examples"),
    "exercise": ("exercise", "exercises"),
    "remark": ("remark", "remarks"),
    "proof": ("proof", "proofs"),
    "algorithm": ("algorithm", "algorithms"),
    "listing": ("listing", "listings"),
    "claim": ("claim", "claims"),
    "conjecture": ("conjecture", "conjectures"),
}


@dataclass
class LabelEntry:
    ref: str
    page: str = ""
    title: str = ""
    anchor: str = ""


@dataclass
class CrefInfo:
    counter: str
    ref: str = ""
    page: str = ""


@dataclass
class LabelTable:
    entries: dict[str, LabelEntry] = field(default_factory=dict)
    cref: dict[str, CrefInfo] = field(default_factory=dict)

    def resolve(self, label: str) -> LabelEntry | None:
        return self.entries.get(label)

    def counter_of(self, label: str) -> str | None:
        """Counter type for a label: the @cref entry when present, else the
        prefix of the hyperref anchor (``section.4.3`` -> ``section``)."""
        info = self.cref.get(label)
        if info is not None:
            return info.counter
        entry = self.entries.get(label)
        if entry is not None and entry.anchor:
            head = entry.anchor.split(".", 1)[0]
            if head:
                return head.rstrip("*")
        return None

    def __len__(self) -> int:
        return len(self.entries)


def _read_label_groups(line: str) -> tuple[str, list[str]] | None:
    """Split ``\\newlabel{key}{{..}{..}...}`` into the key and inner groups."""
    stripped = line.lstrip()
    if not stripped.startswith("\\newlabel"):
        return None
    pos = len("\\newlabel")
    got = read_group(stripped, skip_whitespace(stripped, pos))
    if got is None:
        return None
    key, pos = got
    got = read_group(stripped, skip_whitespace(stripped, pos))
    if got is None:
        return None
    body, _ = got
    fields: list[str] = []
    i = 0
    while i < len(body):
        if body[i] == "{":
            grp = read_group(body, i)
            if grp is None:
                return None
            content, i = grp
            fields.append(content)
        else:
            i += 1
    return key, fields


def parse_newlabel(line: str, warnings: WarningLog | None = None) -> tuple[str, LabelEntry] | None:
    """Parse one plain ``\\newlabel`` line; returns None for anything else."""
    if "\\newlabel" not in line:
        return None
    parsed = _read_label_groups(line)
    if parsed is None:
        if line.lstrip().startswith("\\newlabel") and warnings is not None:
            warnings.warn(f"malformed \\newlabel entry skipped: {line.strip()[:60]}")
        return None
    key, fields = parsed
    if key.endswith("@cref"):
        return None
    if not fields or not fields[0]:
        if warnings is not None:
            warnings.warn(f"\\newlabel without a reference number skipped: {key}")
        return None
    entry = LabelEntry(
        ref=fields[0],
        page=fields[1] if len(fields) > 1 else "",
        title=fields[2] if len(fields) > 2 else "",
        anchor=fields[3] if len(fields) > 3 else "",
    )
    return key, entry


def parse_cref_entry(line: str, warnings: WarningLog | None = None) -> tuple[str, CrefInfo] | None:
    """Parse a cleveref ``\\newlabel{...@cref}`` companion line."""
    if "@cref" not in line or "\\newlabel" not in line:
        return None
    parsed = _read_label_groups(line)
    if parsed is None:
        if warnings is not None:
            warnings.warn(f"malformed @cref entry skipped: {line.strip()[:60]}")
        return None
    key, fields = parsed
    if not key.endswith("@cref") or not fields:
        return None
    base = key[: -len("@cref")]
    m = _BRACKET_PREFIX_RE.match(fields[0])
    brackets = re.findall(r"\[([^\]]*)\]", m.group(1))
    if not brackets or not brackets[0]:
        if warnings is not None:
            warnings.warn(f"@cref entry without a counter skipped: {base}")
        return None
    info = CrefInfo(counter=brackets[0], ref=m.group(2))
    if len(fields) > 1:
        info.page = _BRACKET_PREFIX_RE.match(fields[1]).group(2)
    return base, info


def load_aux(aux_path: str | Path, warnings: WarningLog | None = None) -> LabelTable:
    """Load an ``.aux`` file and, recursively, every ``\\@input`` child.

    A missing file yields an empty table plus a warning; on duplicate labels
    the entry read last wins, matching LaTeX's own behaviour.
    """
    warnings = warnings if warnings is not None else WarningLog()
    table = LabelTable()
    path = Path(aux_path)
    if not path.is_file():
        warnings.warn(f"aux file not found: {path}")
        return table
    _load_aux_file(path, table, warnings, visited=set())
    return table


def _load_aux_file(path: Path, table: LabelTable, warnings: WarningLog, visited: set) -> None:
    resolved = path.resolve()
    if resolved in visited:
        return
    visited.add(resolved)
    for line in path.read_text(encoding="utf-8").splitlines():
        child = _AUX_INPUT_RE.search(line)
        if child:
            child_path = path.parent / child.group(1)
            if child_path.is_file():
                _load_aux_file(child_path, table, warnings, visited)
            else:
                warnings.warn(f"aux file not found: {child_path.name}")
            continue
        cref = parse_cref_entry(line, warnings)
        if cref is not None:
            table.cref[cref[0]] = cref[1]
            continue
        plain = parse_newlabel(line, warnings)
        if plain is not None:
            table.entries[plain[0]] = plain[1]


def default_noun_table() -> dict[str, tuple[str, str]]:
    return dict(DEFAULT_NOUNS)


def cref_noun(counter: str, capitalized: bool, plural: bool, nouns: dict[str, tuple[str, str]]) -> str:
    """Human noun for a counter type; unknown counters fall back to the
    (de)capitalized counter name itself."""
    pair = nouns.get(counter)
    if pair is not None:
        noun = pair[1] if plural else pair[0]
    else:
        noun = counter + "s" if plural else counter
    if capitalized:
        return noun[:1].upper() + noun[1:]
    return noun[:1].lower() + noun[1:]


def scan_crefnames(doc: SourceDocument) -> dict[str, tuple[str, str]]:
    """Collect ``\\crefname{counter}{singular}{plural}`` overrides from the
    preamble (everything before ``\\begin{document}``)."""
    overrides: dict[str, tuple[str, str]] = {}
    for line in doc.lines:
        if line.in_verbatim:
            continue
        if "\\begin{document}" in line.text:
            break
        for m in _CREFNAME_RE.finditer(line.text):
            overrides[m.group(1)] = (m.group(2), m.group(3))
    return overrides
