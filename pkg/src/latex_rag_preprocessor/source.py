"""Load a LaTeX project into a flat, comment-stripped line stream.

``\\input``/``\\include`` targets are inlined recursively, every line keeps
its (file, line number) provenance, and the interiors of verbatim
environments are passed through untouched.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from .report import PreprocessError, WarningLog

# Environments whose interiors must survive byte-for-byte.
VERBATIM_ENVS = ("verbatim", "Verbatim", "lstlisting", "minted")

_INCLUDE_RE = re.compile(r"\\(?:input|include)\s*\{([^}]*)\}")
_BEGIN_ENV_RE = re.compile(r"\\begin\s*\{([A-Za-z*]+)\}")


@dataclass
class SourceLine:
    file: str
    line_no: int
    text: str
    in_verbatim: bool = False
    pos: int = -1


@dataclass
class SourceDocument:
    lines: list[SourceLine]
    main_file: str
    included_files: set[str] = field(default_factory=set)

    def renumber(self) -> None:
        for i, line in enumerate(self.lines):
            line.pos = i


def strip_comment(raw: str, in_verbatim: bool = False) -> str:
    """Drop everything from the first unescaped ``%`` to end of line.

    ``\\%`` stays literal, lines inside verbatim environments are returned
    unchanged, and the span of an inline ``\\verb|...|`` is never scanned
    for comment characters.
    """
    if in_verbatim:
        return raw
    i = 0
    n = len(raw)
    while i < n:
        ch = raw[i]
        if ch == "\\":
            if raw.startswith("\\verb", i):
                j = i + 5
                if j < n and raw[j] == "*":
                    j += 1
                if j < n and not raw[j].isalpha():
                    delim = raw[j]
                    end = raw.find(delim, j + 1)
                    if end != -1:
                        i = end + 1
                        continue
            i += 2
            continue
        if ch == "%":
            return raw[:i]
        i += 1
    return raw


def _resolve_include(target: str, base_dir: Path) -> Path:
    name = target.strip()
    path = base_dir / name
    if "." not in path.name:
        path = path.with_name(path.name + ".tex")
    return path


def _load_file(
    path: Path,
    rel_name: str,
    base_dir: Path,
    ancestry: tuple[str, ...],
    doc: SourceDocument,
    warnings: WarningLog,
) -> None:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise PreprocessError(f"cannot read {path}: {exc}") from exc

    doc.included_files.add(rel_name)
    verbatim_env: str | None = None

    for line_no, raw in enumerate(text.splitlines(), start=1):
        if verbatim_env is not None:
            if re.search(r"\\end\s*\{" + re.escape(verbatim_env) + r"\}", raw):
                doc.lines.append(SourceLine(rel_name, line_no, raw, in_verbatim=False))
                verbatim_env = None
            else:
                doc.lines.append(SourceLine(rel_name, line_no, raw, in_verbatim=True))
            continue

        stripped = strip_comment(raw)

        begin = _BEGIN_ENV_RE.search(stripped)
        if begin and begin.group(1) in VERBATIM_ENVS:
            doc.lines.append(SourceLine(rel_name, line_no, stripped, in_verbatim=False))
            verbatim_env = begin.group(1)
            continue

        include = _INCLUDE_RE.search(stripped)
        if include is None:
            doc.lines.append(SourceLine(rel_name, line_no, stripped, in_verbatim=False))
            continue

        target_path = _resolve_include(include.group(1), base_dir)
        target_rel = _relative_name(target_path, base_dir)
        prefix = stripped[: include.start()]
        suffix = stripped[include.end() :]

        if target_rel in ancestry:
            warnings.warn(f"inclusion cycle at \\input{{{include.group(1)}}}, skipped", rel_name, line_no)
            continue
        if not target_path.is_file():
            warnings.warn(f"included file not found: {target_path.name}", rel_name, line_no)
            doc.lines.append(SourceLine(rel_name, line_no, stripped, in_verbatim=False))
            continue

        if prefix.strip():
            doc.lines.append(SourceLine(rel_name, line_no, prefix, in_verbatim=False))
        _load_file(target_path, target_rel, base_dir, ancestry + (target_rel,), doc, warnings)
        if suffix.strip():
            doc.lines.append(SourceLine(rel_name, line_no, suffix, in_verbatim=False))


def _relative_name(path: Path, base_dir: Path) -> str:
    try:
        return path.resolve().relative_to(base_dir.resolve()).as_posix()
    except ValueError:
        return path.name


def load_document(main_tex_path: str | Path, warnings: WarningLog | None = None) -> SourceDocument:
    """Read the main file and inline every reachable ``\\input``/``\\include``."""
    warnings = warnings if warnings is not None else WarningLog()
    main_path = Path(main_tex_path)
    if not main_path.is_file():
        raise PreprocessError(f"main file not found: {main_path}")

    base_dir = main_path.parent
    main_rel = main_path.name
    doc = SourceDocument(lines=[], main_file=main_rel)
    _load_file(main_path, main_rel, base_dir, (main_rel,), doc, warnings)
    doc.renumber()
    return doc
