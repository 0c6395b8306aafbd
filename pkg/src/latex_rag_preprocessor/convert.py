"""Convert the LaTeX line stream to Markdown.

Headings become ``#`` lines, references are resolved through the label
table (including cleveref comma lists and ranges), typographic macros are
normalized, verbatim environments become fenced code blocks, and math is
preserved verbatim. Anything the converter does not understand is left in
place: unknown macros are preserved and warned about once per name, unless
the registry suppresses them.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .annotations import MacroRegistry
from .braces import read_group, read_groups, read_optional, skip_whitespace
from .labels import LabelTable, cref_noun, default_noun_table
from .report import WarningLog
from .source import VERBATIM_ENVS, SourceLine

HEADING_LEVELS = {"part": 1, "chapter": 1, "section": 2, "subsection": 3, "subsubsection": 4, "paragraph": 5}

EQUATION_ENVS = frozenset({
    "equation", "equation*", "align", "align*", "gather", "gather*",
    "multline", "multline*", "alignat", "alignat*", "eqnarray", "eqnarray*",
    "displaymath",
})
TABULAR_ENVS = frozenset({"tabular", "tabular*", "longtable", "array"})
LIST_ENVS = frozenset({"itemize", "enumerate"})
QUOTE_ENVS = frozenset({"quote", "quotation", "verse"})
# wrapper environments whose begin/end lines carry no content; the value is
# the argument pattern consumed after \begin{...}
IGNORED_ENVS = {
    "document": "", "abstract": "", "center": "", "flushleft": "",
    "flushright": "", "titlepage": "", "sloppypar": "",
    "table": "O", "table*": "O", "figure": "O", "figure*": "O",
    "minipage": "OA",
}

_REF_COMMANDS = {"ref": 1, "eqref": 1, "pageref": 1, "cref": 1, "Cref": 1, "crefrange": 2, "Crefrange": 2}

_TYPOGRAPHIC = {
    "texttt": ("`", "`"), "code": ("`", "`"),
    "emph": ("*", "*"), "textit": ("*", "*"), "textsl": ("*", "*"),
    "textbf": ("**", "**"),
    "textsc": ("", ""), "textrm": ("", ""), "textsf": ("", ""),
    "textup": ("", ""), "textmd": ("", ""), "textnormal": ("", ""),
    "underline": ("", ""), "mbox": ("", ""), "fbox": ("", ""),
    "caption": ("*", "*"),
}

_TEXT_SYMBOLS = {
    "LaTeX": "LaTeX", "TeX": "TeX", "ldots": "...", "dots": "...",
    "textbackslash": "\\", "quad": " ", "qquad": "  ",
    "textasciitilde": "~", "textbar": "|", "textless": "<", "textgreater": ">",
    "textendash": "\u2013", "textemdash": "\u2014",
}

_DROP_ZERO = frozenset({
    "maketitle", "tableofcontents", "listoffigures", "listoftables",
    "appendix", "frontmatter", "mainmatter", "backmatter",
    "centering", "noindent", "indent", "par",
    "bigskip", "medskip", "smallskip",
    "newpage", "clearpage", "cleardoublepage", "pagebreak", "nopagebreak",
    "raggedright", "raggedbottom", "makeatletter", "makeatother",
    "relax", "ignorespaces", "makeindex", "printindex",
    "small", "footnotesize", "scriptsize", "tiny", "normalsize",
    "large", "Large", "LARGE", "huge", "Huge",
    "itshape", "bfseries", "ttfamily", "rmfamily", "sffamily",
    "upshape", "mdseries", "em", "bf", "it", "tt", "rm", "sf", "sc", "sl",
})

# argument patterns: A = required {...}, O = optional [...], T = macro name
_DROP_ARGS = {
    "documentclass": "OA", "usepackage": "OA", "RequirePackage": "OA",
    "title": "A", "author": "A", "date": "A", "thanks": "A",
    "vspace": "A", "hspace": "A",
    "pagestyle": "A", "thispagestyle": "A",
    "setcounter": "AA", "addtocounter": "AA",
    "setlength": "AA", "addtolength": "AA", "numberwithin": "AA",
    "crefname": "AAA", "Crefname": "AAA",
    "AIDeclareNotation": "AAA", "AIDescription": "A",
    "newcommand": "TOOA", "renewcommand": "TOOA", "providecommand": "TOOA",
    "DeclareMathOperator": "TA",
    "newenvironment": "AOOAA", "renewenvironment": "AOOAA",
    "newtheorem": "AOAO", "theoremstyle": "A",
}

_ESCAPED_CHARS = {
    "%": "%", "&": "&", "_": "_", "#": "#", "$": "$", "{": "{", "}": "}",
    " ": " ", "\n": " ", ",": " ", ";": " ", ":": " ", "!": "", "-": "",
    "@": "", "/": "", "'": "'", "`": "`", '"': '"', "~": "~", "^": "^",
}

_MARKER_RE = re.compile(
    r"\\begin\s*\{(?P<bname>[A-Za-z*]+)\}"
    r"|\\end\s*\{(?P<ename>[A-Za-z*]+)\}"
    r"|\\(?P<hcmd>part|chapter|section|subsection|subsubsection|paragraph)(?P<hstar>\*?)(?=\s*[\[{])"
    r"|\\(?P<item>item)\b"
)
_LABEL_RE = re.compile(r"\\label\s*\{([^}]*)\}")
_COMMAND_NAME_RE = re.compile(r"[A-Za-z]+\*?")


@dataclass
class RenderedLine:
    text: str
    file: str
    line_no: int
    pos: int
    atomic: int | None = None  # group id for unsplittable regions (fences)


@dataclass
class HeadingEvent:
    command: str
    level: int
    title: str
    number: str = ""
    label: str = ""
    pos: int = -1
    file: str = ""
    line_no: int = 0

    def breadcrumb(self) -> str:
        if self.command in ("chapter", "part") and self.number:
            word = "Chapter" if self.command == "chapter" else "Part"
            return f"{word} {self.number}"
        return self.title


@dataclass
class ConvertedDocument:
    lines: list[RenderedLine] = field(default_factory=list)
    headings: list[HeadingEvent] = field(default_factory=list)
    labels: list[tuple[int, str]] = field(default_factory=list)
    notes: list[tuple[int, str]] = field(default_factory=list)

    @property
    def markdown(self) -> str:
        return "\n".join(line.text for line in self.lines)


def strip_markdown(text: str) -> str:
    """Plain-ish rendering of Markdown for breadcrumbs and embedding text."""
    text = re.sub(r"^#{1,6}\s+", "", text, flags=re.M)
    text = re.sub(r"\*\*([^*]+)\*\*", r"\1", text)
    text = re.sub(r"\*([^*\n][^*]*)\*", r"\1", text)
    text = re.sub(r"`([^`]*)`", r"\1", text)
    return text


def _numeric_key(ref: str):
    parts = re.split(r"(\d+)", ref)
    return tuple((0, int(p)) if p.isdigit() else (1, p) for p in parts if p)


def _join_refs(refs: list[str]) -> str:
    if len(refs) == 1:
        return refs[0]
    return ", ".join(refs[:-1]) + " and " + refs[-1]


def _resolve_ref_command(cmd: str, args: list[str], labels: LabelTable, nouns: dict) -> str | None:
    """Render one reference command; None when any label fails to resolve."""
    if cmd in ("ref", "eqref", "pageref"):
        entry = labels.resolve(args[0].strip())
        if entry is None:
            return None
        if cmd == "ref":
            return entry.ref
        if cmd == "eqref":
            return f"({entry.ref})"
        return entry.page if entry.page else None

    if cmd in ("cref", "Cref"):
        keys = [p.strip() for p in args[0].split(",") if p.strip()]
        if not keys:
            return None
        capitalized = cmd == "Cref"
        resolved: list[tuple[str, str]] = []
        for key in keys:
            counter = labels.counter_of(key)
            info = labels.cref.get(key)
            entry = labels.resolve(key)
            ref = info.ref if info is not None and info.ref else (entry.ref if entry else "")
            if not counter or not ref:
                return None
            resolved.append((counter, ref))
        groups: dict[str, list[str]] = {}
        for counter, ref in resolved:
            groups.setdefault(counter, []).append(ref)
        parts = []
        for counter, refs in groups.items():
            refs = sorted(refs, key=_numeric_key)
            noun = cref_noun(counter, capitalized, len(refs) > 1, nouns)
            parts.append(noun + " " + _join_refs(refs))
        return " and ".join(parts)

    if cmd in ("crefrange", "Crefrange"):
        first, last = args[0].strip(), args[1].strip()
        counter = labels.counter_of(first)
        refs = []
        for key in (first, last):
            info = labels.cref.get(key)
            entry = labels.resolve(key)
            ref = info.ref if info is not None and info.ref else (entry.ref if entry else "")
            if not ref:
                return None
            refs.append(ref)
        if not counter:
            return None
        noun = cref_noun(counter, cmd == "Crefrange", True, nouns)
        return f"{noun} {refs[0]}\u2013{refs[1]}"

    return None


def resolve_references(
    text: str,
    labels: LabelTable,
    nouns: dict | None = None,
) -> tuple[str, list[str]]:
    """Resolve every ``\\ref``/``\\eqref``/``\\pageref``/``\\cref``/``\\Cref``/
    ``\\crefrange`` in ``text``. Commands whose labels do not all resolve are
    preserved verbatim and reported in the returned warning list."""
    nouns = nouns if nouns is not None else default_noun_table()
    messages: list[str] = []
    warned: set[str] = set()
    out: list[str] = []
    i = 0
    pattern = re.compile(r"\\(ref|eqref|pageref|cref|Cref|crefrange|Crefrange)\*?\s*(?=\{)")
    while True:
        m = pattern.search(text, i)
        if m is None:
            out.append(text[i:])
            break
        out.append(text[i : m.start()])
        cmd = m.group(1)
        got = read_groups(text, m.end(), _REF_COMMANDS[cmd])
        if got is None:
            out.append(text[m.start() : m.end()])
            i = m.end()
            continue
        args, end = got
        resolved = _resolve_ref_command(cmd, args, labels, nouns)
        original = text[m.start() : end]
        if resolved is None:
            if original not in warned:
                warned.add(original)
                messages.append(f"unresolved reference {original}")
            out.append(original)
        else:
            out.append(resolved)
        i = end
    result = re.sub(r"(?<!\\)~", " ", "".join(out))
    return result, messages


class _Cursor:
    def __init__(self, lines: list[SourceLine]):
        self.lines = lines
        self.idx = 0

    def has(self) -> bool:
        return self.idx < len(self.lines)

    def take(self) -> SourceLine:
        line = self.lines[self.idx]
        self.idx += 1
        return line

    def peek(self) -> SourceLine | None:
        return self.lines[self.idx] if self.has() else None


class MarkdownConverter:
    """Stateful converter: warning deduplication (one warning per unknown
    macro name, per environment, per unresolved command) spans every block
    converted through the same instance."""

    def __init__(
        self,
        labels: LabelTable | None = None,
        nouns: dict | None = None,
        registry: MacroRegistry | None = None,
        warnings: WarningLog | None = None,
    ):
        self.labels = labels if labels is not None else LabelTable()
        self.nouns = nouns if nouns is not None else default_noun_table()
        self.registry = registry if registry is not None else MacroRegistry()
        self.warnings = warnings if warnings is not None else WarningLog()
        self._warned_macros: set[str] = set()
        self._warned_envs: set[str] = set()
        self._warned_refs: set[str] = set()
        self._atomic_seq = 0
        self._run = ConvertedDocument()
        self._list_stack: list[dict] = []
        self._quote_depth = 0
        self._pending_item: str | None = None
        self._math_store: list[str] = []

    # ------------------------------------------------------------------
    # public entry points

    def convert(self, lines: list[SourceLine]) -> ConvertedDocument:
        run = ConvertedDocument()
        self._run = run
        self._list_stack = []
        self._quote_depth = 0
        self._pending_item = None
        # preamble lines typeset nothing; convert the document body only
        for idx, line in enumerate(lines):
            if not line.in_verbatim and "\\begin{document}" in line.text:
                lines = lines[idx:]
                break
        cursor = _Cursor(lines)
        while cursor.has():
            line = cursor.take()
            if line.in_verbatim:
                # stray verbatim content without its fence; keep it untouched
                self._emit(line.text, line)
                continue
            if not line.text.strip():
                self._emit("", line)
                continue
            buffer = line.text
            while self._needs_continuation(buffer) and buffer.count("\n") < 80:
                nxt = cursor.peek()
                if nxt is None or nxt.in_verbatim or not nxt.text.strip():
                    break
                buffer += "\n" + cursor.take().text
            self._process_segment(buffer, line, cursor)
        return run

    def convert_inline(self, text: str, file: str = "", line_no: int = 0) -> str:
        """Inline conversion for short fragments (captions, excerpts)."""
        src = SourceLine(file, line_no, text, False, -1)
        return self._transform_inline(text, src).strip()

    # ------------------------------------------------------------------
    # segment machinery

    @staticmethod
    def _needs_continuation(buffer: str) -> bool:
        balance = 0
        dollars = 0
        display = 0
        i = 0
        n = len(buffer)
        while i < n:
            ch = buffer[i]
            if ch == "\\":
                if i + 1 < n:
                    if buffer[i + 1] in "[(":
                        display += 1
                    elif buffer[i + 1] in "])":
                        display -= 1
                i += 2
                continue
            if ch == "{":
                balance += 1
            elif ch == "}":
                balance -= 1
            elif ch == "$":
                dollars += 1
            i += 1
        return balance > 0 or dollars % 2 == 1 or display > 0

    def _next_marker(self, text: str):
        for m in _MARKER_RE.finditer(text):
            if m.group("bname"):
                env = m.group("bname")
                if (
                    env in VERBATIM_ENVS
                    or env in EQUATION_ENVS
                    or env in TABULAR_ENVS
                    or env in LIST_ENVS
                    or env in QUOTE_ENVS
                    or env in IGNORED_ENVS
                ):
                    return "begin", m
            elif m.group("ename"):
                env = m.group("ename")
                if env in LIST_ENVS or env in QUOTE_ENVS or env in IGNORED_ENVS:
                    return "end", m
            elif m.group("hcmd"):
                return "heading", m
            elif m.group("item") and self._list_stack:
                return "item", m
        return None

    def _process_segment(self, text: str, src: SourceLine, cursor: _Cursor) -> None:
        while text:
            found = self._next_marker(text)
            if found is None:
                self._emit_text(text, src)
                return
            kind, m = found
            prefix = text[: m.start()]
            if prefix.strip():
                self._emit_text(prefix, src)

            if kind == "heading":
                text = self._handle_heading(m, text, src, cursor)
            elif kind == "begin":
                text, src = self._handle_begin(m, text, src, cursor)
            elif kind == "end":
                env = m.group("ename")
                if env in LIST_ENVS and self._list_stack:
                    self._list_stack.pop()
                elif env in QUOTE_ENVS and self._quote_depth:
                    self._quote_depth -= 1
                text = text[m.end() :]
            else:  # item
                bullet_pos = m.end()
                opt, bullet_pos = read_optional(text, bullet_pos)
                self._start_item(opt)
                text = text[bullet_pos:]

    def _handle_begin(self, m, text: str, src: SourceLine, cursor: _Cursor):
        env = m.group("bname")
        after = text[m.end() :]

        if env in LIST_ENVS:
            opt, consumed = read_optional(after, 0)
            self._list_stack.append({"kind": env, "count": 0})
            return after[consumed:] if opt is not None else after, src

        if env in QUOTE_ENVS:
            self._quote_depth += 1
            return after, src

        if env in IGNORED_ENVS:
            rest = self._consume_args(after, 0, IGNORED_ENVS[env])
            return after[rest:], src

        if env in VERBATIM_ENVS:
            opt, consumed = read_optional(after, 0)
            after = after[consumed:] if opt is not None else after
            return self._collect_fence(env, after, src, cursor, include_markers=False)

        if env in EQUATION_ENVS:
            return self._collect_math(env, m, text, src, cursor)

        if env in TABULAR_ENVS:
            return self._collect_fence(env, after, src, cursor, include_markers=True, begin_text=text[m.start() : m.end()])

        return after, src  # unreachable; _next_marker filters

    def _collect_fence(self, env, after, src, cursor, include_markers, begin_text=""):
        """Gather an environment's region into a fenced code block."""
        end_re = re.compile(r"\\end\s*\{" + re.escape(env) + r"\}")
        content: list[tuple[str, SourceLine]] = []
        suffix, end_src = "", src

        m_end = end_re.search(after)
        if m_end is not None:
            first = begin_text + after[: m_end.end()] if include_markers else after[: m_end.start()]
            if first.strip():
                content.append((first, src))
            suffix = after[m_end.end() :]
        else:
            first = begin_text + after if include_markers else after
            if first.strip():
                content.append((first, src))
            while cursor.has():
                line = cursor.take()
                if not line.in_verbatim and end_re.search(line.text):
                    m_end = end_re.search(line.text)
                    head = line.text[: m_end.end()] if include_markers else line.text[: m_end.start()]
                    if head.strip():
                        content.append((head, line))
                    suffix = line.text[m_end.end() :]
                    end_src = line
                    break
                content.append((line.text, line))
            else:
                end_src = src

        fence = "```"
        flat = "\n".join(t for t, _ in content)
        while fence in flat:
            fence += "`"

        group = self._new_atomic()
        self._ensure_blank(src)
        self._emit(fence, src, atomic=group)
        for part_text, part_src in content:
            for piece in part_text.split("\n"):
                self._emit(piece, part_src, atomic=group, raw=True)
        self._emit(fence, end_src, atomic=group)
        self._record_labels(flat, src)
        return suffix, end_src

    def _collect_math(self, env, m, text, src, cursor):
        """Wrap an equation-like environment in $$ fences, verbatim."""
        end_re = re.compile(r"\\end\s*\{" + re.escape(env) + r"\}")
        content: list[tuple[str, SourceLine]] = []
        suffix, end_src = "", src

        region = text[m.start() :]
        m_end = end_re.search(region)
        if m_end:
            content.append((region[: m_end.end()], src))
            suffix = region[m_end.end() :]
        else:
            content.append((region, src))
            while cursor.has():
                line = cursor.take()
                if not line.in_verbatim and end_re.search(line.text):
                    m_end = end_re.search(line.text)
                    content.append((line.text[: m_end.end()], line))
                    suffix = line.text[m_end.end() :]
                    end_src = line
                    break
                content.append((line.text, line))
            else:
                end_src = src

        group = self._new_atomic()
        self._ensure_blank(src)
        self._emit("$$", src, atomic=group)
        for part_text, part_src in content:
            for piece in part_text.split("\n"):
                self._emit(piece, part_src, atomic=group, raw=True)
        self._emit("$$", end_src, atomic=group)
        self._record_labels("\n".join(t for t, _ in content), src)
        return suffix, end_src

    def _record_labels(self, text: str, src: SourceLine) -> None:
        for lm in _LABEL_RE.finditer(text):
            self._run.labels.append((src.pos, lm.group(1).strip()))

    def _handle_heading(self, m, text: str, src: SourceLine, cursor: _Cursor) -> str:
        cmd = m.group("hcmd")
        starred = m.group("hstar") == "*"
        pos = m.end()
        _, pos = read_optional(text, pos)
        got = read_group(text, skip_whitespace(text, pos))
        if got is None:
            # malformed heading; fall back to the macro policy
            self._emit_text(text[m.start() :].replace("\\" + cmd, "", 1), src)
            return ""
        title_raw, pos = got
        rest = text[pos:]

        label = ""
        lm = _LABEL_RE.search(rest)
        if lm:
            label = lm.group(1).strip()
            rest = rest[: lm.start()] + rest[lm.end() :]
        else:
            nxt = cursor.peek()
            if nxt is not None and not nxt.in_verbatim:
                nm = re.match(r"\s*\\label\s*\{([^}]*)\}\s*$", nxt.text)
                if nm:
                    label = nm.group(1).strip()
                    cursor.take()

        number = ""
        if label and not starred:
            entry = self.labels.resolve(label)
            if entry is not None:
                number = entry.ref

        title_md = self._transform_inline(title_raw, src).strip()
        title_plain = strip_markdown(title_md).strip()
        level = HEADING_LEVELS[cmd]

        event = HeadingEvent(cmd, level, title_plain, number, label, src.pos, src.file, src.line_no)
        self._run.headings.append(event)
        if label:
            self._run.labels.append((src.pos, label))

        self._ensure_blank(src)
        self._emit("#" * level + " " + title_md, src)
        return rest

    # ------------------------------------------------------------------
    # inline transformation

    def _transform_inline(self, text: str, src: SourceLine) -> str:
        text, self._math_store = self._protect_math(text)
        text = re.sub(r"(?<!\\)~", " ", text)
        text = re.sub(r"\\\\\*?(\[[^\]]*\])?", "\n", text)
        text = re.sub(r"``(?=\w)", '"', text)
        text = re.sub(r"(?<=[\w.,!?])''", '"', text)
        text = self._scan_commands(text, src)
        for idx, span in enumerate(self._math_store):
            text = text.replace(f"\x00{idx}\x00", span)
        self._math_store = []
        return text

    @staticmethod
    def _protect_math(text: str) -> tuple[str, list[str]]:
        out: list[str] = []
        store: list[str] = []
        i = 0
        n = len(text)
        while i < n:
            ch = text[i]
            if ch == "\\" and i + 1 < n:
                nxt = text[i + 1]
                if nxt == "(":
                    close = text.find("\\)", i + 2)
                    if close != -1:
                        store.append(text[i : close + 2])
                        out.append(f"\x00{len(store) - 1}\x00")
                        i = close + 2
                        continue
                elif nxt == "[":
                    close = text.find("\\]", i + 2)
                    if close != -1:
                        store.append(text[i : close + 2])
                        out.append(f"\x00{len(store) - 1}\x00")
                        i = close + 2
                        continue
                out.append(text[i : i + 2])
                i += 2
                continue
            if ch == "$":
                if text.startswith("$$", i):
                    close = text.find("$$", i + 2)
                    if close != -1:
                        store.append(text[i : close + 2])
                        out.append(f"\x00{len(store) - 1}\x00")
                        i = close + 2
                        continue
                else:
                    j = i + 1
                    close = -1
                    while j < n:
                        if text[j] == "\\":
                            j += 2
                            continue
                        if text[j] == "$":
                            close = j
                            break
                        j += 1
                    if close != -1:
                        store.append(text[i : close + 1])
                        out.append(f"\x00{len(store) - 1}\x00")
                        i = close + 1
                        continue
                out.append(ch)
                i += 1
                continue
            out.append(ch)
            i += 1
        return "".join(out), store

    def _scan_commands(self, text: str, src: SourceLine) -> str:
        out: list[str] = []
        i = 0
        n = len(text)
        while i < n:
            ch = text[i]
            if ch == "\\":
                if i + 1 >= n:
                    out.append(ch)
                    break
                nxt = text[i + 1]
                if not nxt.isalpha():
                    out.append(_ESCAPED_CHARS.get(nxt, text[i : i + 2]))
                    i += 2
                    continue
                name = _COMMAND_NAME_RE.match(text, i + 1).group(0)
                i = self._dispatch(name, text, i, i + 1 + len(name), out, src)
                continue
            if ch in "{}":
                i += 1
                continue
            out.append(ch)
            i += 1
        return "".join(out)

    def _dispatch(self, name: str, text: str, start: int, pos: int, out: list[str], src: SourceLine) -> int:
        key = name.rstrip("*")

        if key == "verb":
            if pos < len(text):
                delim = text[pos]
                close = text.find(delim, pos + 1)
                if close != -1:
                    out.append("`" + text[pos + 1 : close] + "`")
                    return close + 1
            out.append("\\" + name)
            return pos

        if key in _REF_COMMANDS:
            got = read_groups(text, pos, _REF_COMMANDS[key])
            if got is None:
                out.append("\\" + name)
                return pos
            args, end = got
            resolved = _resolve_ref_command(key, args, self.labels, self.nouns)
            if resolved is None:
                original = text[start:end]
                if original not in self._warned_refs:
                    self._warned_refs.add(original)
                    self.warnings.warn(f"unresolved reference {original}", src.file, src.line_no)
                out.append(original)
            else:
                out.append(resolved)
            return end

        if key in _TYPOGRAPHIC:
            got = read_group(text, skip_whitespace(text, pos))
            if got is None:
                out.append("\\" + name)
                return pos
            content, end = got
            opener, closer = _TYPOGRAPHIC[key]
            out.append(opener + self._scan_commands(content, src) + closer)
            return end

        if key == "label":
            got = read_group(text, skip_whitespace(text, pos))
            if got is None:
                return pos
            self._run.labels.append((src.pos, got[0].strip()))
            return got[1]

        if key == "AINote":
            got = read_group(text, skip_whitespace(text, pos))
            if got is None:
                return pos
            self._run.notes.append((src.pos, " ".join(got[0].split())))
            return got[1]

        if key == "AIChunkBreak":
            return pos

        if key in _DROP_ARGS:
            return self._consume_args(text, pos, _DROP_ARGS[key])

        if key in _DROP_ZERO:
            return pos

        if key in _TEXT_SYMBOLS:
            out.append(_TEXT_SYMBOLS[key])
            if text.startswith("{}", pos):
                return pos + 2
            return pos

        if key in ("begin", "end"):
            got = read_group(text, skip_whitespace(text, pos))
            if got is None:
                out.append("\\" + name)
                return pos
            env, end = got
            if env not in self._warned_envs and env not in self.registry.suppressed:
                self._warned_envs.add(env)
                self.warnings.warn(f"unknown environment {env}", src.file, src.line_no)
            out.append(text[start:end])
            return end

        if key == "item":
            opt, end = read_optional(text, pos)
            out.append("- " + (opt + ": " if opt else ""))
            return end

        if key in ("input", "include"):
            end = self._consume_args_greedy(text, pos)
            out.append(text[start:end])
            return end

        if key in self.registry.annotations:
            end = self._consume_args_greedy(text, pos)
            out.append(text[start:end])
            return end

        # unknown macro: preserve it (with its immediate arguments) verbatim
        end = self._consume_args_greedy(text, pos)
        if key not in self.registry.suppressed and key not in self._warned_macros:
            self._warned_macros.add(key)
            self.warnings.warn(f"unknown macro \\{key}", src.file, src.line_no)
        out.append(text[start:end])
        return end

    def _consume_args(self, text: str, pos: int, pattern: str) -> int:
        for spec in pattern:
            if spec == "O":
                _, pos = read_optional(text, pos)
            elif spec == "A":
                got = read_group(text, skip_whitespace(text, pos))
                if got is None:
                    return pos
                pos = got[1]
            elif spec == "T":
                p = skip_whitespace(text, pos)
                got = read_group(text, p)
                if got is not None:
                    pos = got[1]
                elif p < len(text) and text[p] == "\\":
                    m = _COMMAND_NAME_RE.match(text, p + 1)
                    pos = p + 1 + (len(m.group(0)) if m else 1)
                elif p < len(text):
                    pos = p + 1
        return pos

    @staticmethod
    def _consume_args_greedy(text: str, pos: int, limit: int = 4) -> int:
        taken = 0
        while taken < limit:
            p = skip_whitespace(text, pos)
            got = read_group(text, p)
            if got is not None:
                pos = got[1]
                taken += 1
                continue
            got = read_group(text, p, "[", "]")
            if got is not None:
                pos = got[1]
                taken += 1
                continue
            break
        return pos

    # ------------------------------------------------------------------
    # output helpers

    def _new_atomic(self) -> int:
        self._atomic_seq += 1
        return self._atomic_seq

    def _ensure_blank(self, src: SourceLine) -> None:
        lines = self._run.lines
        if lines and lines[-1].text.strip():
            lines.append(RenderedLine("", src.file, src.line_no, src.pos))

    def _emit(self, text: str, src: SourceLine, atomic: int | None = None, raw: bool = False) -> None:
        self._run.lines.append(RenderedLine(text if raw else text.rstrip(), src.file, src.line_no, src.pos, atomic))

    def _start_item(self, opt: str | None) -> None:
        if not self._list_stack:
            return
        state = self._list_stack[-1]
        if state["kind"] == "enumerate":
            state["count"] += 1
            marker = f"{state['count']}. "
        else:
            marker = "- "
        if opt:
            marker += opt + ": "
        self._pending_item = marker

    def _emit_text(self, text: str, src: SourceLine) -> None:
        transformed = self._transform_inline(text, src)
        if not transformed.strip():
            return
        for part in transformed.split("\n"):
            part = part.strip()
            if not part:
                self._emit("", src)
                continue
            prefix = "> " * self._quote_depth
            if self._list_stack:
                depth = len(self._list_stack)
                if self._pending_item is not None:
                    prefix += "  " * (depth - 1) + self._pending_item
                    self._pending_item = None
                else:
                    prefix += "  " * depth
            self._emit(prefix + part, src)
