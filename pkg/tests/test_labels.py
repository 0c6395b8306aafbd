from latex_rag_preprocessor import (
    WarningLog,
    cref_noun,
    default_noun_table,
    load_aux,
    parse_cref_entry,
    parse_newlabel,
    scan_crefnames,
)
from latex_rag_preprocessor.labels import DEFAULT_NOUNS

SECTION_LINE = "\\newlabel{sec:while-loops}{{4.3}{71}{While-loops}{section.4.3}{}}"
SECTION_CREF = "\\newlabel{sec:while-loops@cref}{{[section][3][4]4.3}{[1][71][]71}}"


def test_parse_newlabel_full_form():
    label, entry = parse_newlabel(SECTION_LINE)
    assert label == "sec:while-loops"
    assert entry.ref == "4.3"
    assert entry.page == "71"
    assert entry.title == "While-loops"
    assert entry.anchor == "section.4.3"


def test_parse_newlabel_ignores_other_lines():
    assert parse_newlabel("\\relax") is None
    assert parse_newlabel("\\@writefile{toc}{...}") is None
    assert parse_newlabel(SECTION_CREF) is None  # companion entries are separate


def test_parse_newlabel_short_form():
    # as produced by a bare two-group label from a minimal document
    label, entry = parse_newlabel("\\newlabel{eq:x}{{7}{12}}")
    assert label == "eq:x"
    assert (entry.ref, entry.page, entry.title, entry.anchor) == ("7", "12", "", "")


def test_parse_newlabel_nested_braces_in_title():
    label, entry = parse_newlabel("\\newlabel{s}{{1}{2}{A {nested} title}{section.1}{}}")
    assert entry.title == "A {nested} title"


def test_parse_newlabel_malformed_warns(quiet):
    assert parse_newlabel("\\newlabel{x}{{1}{2}", quiet) is None
    assert len(quiet.messages) == 1


def test_parse_cref_entry_section():
    label, info = parse_cref_entry(SECTION_CREF)
    assert label == "sec:while-loops"
    assert info.counter == "section"
    assert info.ref == "4.3"
    assert info.page == "71"


def test_parse_cref_entry_requires_suffix():
    assert parse_cref_entry(SECTION_LINE) is None


def test_parse_cref_entry_figure():
    label, info = parse_cref_entry("\\newlabel{fig:p@cref}{{[figure][2][]2}{[1][5][]5}}")
    assert (label, info.counter, info.ref, info.page) == ("fig:p", "figure", "2", "5")


def test_load_aux_single_entry(tmp_path, quiet):
    aux = tmp_path / "one.aux"
    aux.write_text(SECTION_LINE + "\n", encoding="utf-8")
    table = load_aux(aux, quiet)
    assert len(table) == 1
    assert table.resolve("sec:while-loops").ref == "4.3"
    assert not quiet.messages


def test_load_aux_follows_at_input(tmp_path, quiet):
    (tmp_path / "main.aux").write_text("\\relax\n\\@input{ch1.aux}\n", encoding="utf-8")
    (tmp_path / "ch1.aux").write_text("\\newlabel{ch1:intro}{{1.1}{9}{Intro}{section.1.1}{}}\n", encoding="utf-8")
    table = load_aux(tmp_path / "main.aux", quiet)
    assert table.resolve("ch1:intro").page == "9"


def test_load_aux_missing_file_warns_empty(tmp_path, quiet):
    table = load_aux(tmp_path / "ghost.aux", quiet)
    assert len(table) == 0
    assert any("ghost.aux" in m for m in quiet.messages)


def test_load_aux_later_definition_wins(tmp_path, quiet):
    # LaTeX last-write semantics: the child is read after the parent's
    # earlier lines, so its definition of the same label wins
    (tmp_path / "main.aux").write_text(
        "\\newlabel{dup}{{1}{1}{First}{section.1}{}}\n"
        "\\@input{child.aux}\n",
        encoding="utf-8",
    )
    (tmp_path / "child.aux").write_text("\\newlabel{dup}{{2}{2}{Second}{section.2}{}}\n", encoding="utf-8")
    table = load_aux(tmp_path / "main.aux", quiet)
    assert table.resolve("dup").ref == "2"


def test_load_aux_is_deterministic(tmp_path, quiet):
    aux = tmp_path / "a.aux"
    aux.write_text(SECTION_LINE + "\n" + SECTION_CREF + "\n", encoding="utf-8")
    t1 = load_aux(aux, quiet)
    t2 = load_aux(aux, quiet)
    assert t1.entries == t2.entries
    assert t1.cref == t2.cref


def test_plain_and_cref_refs_agree(tmp_path, quiet):
    aux = tmp_path / "a.aux"
    aux.write_text(SECTION_LINE + "\n" + SECTION_CREF + "\n", encoding="utf-8")
    table = load_aux(aux, quiet)
    for label, info in table.cref.items():
        assert table.resolve(label).ref == info.ref


def test_counter_of_prefers_cref_then_anchor(tmp_path, quiet):
    aux = tmp_path / "a.aux"
    aux.write_text(
        SECTION_LINE + "\n" + SECTION_CREF + "\n"
        "\\newlabel{fig:x}{{2}{5}{Cap}{figure.2}{}}\n",
        encoding="utf-8",
    )
    table = load_aux(aux, quiet)
    assert table.counter_of("sec:while-loops") == "section"
    assert table.counter_of("fig:x") == "figure"  # from the hyperref anchor
    assert table.counter_of("missing") is None


def test_cref_noun_capitalization():
    nouns = default_noun_table()
    assert cref_noun("section", True, False, nouns) == "Section"
    assert cref_noun("section", False, False, nouns) == "section"
    assert cref_noun("figure", False, True, nouns) == "figures"
    assert cref_noun("corollary", True, True, nouns) == "Corollaries"


def test_cref_noun_unknown_counter_falls_back():
    nouns = default_noun_table()
    assert cref_noun("gadget", True, False, nouns) == "Gadget"
    assert cref_noun("gadget", False, False, nouns) == "gadget"
    assert cref_noun("gadget", False, True, nouns) == "gadgets"


def test_noun_table_covers_standard_counters():
    expected = {
        "part", "chapter", "section", "subsection", "subsubsection",
        "paragraph", "figure", "table", "equation", "page", "item",
        "footnote", "theorem", "lemma", "corollary", "proposition",
        "definition", "example", "exercise", "remark", "proof",
        "algorithm", "listing", "claim", "conjecture",
    }
    assert set(DEFAULT_NOUNS) == expected
    assert len(DEFAULT_NOUNS) == 25


def test_noun_lookup_is_total():
    nouns = default_noun_table()
    for counter in ["section", "zorp", "Equation", ""]:
        if counter:
            assert cref_noun(counter, True, False, nouns)


def test_scan_crefnames_overrides(load_tex):
    doc = load_tex(
        "\\crefname{lemma}{lemmetta}{lemmette}\n"
        "\\begin{document}\n"
        "\\crefname{theorem}{ignored}{ignored}\n"
        "\\end{document}\n"
    )
    overrides = scan_crefnames(doc)
    assert overrides == {"lemma": ("lemmetta", "lemmette")}
