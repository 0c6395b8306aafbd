"""Command-line entry point wiring the whole pipeline together."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .annotations import load_yaml_annotations, merge_registry, remove_declarations, scan_declarations
from .chunking import ChunkOptions, chunk_document
from .convert import MarkdownConverter
from .emit import assemble_markdown, write_outputs
from .labels import default_noun_table, load_aux, scan_crefnames
from .report import PreprocessError, WarningLog
from .source import load_document
from .structure import extract_figures, extract_structural, find_chunk_breaks


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="latex-rag-preprocessor",
        description=(
            "Convert a LaTeX project (plus its compiled .aux files and optional "
            "YAML annotations) into Markdown, a label table, and JSONL chunks "
            "ready for vector-database ingestion."
        ),
    )
    parser.add_argument("tex", help="main .tex file")
    parser.add_argument("--aux", help="compiled .aux file (default: <tex stem>.aux)")
    parser.add_argument(
        "--yaml",
        help="YAML annotation file (default: <tex stem>.rag.yaml; silently skipped if absent)",
    )
    parser.add_argument("--out", default="rag_out", help="output directory (default: rag_out)")
    parser.add_argument(
        "--max-tokens",
        type=int,
        default=900,
        help="approximate token budget per text chunk, estimated as characters/4 (default: 900)",
    )
    parser.add_argument(
        "--min-heading-level",
        type=int,
        default=1,
        help="suppress chunk splits at headings shallower than this level, "
        "while still tracking them in the breadcrumb path (default: 1)",
    )
    return parser


def run(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    warnings = WarningLog()
    try:
        if args.max_tokens < 1:
            raise PreprocessError("--max-tokens must be at least 1")

        tex_path = Path(args.tex)
        aux_path = Path(args.aux) if args.aux else tex_path.with_suffix(".aux")
        yaml_path = Path(args.yaml) if args.yaml else tex_path.with_suffix(".rag.yaml")

        doc = load_document(tex_path, warnings)
        table = load_aux(aux_path, warnings)
        nouns = default_noun_table()
        nouns.update(scan_crefnames(doc))

        in_source = scan_declarations(doc, warnings)
        yaml_annotations, suppressed, rules = load_yaml_annotations(yaml_path)
        registry = merge_registry(in_source, yaml_annotations, suppressed, rules)

        doc = remove_declarations(doc)
        doc, figures = extract_figures(doc, warnings)
        doc, structurals = extract_structural(doc, warnings)
        doc, breaks = find_chunk_breaks(doc)

        converter = MarkdownConverter(table, nouns, registry, warnings)
        converted = converter.convert(doc.lines)

        opts = ChunkOptions(max_tokens=args.max_tokens, min_heading_level=args.min_heading_level)
        chunks = chunk_document(
            converted,
            breaks,
            figures,
            structurals,
            registry,
            table,
            opts,
            converter,
            warnings,
            doc.main_file,
        )

        outputs = write_outputs(chunks, table, assemble_markdown(chunks), args.out, tex_path.stem)
    except PreprocessError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    n_text = sum(1 for c in chunks if c.kind == "text")
    n_figure = sum(1 for c in chunks if c.kind == "figure")
    n_glossary = sum(1 for c in chunks if c.kind == "glossary")
    n_structural = len(chunks) - n_text - n_figure - n_glossary
    print(
        f"{tex_path.name}: {len(chunks)} chunks "
        f"({n_text} text, {n_structural} structural, {n_figure} figure, {n_glossary} glossary), "
        f"{len(warnings)} warnings -> {outputs.chunks_path.parent}"
    )
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
