"""Preprocess LaTeX source into retrieval-ready Markdown and JSONL chunks."""

from .annotations import (
    MacroAnnotation,
    MacroRegistry,
    VisibilityRule,
    load_yaml_annotations,
    merge_registry,
    remove_declarations,
    scan_declarations,
)
from .chunking import (
    Chunk,
    ChunkOptions,
    chunk_document,
    enrich_embedding_text,
    estimate_tokens,
    make_figure_chunk,
    make_glossary_chunk,
)
from .convert import ConvertedDocument, HeadingEvent, MarkdownConverter, resolve_references
from .emit import OutputSet, assemble_markdown, chunk_to_dict, write_outputs
from .labels import (
    CrefInfo,
    LabelEntry,
    LabelTable,
    cref_noun,
    default_noun_table,
    load_aux,
    parse_cref_entry,
    parse_newlabel,
    scan_crefnames,
)
from .report import PreprocessError, WarningLog
from .source import SourceDocument, SourceLine, load_document, strip_comment
from .structure import (
    FigureBlock,
    StructuralBlock,
    extract_figures,
    extract_structural,
    find_chunk_breaks,
)

__version__ = "0.1.0"
