"""Serialize chunks, the label table, and the Markdown rendering.

Output is byte-deterministic: fixed key order, UTF-8, ``\\n`` line endings.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .chunking import Chunk
from .labels import LabelTable
from .report import PreprocessError

CHUNK_FIELDS = (
    "id",
    "kind",
    "heading_path",
    "source_file",
    "start_line",
    "end_line",
    "labels",
    "markdown",
    "embedding_text",
    "metadata",
)


@dataclass
class OutputSet:
    chunks_path: Path
    labels_path: Path
    markdown_path: Path


def chunk_to_dict(chunk: Chunk) -> dict:
    return {
        "id": chunk.id,
        "kind": chunk.kind,
        "heading_path": chunk.heading_path,
        "source_file": chunk.source_file,
        "start_line": chunk.start_line,
        "end_line": chunk.end_line,
        "labels": chunk.labels,
        "markdown": chunk.markdown,
        "embedding_text": chunk.embedding_text,
        "metadata": chunk.metadata,
    }


def assemble_markdown(chunks: list[Chunk]) -> str:
    """The full document rendering: every chunk's Markdown in order."""
    parts = [c.markdown for c in chunks if c.markdown.strip()]
    return "\n\n".join(parts) + "\n"


def write_outputs(
    chunks: list[Chunk],
    label_table: LabelTable,
    markdown: str,
    out_dir: str | Path,
    stem: str,
) -> OutputSet:
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise PreprocessError(f"cannot create output directory {out}: {exc}") from exc

    outputs = OutputSet(
        chunks_path=out / "chunks.jsonl",
        labels_path=out / "labels.json",
        markdown_path=out / f"{stem}.rag.md",
    )

    try:
        with open(outputs.chunks_path, "w", encoding="utf-8", newline="\n") as f:
            for chunk in chunks:
                f.write(json.dumps(chunk_to_dict(chunk), ensure_ascii=False))
                f.write("\n")

        table = {
            label: {
                "ref": entry.ref,
                "page": entry.page,
                "title": entry.title,
                "anchor": entry.anchor,
            }
            for label, entry in sorted(label_table.entries.items())
        }
        with open(outputs.labels_path, "w", encoding="utf-8", newline="\n") as f:
            json.dump(table, f, ensure_ascii=False, indent=2)
            f.write("\n")

        with open(outputs.markdown_path, "w", encoding="utf-8", newline="\n") as f:
            f.write(markdown)
    except OSError as exc:
        raise PreprocessError(f"cannot write outputs to {out}: {exc}") from exc

    return outputs
