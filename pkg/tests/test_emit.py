import json

from latex_rag_preprocessor import (
    LabelEntry,
    LabelTable,
    assemble_markdown,
    chunk_to_dict,
    write_outputs,
)
from latex_rag_preprocessor.chunking import Chunk
from latex_rag_preprocessor.emit import CHUNK_FIELDS


def make_chunk(i, kind="text", markdown="body"):
    return Chunk(
        id=f"chunk-{i:05d}",
        kind=kind,
        heading_path=["Chapter 1"],
        source_file="doc.tex",
        start_line=i,
        end_line=i + 1,
        labels=[],
        markdown=markdown,
        embedding_text="Location: Chapter 1\n\n" + markdown,
        metadata={},
    )


def test_three_chunks_three_jsonl_lines(tmp_path):
    chunks = [make_chunk(i, markdown=f"multi\nline {i}") for i in range(1, 4)]
    outputs = write_outputs(chunks, LabelTable(), "md\n", tmp_path / "out", "doc")
    lines = outputs.chunks_path.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 3
    for line in lines:
        parsed = json.loads(line)  # each line is a standalone JSON object
        assert list(parsed) == list(CHUNK_FIELDS)


def test_empty_label_table_writes_empty_object(tmp_path):
    outputs = write_outputs([], LabelTable(), "", tmp_path / "out", "doc")
    assert json.loads(outputs.labels_path.read_text(encoding="utf-8")) == {}


def test_label_entry_serialization(tmp_path):
    table = LabelTable()
    table.entries["sec:while-loops"] = LabelEntry("4.3", "71", "While-loops", "section.4.3")
    outputs = write_outputs([], table, "", tmp_path / "out", "doc")
    data = json.loads(outputs.labels_path.read_text(encoding="utf-8"))
    assert data == {
        "sec:while-loops": {
            "ref": "4.3",
            "page": "71",
            "title": "While-loops",
            "anchor": "section.4.3",
        }
    }


def test_roundtrip_stability(tmp_path):
    chunks = [make_chunk(1, markdown="a\nb"), make_chunk(2, kind="figure")]
    outputs = write_outputs(chunks, LabelTable(), "m\n", tmp_path / "out", "doc")
    first = outputs.chunks_path.read_bytes()

    reparsed = [json.loads(l) for l in first.decode("utf-8").splitlines()]
    relines = [json.dumps(d, ensure_ascii=False) for d in reparsed]
    assert ("\n".join(relines) + "\n").encode("utf-8") == first


def test_no_raw_newlines_inside_json_strings(tmp_path):
    chunks = [make_chunk(1, markdown="line one\nline two\n\nline four")]
    outputs = write_outputs(chunks, LabelTable(), "", tmp_path / "out", "doc")
    lines = outputs.chunks_path.read_text(encoding="utf-8").split("\n")
    # one object + trailing empty split element
    assert len(lines) == 2
    assert "\\n" in lines[0]


def test_all_three_files_exist(tmp_path):
    outputs = write_outputs([make_chunk(1)], LabelTable(), "# Doc\n", tmp_path / "out", "book")
    assert outputs.chunks_path.exists()
    assert outputs.labels_path.exists()
    assert outputs.markdown_path.exists()
    assert outputs.markdown_path.name == "book.rag.md"


def test_assemble_markdown_orders_and_separates():
    chunks = [make_chunk(1, markdown="# One"), make_chunk(2, markdown="body two")]
    assert assemble_markdown(chunks) == "# One\n\nbody two\n"


def test_chunk_to_dict_key_order():
    assert tuple(chunk_to_dict(make_chunk(1))) == CHUNK_FIELDS
