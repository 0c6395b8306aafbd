import shutil
from pathlib import Path

import pytest

from latex_rag_preprocessor import MarkdownConverter, WarningLog, load_document

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def quiet():
    """Warning log that records without printing."""
    return WarningLog(echo=False)


@pytest.fixture
def load_tex(tmp_path):
    """Write LaTeX text (plus optional sibling files) to disk and load it."""

    def _load(text, name="doc.tex", extra=None, warnings=None):
        (tmp_path / name).write_text(text, encoding="utf-8")
        for fname, content in (extra or {}).items():
            (tmp_path / fname).write_text(content, encoding="utf-8")
        sink = warnings if warnings is not None else WarningLog(echo=False)
        return load_document(tmp_path / name, sink)

    return _load


@pytest.fixture
def convert_snippet(load_tex, quiet):
    """Load a snippet and convert it, returning (converted, converter)."""

    def _convert(text, table=None, registry=None, nouns=None):
        doc = load_tex(text)
        converter = MarkdownConverter(table, nouns, registry, quiet)
        return converter.convert(doc.lines), converter

    return _convert


@pytest.fixture
def sample_dir(tmp_path):
    """Mutable copy of the bundled multi-file sample project."""
    dest = tmp_path / "sample"
    shutil.copytree(FIXTURES / "sample", dest)
    return dest
