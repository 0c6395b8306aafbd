"""Warning collection and fatal-error signalling for the pipeline."""

from __future__ import annotations

import sys


class PreprocessError(Exception):
    """Fatal pipeline error; the CLI turns this into exit code 1."""


class WarningLog:
    """Collects warnings and mirrors them to a stream (stderr by default).

    Every message is recorded in ``messages`` so tests and the CLI summary
    can count them; ``echo=False`` keeps a log silent.
    """

    def __init__(self, stream=None, echo: bool = True):
        self.stream = stream if stream is not None else sys.stderr
        self.echo = echo
        self.messages: list[str] = []

    def warn(self, message: str, file: str | None = None, line: int | None = None) -> None:
        if file is not None and line is not None:
            text = f"warning: {file}:{line}: {message}"
        elif file is not None:
            text = f"warning: {file}: {message}"
        else:
            text = f"warning: {message}"
        self.messages.append(text)
        if self.echo:
            print(text, file=self.stream)

    def __len__(self) -> int:
        return len(self.messages)
