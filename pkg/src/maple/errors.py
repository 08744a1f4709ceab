"""Errors shared by the scenario and motion file parsers."""

from __future__ import annotations


class ParseError(Exception):
    """A document could not be turned into a usable object.

    ``offset`` is the byte offset for syntax-level failures, ``path`` the
    dotted field path (``states[0].correct_index``) for structural ones.
    """

    def __init__(self, message: str, *, code: str = "MALFORMED",
                 path: str | None = None, offset: int | None = None) -> None:
        self.code = code
        self.path = path
        self.offset = offset
        detail = message
        if path is not None:
            detail = f"{path}: {detail}"
        if offset is not None:
            detail = f"{detail} (byte {offset})"
        super().__init__(detail)
