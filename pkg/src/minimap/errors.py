"""Exception hierarchy shared across the package.

Every failure the toolchain can signal deliberately derives from MiniMapError
so the CLI can map families onto exit codes without enumerating call sites.
"""

from __future__ import annotations


class MiniMapError(Exception):
    """Base class for all deliberate failures."""


class ParseError(MiniMapError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


class TypeCheckError(MiniMapError):
    """Job source is grammatical but ill-typed."""


class CyclicPathError(MiniMapError):
    """An emit is reachable through a loop back edge; path analysis bails."""


class NotSargableError(MiniMapError):
    """Some disjunct places no usable bound on the requested field."""


class StaleIndexError(MiniMapError):
    """Chosen catalog entry no longer matches the input file's content hash."""


class DecodeError(MiniMapError):
    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class UnsortedInputError(MiniMapError):
    """Bulk loader was given keys out of order."""


class DictionaryFullError(MiniMapError):
    """Distinct-value count exceeded the token space."""


class LockError(MiniMapError):
    """Catalog lock could not be acquired in time."""


class EmptyPoolError(MiniMapError):
    """A generator needs a non-empty URL pool."""


class JobError(MiniMapError):
    """Runtime failure inside an interpreted job body."""

    def __init__(self, message: str, stmt_id: int | None = None):
        if stmt_id is not None:
            message = f"{message} (statement {stmt_id})"
        super().__init__(message)
        self.stmt_id = stmt_id


class PlanMismatchError(MiniMapError):
    """Execution descriptor disagrees with the job's declared schema."""


class RewriteError(MiniMapError):
    """A disqualifying use survived into the token rewrite."""


class ValidationError(MiniMapError):
    """Injected descriptor or index spec failed schema validation."""
