"""Exception hierarchy shared across the package.

Every error raised by kgedit derives from :class:`KGEditError` so callers can
catch one type at the boundary. The CLI maps subfamilies onto distinct exit
codes (see ``cli.EXIT_CODES``).
"""

from __future__ import annotations


class KGEditError(Exception):
    """Base class for all kgedit errors."""


class ConfigError(KGEditError):
    """Invalid or inconsistent run configuration."""


class ValidationError(KGEditError):
    """Malformed value fed to an operation (empty mention, bad fact, ...)."""


class NotFoundError(KGEditError):
    """Lookup for a fact or entity that is not in the store."""


class AliasCollisionError(KGEditError):
    """One surface form claimed by two different entities."""


class SnapshotFormatError(KGEditError):
    """Corrupt or unsupported graph snapshot stream."""


class ExtractionError(KGEditError):
    """An edit statement could not be turned into triples."""


class LinkingError(KGEditError):
    """Entity linking failed against a mandatory external KB."""


class BackendError(KGEditError):
    """Remote model call failed after retries, or produced a bad payload."""


class UnknownQuestionError(BackendError):
    """Oracle backend has no entry for the question; never fabricates one."""


class ScriptExhaustedError(BackendError):
    """Scripted backend ran out of canned responses."""


class DecompositionFormatError(KGEditError):
    """Model output for question decomposition could not be parsed.

    Carries the raw model text for postmortems.
    """

    def __init__(self, message: str, raw: str = "") -> None:
        super().__init__(message)
        self.raw = raw


class DataError(KGEditError):
    """Dataset schema violation or unusable case record."""


class PipelineError(KGEditError):
    """A multi-hop run aborted part-way; carries the partial hop trace."""

    def __init__(self, message: str, question: str = "", hops: tuple = ()) -> None:
        super().__init__(message)
        self.question = question
        self.hops = tuple(hops)
