"""Exception types shared across the package."""


class SplzError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(SplzError):
    """A DIMACS input file could not be parsed.

    Carries the 1-based line number of the offending line when known.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConsistencyError(SplzError):
    """Input data contradicts the graph it claims to describe."""


class AlphabetError(SplzError):
    """A byte outside the 4-bit local-index alphabet reached the codec."""


class CodeRangeError(SplzError):
    """A match length or location delta does not fit any code-table row."""


class CorruptStreamError(SplzError):
    """An encoded token stream is truncated or undecodable."""


class ArchiveFormatError(SplzError):
    """An archive file is malformed (bad magic, version, or layout)."""


class PartitionError(SplzError):
    """The graph cannot be partitioned as requested."""
