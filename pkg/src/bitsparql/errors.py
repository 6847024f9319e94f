"""Exception hierarchy shared by every stage of the engine."""


class BitSparqlError(Exception):
    """Base class for all engine errors."""


class ParseError(BitSparqlError):
    """Malformed N-Triples or query text."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class FormatError(BitSparqlError):
    """An on-disk dictionary/BitMat file is truncated, corrupt or of the wrong version."""


class CorruptionError(BitSparqlError):
    """A compressed row payload violates its encoding invariants."""


class UnsupportedFeatureError(BitSparqlError):
    """Query uses a construct outside the BGP/OPTIONAL join fragment (UNION, FILTER, ...)."""


class UnsupportedPatternError(UnsupportedFeatureError):
    """Triple pattern shape the indexes cannot answer (three variables, repeated variable, ...)."""


class CartesianProductError(UnsupportedFeatureError):
    """Query contains a Cartesian product."""
