"""Exception hierarchy shared by all phasegrid components."""


class PhaseGridError(Exception):
    """Base class for every error raised by this package."""


class InvalidBase(PhaseGridError):
    """A character outside the A/C/G/T alphabet was used as an allele."""


class OutOfBounds(PhaseGridError):
    """Matrix index or window range outside the stored dimensions."""


class ParseError(PhaseGridError):
    """Base class for input-file problems; carries the offending line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class MalformedHeader(ParseError):
    pass


class MalformedRecord(ParseError):
    pass


class DimensionMismatch(PhaseGridError):
    """Sample list and haplotype columns disagree about subject count."""


class DuplicateMeta(PhaseGridError):
    """A meta table with the same name is already attached."""


class MetaKindMismatch(PhaseGridError):
    """Subject meta offered to the variant axis or vice versa."""


class InvalidRange(PhaseGridError):
    """Region filter with start > end."""


class InvalidPattern(PhaseGridError):
    """Identifier filter regex does not compile."""


class InvalidThreshold(PhaseGridError):
    """Frequency threshold outside [0, 1]."""


class UnknownReference(PhaseGridError):
    """Operation needs a reference base the variant does not carry."""


class UnknownMeta(PhaseGridError):
    """Sort or aggregation referenced a meta column that is not attached."""


class InvalidGrouping(PhaseGridError):
    """Aggregation grouping is not a categorical column / valid selection."""


class EmptyRender(PhaseGridError):
    """Render window or overview has zero area."""


class InvalidFormat(PhaseGridError):
    """Unsupported image format token."""


class TileFormatError(PhaseGridError):
    """Tile buffer violates the binary wire layout."""
