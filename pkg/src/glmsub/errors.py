"""Exception types shared across the package."""


class GlmsubError(Exception):
    """Base class for errors raised by this package."""


class DomainError(GlmsubError, ValueError):
    """An input lies outside the mathematical domain of an operation."""


class SingularityError(GlmsubError, ValueError):
    """A matrix that must be inverted is numerically singular."""


class DegenerateWeightsError(GlmsubError, ValueError):
    """A sampling distribution collapsed to zero total mass."""


class PilotError(GlmsubError, RuntimeError):
    """The pilot stage failed to produce a usable estimate."""


class CsvFormatError(GlmsubError, ValueError):
    """A CSV file could not be turned into a numeric dataset."""
