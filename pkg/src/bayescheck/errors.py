"""Exception hierarchy shared across the package."""


class BayescheckError(Exception):
    """Base class for all package-specific errors."""


class IllegalPart(BayescheckError):
    """A part identifier that is structurally excluded from the space."""


class DimensionMismatch(BayescheckError):
    """A vector's dimension does not match the space's part count."""


class SpaceTooLarge(BayescheckError):
    """Exhaustive enumeration was requested beyond the configured cap."""


class WrongSpace(BayescheckError):
    """An algorithm was invoked on a space kind it does not support."""


class NoFiniteOutput(BayescheckError):
    """Every output of the space has -inf total score."""


class NumericallySingular(BayescheckError):
    """The determinant-based partition computation underflowed."""


class ParseError(BayescheckError):
    """A file could not be parsed at all (malformed JSON or schema)."""


class InvalidDistribution(BayescheckError):
    """A parsed distribution violates mass or validity constraints."""


class InvalidOutput(BayescheckError):
    """An output vector is not a member of its space."""


class SpaceMismatch(BayescheckError):
    """Two objects that must share a space do not."""


class WrongLossKind(WrongSpace):
    """The requested loss kind is not applicable to this operation."""


class UnsupportedOutputs(BayescheckError):
    """The distribution gives zero mass to some outputs, so finite
    log-probability targets do not exist for all of Y."""


class Infeasible(BayescheckError):
    """No distribution satisfies the requested constraint set."""
