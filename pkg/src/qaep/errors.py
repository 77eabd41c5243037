"""Exception types shared across the toolkit.

The CLI maps these onto exit codes: ConfigError -> 2, CapacityError -> 3,
InvariantError -> 4.  Everything else is a plain bug.
"""


class QaepError(Exception):
    """Base class for toolkit errors."""


class ShapeError(QaepError):
    """Operand has the wrong shape, block structure, or fails Hermiticity."""


class VolumeError(QaepError):
    """A local operator does not fit inside the requested volume."""


class CapacityError(QaepError):
    """Requested volume exceeds the configured dense-dimension cap."""


class DomainError(QaepError):
    """Input outside the mathematical domain of an operation."""


class PositivityError(DomainError):
    """Operator expected to be positive semidefinite is not."""


class ConfigError(QaepError):
    """Experiment configuration failed to parse or validate."""


class InvariantError(QaepError):
    """A structural invariant that must hold by construction was violated."""
