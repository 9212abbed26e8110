"""Exception taxonomy shared by all modules.

The CLI maps these onto exit codes: SchemaError -> 2, PhysicsError -> 3,
plain I/O errors -> 4.
"""


class DecolabError(Exception):
    """Base class for all package errors."""


class PhysicsError(DecolabError):
    """A physical precondition or tolerance was violated."""


class DimensionError(PhysicsError):
    """Operator shapes or subsystem dimensions are inconsistent."""


class QuadratureError(PhysicsError):
    """Numerical integration failed to reach the requested accuracy."""

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class SchemaError(DecolabError):
    """A scenario configuration failed validation."""
