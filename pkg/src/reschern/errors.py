"""Exception types raised across the package."""


class StructureError(ValueError):
    """Operands live in incompatible algebras (dimension or rank mismatch)."""


class SingularityError(ArithmeticError):
    """A matrix that must be inverted is singular.

    ``point`` carries whatever locates the failure (a base/fiber point, a
    spectral parameter, ...), or ``None``.
    """

    def __init__(self, msg, point=None):
        super().__init__(msg)
        self.point = point


class DomainError(ValueError):
    """A parameter lies outside the region where the requested evaluation is defined."""


class PoleError(ArithmeticError):
    """Evaluation requested exactly at a pole."""

    def __init__(self, msg, z0=None):
        super().__init__(msg)
        self.z0 = z0


class ConfigError(ValueError):
    """A scenario description could not be parsed."""


class InvariantError(ValueError):
    """A scenario violates one of its structural invariants.

    ``check`` names the violated invariant, ``point`` the offending grid point.
    """

    def __init__(self, msg, check, point=None):
        super().__init__(msg)
        self.check = check
        self.point = point


class StageError(RuntimeError):
    """A verification stage failed; ``stage`` names it and ``__cause__`` holds the error."""

    def __init__(self, stage, exc):
        super().__init__(f"[{stage}] {type(exc).__name__}: {exc}")
        self.stage = stage
