"""Exception types raised by the solver."""


class LagrecoverError(Exception):
    """Base class for all solver errors."""


class InvalidInstance(LagrecoverError, ValueError):
    """Malformed instance data (shapes, bounds, unknown kinds)."""


class TooLarge(LagrecoverError):
    """An enumeration exceeded its configured cap."""


class Infeasible(LagrecoverError):
    """No point satisfies the constraints."""


class EmptySubsystem(Infeasible):
    """A lattice subsystem contains no integer point."""


class Unbounded(LagrecoverError):
    """LP objective unbounded below. Cannot happen for compact subsystems."""


class RepairFailed(LagrecoverError):
    """Zero-out repair could not restore coupling feasibility."""


class NoSlater(LagrecoverError):
    """Slater margin is not strictly positive."""


class ContractionWarning(UserWarning):
    """The contracted resource vector looks too tight to be feasible."""
