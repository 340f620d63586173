"""Exception and warning types raised by vacuum_berry."""


class VacuumBerryError(Exception):
    """Base class for physics and numerics failures (CLI exit status 3)."""


class PreconditionError(VacuumBerryError, ValueError):
    """An input violates a documented precondition."""


class CutoffError(PreconditionError):
    """Requested state or operation does not fit inside the Fock cutoff."""


class LeakageError(VacuumBerryError):
    """Population pushed above the Fock cutoff exceeds the tolerance."""


class ConvergenceError(VacuumBerryError):
    """An eigensolver or convergence study failed."""


class DegeneracyError(VacuumBerryError):
    """A phase is undefined because the relevant levels are degenerate."""


class BandCrossingError(VacuumBerryError):
    """Eigenstate tracking lost the band (degeneracy or coarse loop)."""


class OverlapError(VacuumBerryError):
    """Consecutive states in a holonomy chain are nearly orthogonal."""


class VanishingVisibilityError(VacuumBerryError):
    """Mixed-state interference visibility vanishes; phase undefined."""


class StepSizeError(VacuumBerryError):
    """Time stepping violated the unitarity drift bound."""


class DegeneracyWarning(RuntimeWarning):
    """Spectral gap along a tracked path is dangerously small."""


class DegenerateLoopWarning(RuntimeWarning):
    """Loop encloses no area; its phase is trivially zero."""
