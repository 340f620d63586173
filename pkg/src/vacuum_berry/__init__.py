"""Berry phases of a two-level system coupled to quantized field modes."""

from .adiabatic import (
    EvolutionResult,
    Schedule,
    SemiclassicalReport,
    adiabatic_convergence_study,
    propagate,
    semiclassical_limit_experiment,
)
from .errors import (
    BandCrossingError,
    ConvergenceError,
    CutoffError,
    DegeneracyError,
    DegeneracyWarning,
    DegenerateLoopWarning,
    LeakageError,
    OverlapError,
    PreconditionError,
    StepSizeError,
    VacuumBerryError,
    VanishingVisibilityError,
)
from .fock import Operator, SpaceSpec, StateVector
from .hamiltonians import (
    SingleModeParams,
    TwoModeParams,
    TwoModeSector,
    jc_single_mode,
    phase_shifted_jc,
    semiclassical_h,
    two_mode_initial,
    two_mode_transformed,
)
from .holonomy import (
    PhaseResult,
    analytic_phase_semiclassical,
    analytic_phase_single_mode,
    analytic_phase_two_mode,
    classical_polarization_phase,
    fock_rotation_phase,
    history_hamiltonian_eigenphase,
    mixed_state_phase,
    pancharatnam_phase,
    phase_via_number_expectation,
    semiclassical_loop_phase,
    single_mode_loop_phase,
    solid_angle,
    two_mode_loop_phase,
)
from .loops import ParameterLoop, cap_boundary, latitude_loop, phi_circle
from .spectral import DressedLabel, TrackedBand, dressed_state, eig_hermitian, track_band

__version__ = "0.1.0"
