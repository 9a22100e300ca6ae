"""Simulation and analysis of the cross-resonance interaction between two coupled transmons."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError,
    CrosskitError,
    CurveRejected,
    DegenerateTheory,
    LabelAmbiguity,
    MethodMismatchWarning,
    MissingKey,
    NoOscillation,
    NonConvergence,
    NoPlateau,
    NumericalError,
    ParseError,
    RegimeNotFound,
    ResonancePole,
    SchemaError,
    StepTooLarge,
)
from .hilbert import Operator, SpaceDescriptor, annihilation, identity, make_space, number  # noqa: E402
from .model import (  # noqa: E402
    REFERENCE_DEVICE,
    DeviceParams,
    DrivePulse,
    build_drive_operator,
    build_system_hamiltonian,
    lab_frame_hamiltonian,
    rotating_frame_hamiltonian,
    two_level_lab_hamiltonian,
)
from .perturbation import (  # noqa: E402
    PT_LABELS,
    cr_coefficients,
    dressed_drive_matrix_pt,
    dressed_energies_pt2,
    exact_dressed,
    mu_closed_form,
    validity_check,
    anticrossing_spectrum,
)
from .dynamics import (  # noqa: E402
    PulseSchedule,
    RabiTrace,
    build_cr_schedule,
    decoherence_envelope,
    propagate,
    simulate_cr_rabi,
)
from .fitting import (  # noqa: E402
    JeffCurve,
    JeffPoint,
    SinusoidFit,
    compute_jeff,
    fit_damped_sinusoid,
    fit_linear_regime,
    fit_saturation,
)
from .pipeline import (  # noqa: E402
    SweepSettings,
    amplitude_sweep,
    calibrate_scale_factor,
    detuning_sweep,
)
from .config import RunConfig, echo_config, parse_config  # noqa: E402
