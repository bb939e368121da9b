"""carleman-lab: a numerical laboratory for weighted-energy (Carleman)
identities for the wave operator, time-frequency multiplier calculus, and
the constant-composition ledger behind quantitative unique continuation."""

from .errors import (
    CarlemanLabError,
    CflViolation,
    DegenerateBand,
    DegenerateObservation,
    EmptyRegion,
    GridTooSmall,
    InsufficientSweep,
    LevelMismatch,
    NonFiniteDetected,
    NumericalOverflow,
    PreconditionViolated,
    SupportTooWide,
    SupportViolation,
)
from .geometry import (
    CutoffSpec,
    GeometryConfig,
    Region,
    SmoothCutoff,
    bump_profile,
    foliation_phi,
    grad_phi,
    region_mask,
    region_measure,
    smooth_cutoff,
    sphere_area,
    volume_weight,
)
from .grid_ops import (
    GridSpec,
    ScalarField,
    VectorField,
    apply_box,
    divergence,
    gradient,
    integrate,
    norm,
)
from .multipliers import (
    MultiplierSpec,
    ProbeReport,
    apply,
    bound_probe,
    conjugation_residual,
)
from .carleman import (
    BumpSpec,
    CarlemanParams,
    IdentityBreakdown,
    WitnessReport,
    admissible_bumps,
    carleman_estimate_check,
    coercivity_check,
    conjugated_wave_apply,
    identity_residual,
    intertwining_residual,
    q_minus_on_grad_ell,
    q_plus,
    subelliptic_check,
)

__version__ = "0.1.0"
