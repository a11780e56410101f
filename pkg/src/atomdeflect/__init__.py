"""Two-dimensional deflection of Lambda atoms by crossed cavity standing waves.

Closed-form atom-field amplitudes, conditional position and momentum
distributions after quadrature or phase-state measurement of the fields, and
free-flight propagation to the detection plane.
"""

__version__ = "0.1.0"

from .dynamics import (  # noqa: E402
    AmplitudeField,
    AtomSuperposition,
    CouplingField,
    GaussianBeam,
    InteractionParams,
    Regime,
    SpatialGrid,
    amplitudes,
    amplitudes_offresonant,
    amplitudes_raman,
    integrate_schrodinger,
    rabi,
)
from .fockbasis import (  # noqa: E402
    FockTruncation,
    PhaseOutcome,
    QuadratureOutcome,
    TwoModeCoherent,
    coherent_coeff,
    phase_overlap,
    quadrature_overlap,
    truncation_for,
    truncation_for_field,
)
from .measurement import (  # noqa: E402
    DistributionGrid,
    Normalization,
    momentum_distribution,
    orientation,
    orientation_angle,
    position_distribution_phase,
    position_distribution_quadrature,
)
from .propagation import PropagationParams, propagate_far_field  # noqa: E402
