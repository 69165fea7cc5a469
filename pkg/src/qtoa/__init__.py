"""Causality-preserving quantum time-of-arrival calculations for a free particle."""

__version__ = "0.1.0"

from .physics_model import (  # noqa: E402
    NATURAL_UNITS,
    Branch,
    EigenState,
    GaussianPacket,
    PhysicalConstants,
    classical_toa,
)
from .quadrature import DEFAULT_CONFIG, QuadConfig, QuadResult  # noqa: E402
from .arrival import (  # noqa: E402
    ArrivalResult,
    CausalDivergenceError,
    MomentumDomain,
    Regulator,
    RegulatorKind,
    correction_factor,
    correction_factor_closed_form,
    halfline_decomposition_check,
    tau_quant_gaussian,
    tau_quant_momentum,
    tau_quant_position_quadrature,
)
from .evolution import (  # noqa: E402
    DensitySnapshot,
    EvolutionRegulator,
    GridSpec,
    collapse_trajectory,
    density_snapshot,
    evolve_amplitude,
)
