"""Polarization squeezing of coherent light in non-degenerate parametric amplification."""

__version__ = "0.1.0"

from .stokes_core import (
    BogoliubovCoefficients,
    CoherentInput,
    InteractionTimeOverflow,
    InvalidInputError,
    StokesMoments,
    bogoliubov,
    expect_stokes,
    make_coherent_input,
    r_parameter,
    variance_stokes,
)
from .criteria import Direction, SqueezingAssessment, assess, db_of_factor, factor_of_db
from .fock_oracle import TruncationPolicy, oracle_moments
from .explorer import boundary_curve, optimize_factor, scenario_section4, sweep
