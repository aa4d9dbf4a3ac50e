"""koplab: pseudo-spectral laboratory for order-parameter capillary fluids."""

from .errors import (
    BandOutOfRange,
    BlowUp,
    ConvergenceFailure,
    DegenerateFit,
    DomainError,
    EmptyTrajectory,
    KoplabError,
    MissingComponent,
    ParameterOutOfRange,
    QuadratureFailure,
    SingularMultiplier,
    SizeMismatch,
    VacuumError,
)
from .model import DEFAULT_PARAMS, FluidParams, State, coeff_I, coeff_K, make_initial_data, make_params
from .spectral import GridSpec, SpectralField, dft_forward, dft_inverse

__version__ = "0.1.0"

__all__ = [
    "BandOutOfRange",
    "BlowUp",
    "ConvergenceFailure",
    "DEFAULT_PARAMS",
    "DegenerateFit",
    "DomainError",
    "EmptyTrajectory",
    "FluidParams",
    "GridSpec",
    "KoplabError",
    "MissingComponent",
    "ParameterOutOfRange",
    "QuadratureFailure",
    "SingularMultiplier",
    "SizeMismatch",
    "SpectralField",
    "State",
    "VacuumError",
    "coeff_I",
    "coeff_K",
    "dft_forward",
    "dft_inverse",
    "make_initial_data",
    "make_params",
]
