"""Two-tone mechanical squeezing: steady-state models, spectra, inference and calibration."""

from .model import (
    BathState,
    CouplingRates,
    GoodCavityWarning,
    PumpConfig,
    QuadratureState,
    Spectrum,
    SpectrumModelParams,
    StabilityReport,
    SystemParams,
    ValidityWarning,
    bae_device,
    enhanced_couplings,
    hz,
    reference_device,
    stability_check,
    to_hz,
)
from .analytics import (
    cooled_occupation,
    optimize_ratio,
    output_spectrum,
    quad_variances,
    squeezing_db,
    total_linewidth,
)
from .lyapunov import UnstableSystemError, build_system, steady_covariance, transfer_spectrum

__version__ = "0.1.0"
