"""Phase-space simulation of an oscillator driven by stroboscopic nonlinear kicks."""

from .analysis import (
    NegativityReport,
    SqueezingReport,
    moment,
    negativity_report,
    nonlinear_variance,
    optimal_lambda,
    squeezing_report,
)
from .errors import (
    GridOverflowError,
    HermiticityError,
    NormDriftError,
    NumericalInvariantError,
    ResolutionError,
    StrobosimError,
    ValidationError,
)
from .grid import GridSpec, coordinate_axis, make_grid
from .protocol import ProtocolConfig, ProtocolTrace, run_protocol, single_period, trotter_convergence
from .states import (
    SqueezedThermalParams,
    WignerState,
    exact_nonlinear_gaussian,
    ideal_cubic_wigner,
    purity,
    squeezed_thermal,
    vacuum,
)
from .transforms import (
    PositionDensityMatrix,
    ThermalKernelParams,
    damp,
    density_to_wigner,
    kick_wigner,
    nonlinear_kick,
    rotate,
    wigner_to_density,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
