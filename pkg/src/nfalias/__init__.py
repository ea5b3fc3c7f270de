"""Near-field ambiguity functions, aliasing-free regions and safe spacings."""

__version__ = "0.1.0"

from .errors import DomainError, ParameterError, ResourceError, SingularityError  # noqa: E402
from .geometry import (PhysicalConfig, ParametricCurve, ParametricGrid, sample_grid,  # noqa: E402
                       map_point, derivative, max_speed, half_wavelength_check,
                       distance_to_curve)
from .field import (MatchedSignalContext, energy, steering, matched_amplitude,  # noqa: E402
                    matched_phase, matched_signal, local_frequency)
from .ambiguity import af_continuous, af_discrete, af_grid, AfGridResult  # noqa: E402
