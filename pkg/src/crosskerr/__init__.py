"""Cross-Kerr cavity with parametric amplification in the higher-order operator basis."""

__version__ = "0.1.0"

from .errors import (AboveThresholdError, CrossKerrError, DivergenceError, NoSolutionError,
                     NumericalError, StepTooLargeError, ValidationError)
from .params import (NormalizedParams, SystemParams, example_params, load_config, normalize,
                     system_params_from_mapping)
from .operator_algebra import (BlockSystem, ReductionMaps, ReductionReport, build_blocks,
                               classical_pump_V, solve_UV_general, solve_V_closed,
                               verify_reduction)
from .steady_state import (SteadyState, ladder_recovery, nonlinearity_measure, solve_pump,
                           steady_state_at)
from .spectra import (SpectrumGrid, VariationSystem, build_variation, higher_order_spectrum,
                      linearized_spectrum, make_grid, output_spectrum, recover_sbb, reflection_sigma,
                      reflectivity, scattering_S, sdd, symmetrize)
from .time_domain import (TimeTrace, closed_form_six, estimate_psd, integrate_truncated_six,
                          integrate_variations, output_trace)
from .noise_theory import (GaussianNoiseModel, higher_power_psd, mc_higher_power_dc_concentration,
                           noise_quanta_bound, power_noise_field_psd, squared_noise_autocorr)
