"""Nonlocal dispersion cancellation with phase-sensitive Gaussian-state light.

Analytic and Monte Carlo photocurrent cross correlations for jointly
Gaussian signal/reference beams behind a pair of dispersive filters.
"""

__version__ = "0.1.0"

from .errors import (ConfigurationError, DegenerateSourceError, DispCancelError, DomainError,
                     FactorizationError, SemiclassicalError, UnsupportedError, WidthUndefinedError)
from .spectra import (CorrelationTrace, GaussianSource, JointGaussianSource, RectNoiseSource,
                      SampledSpectra, SincSource, SpectralGrid, StateClass, TabulatedSource,
                      bound_margins, classify_state, correlation_to_spectrum,
                      eval_gaussian_source, eval_rect_noise_source, eval_sinc_source,
                      spectrum_to_correlation)
from .filters import (Detector, DispersiveFilter, FilterPair, detector_rgg, filter_response,
                      propagate_spectra)
from .scenario import Scenario
from .analytic import (CrossCorrResult, SweepTable, closed_form_gaussian, closed_form_rect_noise,
                       contrast, contrast_rect, critical_gain, cross_correlation, default_grid,
                       dispersion_sweep, gain_sweep, high_brightness_delta, signature_width)
from .montecarlo import (EventTrain, FieldRealization, MCConfig, MCEstimate, apply_filter, detect,
                         estimate_C, mc_run, photocurrent, synthesize_fields)
from .config import ScenarioConfig, parse_config, serialize
