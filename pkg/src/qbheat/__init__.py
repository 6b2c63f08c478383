"""qbheat: feature-space heat-equation toolkit.

First-order linear systems over multi-channel feature fields, quarter-block
masked linear prediction, identification of the coefficient matrices from
data, and spectrum/energy diagnostics.  Hot kernels run on a compiled
extension when available, with a bit-identical pure-Python fallback.
"""

from .backend import available_backends, backend_name, set_backend
from .errors import (BadMagicError, CollapseError, ConvergenceError,
                     DegenerateDataError, DegenerateSpectrumError,
                     DimensionOverflowError, DivergenceError, FormatError,
                     LayoutError, NonFiniteError, NumericalError, QBHeatError,
                     OverflowLimitError, ShapeError, SingularMatrixError,
                     StabilityError, TruncatedPayloadError,
                     UnsupportedVersionError, ValidationError)
from .extractor import ExtractorConfig, Image, extract_features, read_image
from .field import (FeatureField, FieldGenSpec, ScalarHeatField,
                    compute_S, cross_derivative_residual, forward_difference,
                    generate_eigen_expansion_field, generate_exact_field,
                    heat_run, heat_step, laplacian_residual, read_field,
                    write_field)
from .fitting import (CollapseFlags, FitConfig, FitReport, detect_collapse,
                      fit_closed_form, fit_iterative, fit_multi_scale,
                      scale_tag_for)
from .linalg import (EigenDecomposition, Matrix, eigen_spectrum, inverse,
                     least_squares, mat_exp, solve, solve_vector)
from .masking import (Direction, QuarterLayout, Rect, make_layout,
                      pair_indices)
from .predictor import (LinearModelSet, PredictionReport, derive_implicit,
                        diagonal_projector, expand_variant, predict_masked,
                        project, projector)
from .rng import SplitMix64
from .settings import DEFAULTS, NumericSettings
from .spectrum import (CorrelationReport, SpectrumReport, alignment, energy,
                       energy_ratio, normalized_spectrum, spatial_correlation)

__version__ = "0.1.0"
