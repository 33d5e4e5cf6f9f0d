"""Two-slit quantum-eraser simulator with weak-value readouts.

The package splits into analytic engines (``hilbert``, ``weak_values``), a
weak-measurement pointer model (``pointer``), a Monte Carlo event sampler
with erasure policies (``simulate``), an invariant suite (``checks``), and
the CLI front end (``cli``).
"""

from ._version import __version__
from .checks import CheckResult, run_all
from .config import RunConfig
from .errors import (ConfigurationError, DegeneratePostSelectionError,
                     EmptySubEnsembleError, QeraserError, ValidationError)
from .hilbert import (ENVELOPE_FAMILIES, EraserState, Grid, PRESET_SPINORS,
                      SlitAmplitude, Spinor, eval_amplitude, inner_product,
                      psi1_density, psi2_density)
from .pointer import (CouplingConfig, JointState, PointerState,
                      WEAK_SWEEP_COUPLINGS, apply_momentum,
                      conditional_bin_probability, conditional_pointer_mean,
                      pointer_disturbance, translate, weak_value_sweep)
from .simulate import (BasisPolicy, CHUNK_SIZE, ChiSquareResult, EventSet,
                       Histogram, MarginalInvarianceReport,
                       chi_square_subensemble, expected_subensemble_counts,
                       fringe_visibility, histogram_events,
                       marginal_invariance_test, read_events, recombine_check,
                       sample_events, subensemble_histogram, write_events)
from .weak_values import (PostSelectionBasis, WeakValue, conditional_amplitude,
                          joint_subensemble_density,
                          post_selection_probability, slit_overlap,
                          sum_rule_residual, weak_value,
                          weak_value_closed_form, weak_value_exact)

__all__ = [
    "__version__",
    "BasisPolicy", "CHUNK_SIZE", "CheckResult", "ChiSquareResult",
    "ConfigurationError", "CouplingConfig", "DegeneratePostSelectionError",
    "EmptySubEnsembleError", "ENVELOPE_FAMILIES", "EraserState", "EventSet",
    "Grid", "Histogram", "JointState", "MarginalInvarianceReport",
    "PRESET_SPINORS", "PointerState", "PostSelectionBasis", "QeraserError",
    "RunConfig", "SlitAmplitude", "Spinor", "ValidationError",
    "WEAK_SWEEP_COUPLINGS", "WeakValue", "apply_momentum",
    "chi_square_subensemble", "conditional_amplitude",
    "conditional_bin_probability", "conditional_pointer_mean",
    "eval_amplitude", "expected_subensemble_counts", "fringe_visibility",
    "histogram_events", "inner_product", "joint_subensemble_density",
    "marginal_invariance_test", "post_selection_probability", "psi1_density",
    "psi2_density", "read_events", "recombine_check", "run_all",
    "sample_events", "slit_overlap", "subensemble_histogram",
    "sum_rule_residual", "translate", "weak_value", "weak_value_closed_form",
    "weak_value_exact", "weak_value_sweep", "write_events",
]
