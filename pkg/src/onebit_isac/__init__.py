"""One-bit quantized MIMO ISAC toolkit: estimation-accuracy bounds,
one-bit estimators, SEP-constrained ADMM waveform optimizers, and a
reproducible benchmark CLI."""

from .array_geometry import (
    EtTarget,
    PtTarget,
    UlaSteering,
    et_prior_covariance,
    et_sample,
    exponential_correlation,
    pt_response_derivative_operator,
    pt_response_operator,
    steering,
    steering_derivative,
)
from .quantization import (
    BussgangPair,
    EchoCovariance,
    bussgang_gain,
    bussgang_pair,
    covariance_czz_approx,
    covariance_czz_exact,
    crr_et,
    crr_pt,
    quantize_one_bit,
)
from .crb_metrics import (
    CrbReport,
    PtModel,
    crb_et,
    crb_et_forms_equal,
    crb_et_information_form,
    crb_pt,
    crb_pt_infinite_resolution,
    mse_et_quantization_unaware,
)
from .estimators import MleConfig, MleGrid, TrialResult, TrialsSummary, blmmse_et, mle_pt, run_trials
from .comm_sep import (
    QamSymbols,
    SepSpec,
    build_sep_spec,
    empirical_ser,
    q_function,
    q_inverse,
    sep_constraints_satisfied,
)
from .sep_projection import UserQpInstance, boundary_points, solve_block, solve_user_qp
from .opt_pt import SearchConfig, SurrogateAnchor, build_anchor, pgd_step, solve_x_pt, surrogate_gradient, surrogate_value
from .opt_et import (
    CommutationOp,
    EtProblem,
    EtSurrogate,
    build_et_surrogate,
    build_lt,
    build_mbar,
    commutation_apply,
    mm_update_et,
    solve_x_et,
    solve_x_et_qu,
)
from .admm import AdmmConfig, AdmmResult, AdmmTrace, admm_run, initialize
from .scenario import Scenario, et_scenario, pt_scenario

__version__ = "0.1.0"
