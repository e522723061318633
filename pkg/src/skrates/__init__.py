"""Secret-key agreement over wiretap channels with correlated sources.

Closed-form and numerically maximized rate bounds, generic evaluators of
the rate expressions for finite alphabets, and small-blocklength
simulations of the separate and joint coding schemes.
"""

from .becbsc import inner_joint, inner_separate, inner_separate_1layer, outer_bound, sweep
from .info import FinitePMF, cond_mutual_info, entropy, gauss_cap, h2, h2_inv, mutual_info, star
from .models import (
    BecBscModel,
    BinaryStateModel,
    GaussianStateModel,
    SourceRegime,
    classify_source_regime,
    regime_boundaries,
)
from .optim import BoxSpec, maximize_box
from .region import (
    AuxSpecJoint,
    AuxSpecSeparate,
    SystemSpec,
    eval_inner_joint_thm3,
    eval_inner_sep_thm2,
    eval_outer_thm1,
    optimize_generic,
)
from .result import BoundResult
from .state import (
    binary_state_inner,
    binary_state_outer,
    gaussian_inner_closed,
    gaussian_inner_full,
    gaussian_outer,
)

__version__ = "0.1.0"
