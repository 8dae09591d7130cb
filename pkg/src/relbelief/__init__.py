"""Relative belief inference.

Evidence is measured by how observation changes belief: the relative belief
ratio compares posterior to prior content, with values above 1 in favor and
below 1 against.  On top of that single primitive the package provides
estimation with plausible and credible regions, hypothesis assessment with a
strength calibration, a priori bias measurement and sample-size design, and
prior-data conflict checking, for three builtin model bundles (location
normal, beta binomial, and fully tabulated finite models).
"""

from .bias import (
    BiasComponent,
    BiasEReport,
    BiasHReport,
    DesignResult,
    McConfig,
    bias_against_e,
    bias_against_h,
    bias_in_favor_e,
    bias_in_favor_h,
    design_sample_size,
    estimation_bias,
    favor_prob_locnormal,
    hypothesis_bias,
)
from .checking import ConflictReport, ConflictVerdict, conflict_check
from .errors import DesignSearchError, DomainError, RelBeliefError
from .events import (
    Event,
    EvidenceVerdict,
    FiniteProbSpace,
    UnionDecomposition,
    Verdict,
    bayes_factor_event,
    rb_event,
    union_incoherence,
    verdict,
)
from .evidence import (
    CredibleRegion,
    EstimateReport,
    EvidenceProfile,
    HypothesisAssessment,
    assess,
    estimate,
    rb_locnormal_exact,
    rb_profile,
    reparam_profile,
    strength,
    tail_difference_locnormal,
)
from .models import (
    BetaBinomialBundle,
    Discretization,
    FiniteBundle,
    FiniteModelSpec,
    LocationNormalBundle,
    LocationNormalSpec,
    make_beta_binomial,
    make_finite,
    make_location_normal,
)

__version__ = "0.1.0"
