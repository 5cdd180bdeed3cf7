"""False-discovery-rate control for correlated hypotheses via null bootstrap."""

from fdrboot.testing_core import (
    ContingencyCounts,
    HypothesisLabels,
    PValueVector,
    TestDecision,
    contingency,
    ecdf_at,
    fdp,
    p_value,
    p_values,
    sup_threshold,
)
from fdrboot.factor_model import (
    AlphaEstimates,
    FactorPanel,
    NullSampleSet,
    OlsFit,
    autocorrelation,
    bootstrap_moment_check,
    demean_factors,
    estimate_alphas,
    ols_fit,
    residual_bootstrap,
)
from fdrboot.classical import bh, bky, by, single, storey, storey_adaptive, storey_pi1
from fdrboot.resampling import (
    DdbootConfig,
    SampledParameter,
    ddboot,
    dueling_count,
    estimate_fdr,
    find_cq,
    sample_alpha_v,
    yb,
)

__version__ = "0.1.0"
