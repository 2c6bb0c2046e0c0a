"""Sample-path causal influence between discrete time series.

Sequential context-tree predictors estimate, at every time step, how much the
side process's realized past shifts the predictive law of the target's next
symbol (in bits); exact jointly-Markov oracles validate every estimator, and
closed-form worst-case regret bounds certify the estimation error.
"""

from .core import (
    AbsoluteContinuityError,
    Alphabet,
    ProbDist,
    SymbolSeq,
    ZeroProbabilityError,
    entropy,
    kl_divergence,
    total_variation,
)
from .ctw import (
    ContextSchema,
    ContextTree,
    RegretBudget,
    kt_predict,
    regret_bound_plain,
    regret_bound_side_info,
)
from .graphs import (
    MarkovicityReport,
    UnrolledDag,
    build_unrolled_network,
    classify_markovicity,
    d_separated,
    nodeset_conditional_mi,
)
from .ingest import (
    PriceSeries,
    QuantizerSpec,
    align_calendars,
    load_price_csv,
    pct_change_quantize,
    shift_for_market_order,
)
from .markov import (
    JointMarkovModel,
    MCRateEstimate,
    NonErgodicError,
    RestrictedFilter,
    StationaryDist,
    causal_measure_path,
    directed_information,
    exact_pdi_rate,
    exact_tdi_rate,
    expected_causal_sum,
    mc_di_rate,
    partial_measure_path,
    random_model,
    simulate,
    stale_history_dist,
    stationary_distribution,
    true_causal_measure,
    true_complete_dist,
    true_partial_causal_measure,
    true_partial_dist,
    true_restricted_brute,
)
from .measure import (
    CausalTrace,
    EstimatorConfig,
    c_vector,
    causality_regret_bound,
    estimate_causal_trace,
    estimate_partial_trace,
    plug_in_di_rate,
    realized_causality_regret,
)
from .scenarios import SCENARIO_NAMES, scenario_model

__version__ = "0.1.0"

__all__ = [
    "AbsoluteContinuityError",
    "Alphabet",
    "CausalTrace",
    "ContextSchema",
    "ContextTree",
    "EstimatorConfig",
    "JointMarkovModel",
    "MCRateEstimate",
    "MarkovicityReport",
    "NonErgodicError",
    "PriceSeries",
    "ProbDist",
    "QuantizerSpec",
    "RegretBudget",
    "RestrictedFilter",
    "SCENARIO_NAMES",
    "StationaryDist",
    "SymbolSeq",
    "UnrolledDag",
    "ZeroProbabilityError",
    "align_calendars",
    "build_unrolled_network",
    "c_vector",
    "causal_measure_path",
    "causality_regret_bound",
    "classify_markovicity",
    "d_separated",
    "directed_information",
    "entropy",
    "estimate_causal_trace",
    "estimate_partial_trace",
    "exact_pdi_rate",
    "exact_tdi_rate",
    "expected_causal_sum",
    "kl_divergence",
    "kt_predict",
    "load_price_csv",
    "mc_di_rate",
    "nodeset_conditional_mi",
    "partial_measure_path",
    "pct_change_quantize",
    "plug_in_di_rate",
    "random_model",
    "realized_causality_regret",
    "regret_bound_plain",
    "regret_bound_side_info",
    "scenario_model",
    "shift_for_market_order",
    "simulate",
    "stale_history_dist",
    "stationary_distribution",
    "total_variation",
    "true_causal_measure",
    "true_complete_dist",
    "true_partial_causal_measure",
    "true_partial_dist",
    "true_restricted_brute",
]
