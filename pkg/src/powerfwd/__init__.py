"""Power forward curves from futures quotes, jump detection and jump-intensity models."""

__version__ = "0.1.0"

from .exceptions import (AmbiguityError, AssemblyError, DomainError, ExplosionError,
                         InconsistentQuotesError, InsufficientDataError, NumericalError,
                         ParseError, PowerFwdError, StructuralError, ValidationError)
from .market_data import (Contract, FuturesQuote, KnotGrid, RollSlot, Tenor, parse_quotes,
                          read_quotes, resolve_rolling, split_overlaps)
from .curve_builder import (ForwardCurve, MaxSmoothnessCurve, SeasonalityEstimator,
                            SeasonalityParams, SplineCurve, build_curve, cascade_residual,
                            curve_from_contracts, drop_redundant, eval_forward, fit_seasonality,
                            reprice_future)
from .jumps import JumpDetector, JumpSet, VerticalSection, detect_jumps, vertical_section
from .estimation import (HawkesMLE, HawkesParams, JumpSample, estimate_branching_gamma,
                         estimate_delta, estimate_mean_reversion, estimate_poisson,
                         estimate_sigma, fit_hawkes, hawkes_loglik)
from .gof import KSResult, branching_cdf, hawkes_compensator, ks_pvalue, ks_statistic
from .dynamics import (CBIParams, HawkesForwardParams, MeasureChange, SimPath, cbi_laplace,
                       change_measure_cbi, change_measure_hawkes, futures_from_forward,
                       simulate_cbi, simulate_forward_factor, simulate_hawkes)

__all__ = [
    "AmbiguityError", "AssemblyError", "DomainError", "ExplosionError",
    "InconsistentQuotesError", "InsufficientDataError", "NumericalError", "ParseError",
    "PowerFwdError", "StructuralError", "ValidationError", "Contract", "FuturesQuote",
    "KnotGrid", "RollSlot", "Tenor", "parse_quotes", "read_quotes", "resolve_rolling",
    "split_overlaps", "ForwardCurve", "MaxSmoothnessCurve", "SeasonalityEstimator",
    "SeasonalityParams", "SplineCurve", "build_curve", "cascade_residual",
    "curve_from_contracts", "drop_redundant", "eval_forward", "fit_seasonality",
    "reprice_future", "JumpDetector", "JumpSet", "VerticalSection", "detect_jumps",
    "vertical_section", "HawkesMLE", "HawkesParams", "JumpSample", "estimate_branching_gamma",
    "estimate_delta", "estimate_mean_reversion", "estimate_poisson", "estimate_sigma",
    "fit_hawkes", "hawkes_loglik", "KSResult", "branching_cdf", "hawkes_compensator",
    "ks_pvalue", "ks_statistic", "CBIParams", "HawkesForwardParams", "MeasureChange", "SimPath",
    "cbi_laplace", "change_measure_cbi", "change_measure_hawkes", "futures_from_forward",
    "simulate_cbi", "simulate_forward_factor", "simulate_hawkes",
]
