"""Parameter estimators for jump sizes, drift, volatility and jump intensities."""

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit
from scipy.optimize import minimize
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import as_1d_float, check_event_times
from .exceptions import DomainError, InsufficientDataError, ValidationError
from .jumps import JumpSet, VerticalSection


@dataclass(frozen=True)
class JumpSample:
    """Jump arrival times on ``[0, horizon]`` and (optionally) their sizes."""

    arrival_times: np.ndarray
    sizes: Optional[np.ndarray] = None
    horizon: Optional[float] = None

    def __post_init__(self):
        t = check_event_times(self.arrival_times, name="arrival_times", min_length=0)
        object.__setattr__(self, "arrival_times", t)
        if self.sizes is not None:
            z = as_1d_float(self.sizes, name="sizes", min_length=0)
            if np.any(z <= 0):
                raise ValidationError("jump sizes must be positive")
            object.__setattr__(self, "sizes", z)
        if self.horizon is not None and t.size and t[-1] > self.horizon:
            raise ValidationError("last arrival time exceeds the horizon")

    @property
    def n(self):
        return int(self.arrival_times.size)

    @classmethod
    def from_jumps(cls, jumps: JumpSet):
        """Arrival time ``t + 1`` (index of the first post-jump observation) per flagged increment.

        Time is measured in observation steps, the first date being 0.
        """
        ix = jumps.indices
        return cls(ix.astype(float) + 1.0, jumps.sizes, float(jumps.values.size - 1))


@dataclass(frozen=True)
class HawkesParams:
    """Exponential-kernel Hawkes intensity ``lambda0 + alpha * sum exp(-beta (t - t_i))``."""

    lambda0: float
    alpha: float
    beta: float
    delta: Optional[float] = None

    def __post_init__(self):
        if not self.lambda0 > 0:
            raise ValidationError(f"lambda0 must be > 0, got {self.lambda0}")
        if not self.alpha >= 0:
            raise ValidationError(f"alpha must be >= 0, got {self.alpha}")
        if not self.beta > 0:
            raise ValidationError(f"beta must be > 0, got {self.beta}")
        if self.delta is not None and not self.delta > 0:
            raise ValidationError(f"delta must be > 0, got {self.delta}")

    @property
    def branching_ratio(self):
        return self.alpha / self.beta

    @property
    def stable(self):
        """``beta - alpha / delta > 0`` for the marked model; ``None`` without ``delta``."""
        if self.delta is None:
            return None
        return self.beta - self.alpha / self.delta > 0


@dataclass(frozen=True)
class DriftVolEstimates:
    mean_reversion: float
    volatility: float
    jump_rate: float


# ---------------------------------------------------------------------------
# simple estimators


def estimate_delta(sizes):
    """Maximum-likelihood exponential rate ``L / sum z_i`` of the jump sizes."""
    z = as_1d_float(sizes, name="sizes", min_length=1)
    if np.any(z <= 0):
        raise DomainError("jump sizes must be positive")
    return z.size / z.sum()


def estimate_mean_reversion(section, jumps=None):
    """Average of ``1 - X(t+1) / X(t)`` over consecutive pairs without a jump.

    ``section`` is deseasonalized first if needed.  Pairs whose increment
    index was flagged by the detector are dropped.
    """
    if isinstance(section, VerticalSection):
        X = section.deseasonalize().values
    else:
        X = as_1d_float(section, name="section", min_length=2)
    keep = np.ones(X.size - 1, dtype=bool)
    if jumps is not None:
        keep[jumps.indices] = False
    if keep.sum() < 2:
        raise InsufficientDataError("fewer than two jump-free consecutive pairs")
    num, den = X[1:][keep], X[:-1][keep]
    if np.any(den == 0):
        raise DomainError("zero deseasonalized value in a ratio denominator")
    return float(np.mean(1.0 - num / den))


def estimate_sigma(jumps):
    """Volatility estimate: the detector's second-iteration sigma."""
    if jumps.n_iterations < 2:
        raise InsufficientDataError(
            f"detector ran {jumps.n_iterations} iteration(s); sigma needs two"
        )
    return float(jumps.sigmas[1])


def _times(sample):
    if isinstance(sample, JumpSample):
        return sample.arrival_times
    return check_event_times(sample)


def estimate_poisson(sample):
    """Homogeneous rate: jump count over the sum of inter-arrival times (``N / tau_N``)."""
    t = _times(sample)
    if t.size < 1:
        raise InsufficientDataError("no jumps")
    return t.size / t[-1]


def estimate_branching_gamma(sample, section):
    """Proportionality between jump intensity and deseasonalized forward: ``N / sum_t X(t)``."""
    t = _times(sample)
    X = section.deseasonalize().values if isinstance(section, VerticalSection) else as_1d_float(section)
    if t.size and t[-1] > X.size - 1:
        raise ValidationError("arrival times exceed the section length")
    total = float(X.sum())
    if not total > 0:
        raise DomainError(f"cumulative deseasonalized price must be positive, got {total}")
    return t.size / total


# ---------------------------------------------------------------------------
# Hawkes likelihood


@njit(cache=True)
def _hawkes_loglik(t, lam0, alpha, beta, horizon):
    n = t.size
    ll = -lam0 * horizon
    a = 0.0
    ratio = alpha / beta
    for i in range(n):
        if i > 0:
            a = math.exp(-beta * (t[i] - t[i - 1])) * (1.0 + a)
        arg = lam0 + alpha * a
        if not arg > 0.0:
            return -np.inf
        ll += math.log(arg) + ratio * (math.exp(-beta * (horizon - t[i])) - 1.0)
    return ll


def _unpack(params):
    if isinstance(params, HawkesParams):
        return params.lambda0, params.alpha, params.beta
    lam0, alpha, beta = (float(p) for p in params)
    return lam0, alpha, beta


def hawkes_loglik(params, sample, horizon=None):
    """Log-likelihood of an unmarked exponential Hawkes process.

    Uses the ``O(N)`` recursion ``A(1) = 0``,
    ``A(i) = exp(-beta (tau_i - tau_{i-1})) (1 + A(i-1))``.

    Parameters
    ----------
    params : HawkesParams or (lambda0, alpha, beta)
    sample : JumpSample or array-like of event times
    horizon : float, optional
        End of the observation window; defaults to the last event time.

    Returns
    -------
    float
        ``-inf`` for parameters outside the domain or a non-positive
        intensity at an event.
    """
    t = _times(sample)
    if t.size < 1:
        raise InsufficientDataError("no events")
    lam0, alpha, beta = _unpack(params)
    if not (lam0 > 0 and alpha >= 0 and beta > 0):
        return -math.inf
    T = float(t[-1]) if horizon is None else float(horizon)
    return float(_hawkes_loglik(t, lam0, alpha, beta, T))


def poisson_loglik(rate, sample, horizon=None):
    t = _times(sample)
    T = float(t[-1]) if horizon is None else float(horizon)
    return -rate * T + t.size * math.log(rate)


@dataclass(frozen=True)
class HawkesFit:
    """Result of :func:`fit_hawkes`."""

    params: HawkesParams
    loglik: float
    poisson_loglik: float
    degenerate: bool = False
    n_starts: int = 0


def _starting_points(rate):
    # decay rates log-spaced around the Poisson rate, two branching ratios each
    starts = []
    for c in (0.5, 2.0, 8.0, 32.0):
        beta = c * rate
        for ratio in (0.3, 0.7):
            starts.append((rate * (1.0 - ratio), ratio * beta, beta))
    return starts


def fit_hawkes(sample, *, horizon=None, starts=None, maxiter=10_000, xatol=1e-6, fatol=1e-8):
    """Maximum-likelihood fit of ``(lambda0, alpha, beta)``.

    Nelder-Mead on log-parameters from several starting points around the
    Poisson fit; the best optimum wins (ties go to the earliest start).

    Parameters
    ----------
    sample : JumpSample or array-like of event times
        At least 5 events.
    horizon : float, optional
        Defaults to the last event time.
    starts : sequence of (lambda0, alpha, beta), optional
        Replaces the default 8 starting points.

    Returns
    -------
    HawkesFit
        ``degenerate`` is set (and a warning issued) when no start improves
        on the Poisson likelihood by more than ``fatol`` relative; the returned parameters are then the
        Poisson rate with ``alpha = 0``.
    """
    t = _times(sample)
    if t.size < 5:
        raise InsufficientDataError(f"Hawkes fit needs at least 5 events, got {t.size}")
    T = float(t[-1]) if horizon is None else float(horizon)
    rate = t.size / T
    ll_pois = poisson_loglik(rate, t, T)

    def nll(theta):
        lam0, alpha, beta = np.exp(theta)
        val = _hawkes_loglik(t, lam0, alpha, beta, T)
        return -val if np.isfinite(val) else np.inf

    starts = list(starts) if starts is not None else _starting_points(rate)
    best_x, best_ll = None, -math.inf
    for s in starts:
        res = minimize(nll, np.log(np.asarray(s, dtype=float)), method="Nelder-Mead",
                       options={"maxiter": maxiter, "maxfev": 2 * maxiter,
                                "xatol": xatol, "fatol": fatol})
        ll = -float(res.fun)
        if ll > best_ll:
            best_x, best_ll = res.x, ll

    # gains at the optimizer's own tolerance are rounding noise, not excitation
    if best_x is None or not best_ll > ll_pois + fatol * max(1.0, abs(ll_pois)):
        warnings.warn("Hawkes fit did not improve on the Poisson likelihood", RuntimeWarning,
                      stacklevel=2)
        beta = float(np.exp(best_x[2])) if best_x is not None else 1.0
        return HawkesFit(HawkesParams(rate, 0.0, beta), ll_pois, ll_pois, True, len(starts))
    lam0, alpha, beta = (float(v) for v in np.exp(best_x))
    return HawkesFit(HawkesParams(lam0, alpha, beta), best_ll, ll_pois, False, len(starts))


class HawkesMLE(BaseEstimator):
    """Estimator interface for :func:`fit_hawkes`.

    ``fit`` takes event times (or a :class:`JumpSample`); ``score`` returns
    the log-likelihood of event times under the fitted parameters.

    Attributes
    ----------
    lambda0_, alpha_, beta_ : float
    loglik_ : float
    degenerate_ : bool
    """

    def __init__(self, maxiter=10_000, xatol=1e-6, fatol=1e-8):
        self.maxiter = maxiter
        self.xatol = xatol
        self.fatol = fatol

    def fit(self, X, y=None):
        fit = fit_hawkes(X, maxiter=self.maxiter, xatol=self.xatol, fatol=self.fatol)
        self.params_ = fit.params
        self.lambda0_, self.alpha_, self.beta_ = fit.params.lambda0, fit.params.alpha, fit.params.beta
        self.loglik_ = fit.loglik
        self.degenerate_ = fit.degenerate
        return self

    def score(self, X, y=None):
        check_is_fitted(self, "params_")
        return hawkes_loglik(self.params_, X)
