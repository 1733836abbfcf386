"""Fixed-maturity sections of a forward surface and iterative 3-sigma jump detection."""

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import as_1d_float
from .curve_builder import eval_forward, seasonality_value
from .exceptions import DomainError, InsufficientDataError

DEFAULT_MAX_ITERATIONS = 2
DEFAULT_THRESHOLD = 3.0


@dataclass(frozen=True, eq=False)
class VerticalSection:
    """Forward prices ``V_t = f(t, T)`` at fixed time-to-maturity ``T``.

    Attributes
    ----------
    maturity : float
        Day offset ``T``.
    values : ndarray
        One value per retained observation date, in date order.
    obs_dates : tuple
        Dates of the retained curves.
    deseasonalized : bool
        Whether ``Lambda(T)`` has been subtracted.
    excluded : tuple
        Dates whose curve does not cover ``T``.
    seasonal_level : float
        ``Lambda(T)``; add to deseasonalized values to recover prices.
    """

    maturity: float
    values: np.ndarray
    obs_dates: tuple = ()
    deseasonalized: bool = False
    excluded: tuple = ()
    seasonal_level: float = 0.0

    def __len__(self):
        return int(self.values.size)

    def deseasonalize(self):
        """Copy of this section with ``Lambda(T)`` removed."""
        if self.deseasonalized:
            return self
        return VerticalSection(self.maturity, self.values - self.seasonal_level, self.obs_dates,
                               True, self.excluded, self.seasonal_level)


def vertical_section(surface, T, *, deseasonalized=False, min_dates=3):
    """Sample every curve of a surface at time-to-maturity ``T``.

    Parameters
    ----------
    surface : sequence of ForwardCurve, or mapping ``obs_date -> ForwardCurve``
        Curves ordered by observation date.
    T : float
        Day offset from each curve's own observation date.
    deseasonalized : bool, default False
        Subtract the seasonality ``Lambda(T)``.

    Returns
    -------
    VerticalSection
    """
    items = list(surface.items()) if hasattr(surface, "items") else [
        (c.obs_date, c) for c in surface
    ]
    values, dates, excluded = [], [], []
    level = None
    for date, curve in items:
        lo, hi = curve.domain
        if not lo <= T <= hi:
            excluded.append(date)
            continue
        values.append(eval_forward(curve, float(T)))
        dates.append(date)
        if level is None:
            level = float(seasonality_value(float(T), curve.seasonality))
    if len(values) < min_dates:
        raise InsufficientDataError(
            f"only {len(values)} curves cover maturity {T}, need {min_dates}"
        )
    sec = VerticalSection(float(T), np.asarray(values, dtype=float), tuple(dates), False,
                          tuple(excluded), level)
    return sec.deseasonalize() if deseasonalized else sec


@dataclass(frozen=True, eq=False)
class JumpSet:
    """Output of :func:`detect_jumps`.

    Attributes
    ----------
    jump_indices : tuple of ndarray
        Per iteration, the increment indices ``t`` (jump between ``V_t`` and
        ``V_{t+1}``) flagged at that iteration.
    sigmas : ndarray
        ``sigma_i`` estimate of each iteration performed.
    values : ndarray
        The series the detector ran on.
    """

    jump_indices: tuple
    sigmas: np.ndarray
    values: np.ndarray = field(repr=False, default=None)

    @property
    def n_iterations(self):
        return len(self.sigmas)

    @property
    def counts(self):
        return [int(ix.size) for ix in self.jump_indices]

    @property
    def indices(self):
        """All flagged increment indices, sorted."""
        if not self.jump_indices:
            return np.zeros(0, dtype=int)
        return np.sort(np.concatenate(self.jump_indices))

    @property
    def sizes(self):
        """Jump sizes ``V_{t+1} - V_t`` at :attr:`indices`."""
        ix = self.indices
        return self.values[ix + 1] - self.values[ix]

    def iteration_of(self):
        """``{index: iteration}`` with iterations counted from 1."""
        return {int(t): i + 1 for i, ix in enumerate(self.jump_indices) for t in ix}


def detect_jumps(section, max_iterations=DEFAULT_MAX_ITERATIONS, threshold=DEFAULT_THRESHOLD):
    """Iterative square-root-weighted 3-sigma detection of positive jumps.

    At iteration ``i`` the scale is estimated from the increments not yet
    flagged,

        sigma_i^2 = sum (V_{t+1} - V_t)^2 / V_t / (n - sum_{j<i} m_j - 1 - [i == 1]),

    and every remaining increment with ``(V_{t+1} - V_t) / sqrt(V_t) >=
    threshold * sigma_i`` (and a strictly positive increment) is flagged.
    The loop stops after ``max_iterations`` or when an iteration flags
    nothing.

    Parameters
    ----------
    section : VerticalSection or array-like
        Strictly positive series of length ``n >= 3``.
    max_iterations : int, default 2
        ``None`` iterates until no new jump is found.
    threshold : float, default 3.0

    Returns
    -------
    JumpSet
    """
    values = section.values if isinstance(section, VerticalSection) else section
    V = as_1d_float(values, name="section", min_length=3)
    if np.any(V <= 0):
        raise DomainError("jump detection needs a strictly positive series")
    n = V.size
    inc = np.diff(V)
    sq = inc ** 2 / V[:-1]
    stat = inc / np.sqrt(V[:-1])
    remaining = np.ones(n - 1, dtype=bool)

    flagged, sigmas = [], []
    removed = 0
    i = 1
    while max_iterations is None or i <= max_iterations:
        dof = n - removed - 1 - (1 if i == 1 else 0)
        if dof <= 0:
            break
        sigma = float(np.sqrt(sq[remaining].sum() / dof))
        sigmas.append(sigma)
        hits = np.flatnonzero(remaining & (inc > 0) & (stat >= threshold * sigma))
        if hits.size == 0:
            break
        flagged.append(hits)
        remaining[hits] = False
        removed += hits.size
        i += 1
    return JumpSet(tuple(flagged), np.asarray(sigmas), V)


class JumpDetector(BaseEstimator):
    """Estimator wrapper around :func:`detect_jumps`.

    ``fit`` runs the iterative detector on a series; ``predict`` flags the
    increments of a (possibly new) series whose normalized size exceeds
    ``threshold`` times the last fitted sigma.

    Attributes
    ----------
    jumps_ : JumpSet
    sigma_ : float
        Last sigma estimate.
    """

    def __init__(self, max_iterations=DEFAULT_MAX_ITERATIONS, threshold=DEFAULT_THRESHOLD):
        self.max_iterations = max_iterations
        self.threshold = threshold

    def fit(self, X, y=None):
        self.jumps_ = detect_jumps(X, self.max_iterations, self.threshold)
        self.sigma_ = float(self.jumps_.sigmas[-1]) if self.jumps_.n_iterations else 0.0
        return self

    def predict(self, X):
        """Boolean mask over the ``n - 1`` increments of ``X``."""
        check_is_fitted(self, "jumps_")
        values = X.values if isinstance(X, VerticalSection) else X
        V = as_1d_float(values, name="section", min_length=2)
        if np.any(V <= 0):
            raise DomainError("jump detection needs a strictly positive series")
        inc = np.diff(V)
        return (inc > 0) & (inc / np.sqrt(V[:-1]) >= self.threshold * self.sigma_)
