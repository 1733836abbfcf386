"""Synthetic futures quotes priced exactly from a known forward curve.

Used by the test suite, the throughput benchmark and the ``synthesize``
CLI subcommand.  The true forward on observation date ``t`` is

    f_t(u) = level_t + amp cos(2 pi (u + doy_t - phase) / 365) + slope_t exp(-u / tau)

so every contract price is a closed-form window average.
"""

import datetime as dt
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .market_data import FuturesQuote, RollSlot, Tenor, roll_window
from .exceptions import ValidationError

DEFAULT_TENORS = (Tenor.WEEKLY, Tenor.MONTHLY, Tenor.YEARLY)


@dataclass(frozen=True)
class TrueCurve:
    """Closed-form forward ``f(u)`` in day offsets from its observation date."""

    level: float
    amp: float
    phase: float
    slope: float
    tau: float = 180.0

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        return (self.level + self.amp * np.cos(2 * np.pi * (u - self.phase) / 365.0)
                + self.slope * np.exp(-u / self.tau))

    def mean(self, u0, u1):
        """Exact average over ``[u0, u1)``."""
        w = 2 * math.pi / 365.0
        L = u1 - u0
        cos_part = self.amp * (math.sin(w * (u1 - self.phase)) - math.sin(w * (u0 - self.phase))) / (w * L)
        exp_part = self.slope * self.tau * (math.exp(-u0 / self.tau) - math.exp(-u1 / self.tau)) / L
        return self.level + cos_part + exp_part


def business_days(start, n):
    """The first ``n`` weekdays on or after ``start``."""
    out = []
    d = start
    while len(out) < n:
        if d.weekday() < 5:
            out.append(d)
        d += dt.timedelta(days=1)
    return out


def quotes_for_date(obs_date, curve, *, tenors=DEFAULT_TENORS, slots=tuple(RollSlot)):
    """Rolling-contract quotes of one date, priced from ``curve``."""
    out = []
    for tenor in tenors:
        tenor = Tenor(tenor)
        for slot in slots:
            start, end = roll_window(tenor, slot, obs_date)
            u0, u1 = (start - obs_date).days, (end - obs_date).days + 1
            price = curve.mean(u0, u1)
            if not price > 0:
                raise ValidationError(f"synthetic price {price} is not positive")
            out.append(FuturesQuote(obs_date, f"SYN-{tenor.value[0].upper()}{slot.rank}",
                                    tenor, slot, start, end, float(price)))
    return out


def synthetic_quotes(n_dates, *, start=dt.date(2000, 1, 3), seed=0, levels: Optional[Sequence] = None,
                     amp=8.0, phase=20.0, base=50.0, level_vol=0.5, slope_scale=5.0,
                     tenors=DEFAULT_TENORS, calendar=True):
    """Quote history over ``n_dates`` business days.

    Parameters
    ----------
    levels : sequence of float, optional
        Per-date level of the true curve; a positive random walk around
        ``base`` by default.
    amp, phase : float
        Seasonal amplitude and phase (day of year of the peak).
    slope_scale : float
        Standard deviation of the short-end term ``slope_t``.
    calendar : bool, default True
        Seasonality follows the calendar (phase shifts with the date).
        Otherwise the curve shape in day offsets is the same every date,
        so ``SeasonalityParams(amp, phase)`` describes it exactly.

    Returns
    -------
    quotes : list of FuturesQuote
    truth : dict ``obs_date -> TrueCurve``
    """
    rng = np.random.default_rng(seed)
    dates = business_days(start, n_dates)
    if levels is None:
        steps = rng.normal(0.0, level_vol, n_dates)
        lv = np.empty(n_dates)
        x = base
        for i in range(n_dates):
            x = x + 0.02 * (base - x) + steps[i]
            lv[i] = x
        levels = lv
    levels = np.asarray(levels, dtype=float)
    if levels.size != n_dates:
        raise ValidationError("levels must have one entry per date")
    slopes = rng.normal(0.0, slope_scale, n_dates)
    quotes, truth = [], {}
    for d, lev, sl in zip(dates, levels, slopes):
        shift = d.timetuple().tm_yday if calendar else 0
        curve = TrueCurve(float(lev), amp, phase - shift, float(sl))
        truth[d] = curve
        quotes.extend(quotes_for_date(d, curve, tenors=tenors))
    return quotes, truth
