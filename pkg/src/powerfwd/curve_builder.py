"""Maximum-smoothness forward curves from futures closing prices.

A forward curve is ``f(u) = Lambda(u) + eps(u)`` where ``Lambda`` is a cosine
seasonality and ``eps`` is a C^2 piecewise-quartic spline, flat at the far
end, minimising ``int eps''(u)^2 du`` subject to exact repricing of every
quoted futures contract.  The minimiser solves one saddle-point (KKT) linear
system per observation date.

Coefficients are reported per segment in the global variable ``u`` (days),
in the order ``(a, b, c, d, e)`` of ``a u^4 + b u^3 + c u^2 + d u + e``.
The system is assembled and solved in the rescaled variable
``s = u / time_scale`` (years by default) and, by default, in a shifted
per-segment basis ``(u - T_{j-1}) / time_scale``.  Both are exact changes of
variables, so the minimiser is unchanged; the shifted basis avoids the
near-collinearity of ``u^4 .. 1`` on short segments far from the origin.
"""

import datetime as dt
import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg
from scipy.linalg import lapack
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .exceptions import (
    AssemblyError,
    DomainError,
    InconsistentQuotesError,
    NumericalError,
    StructuralError,
    ValidationError,
)
from .market_data import Contract, FuturesQuote, KnotGrid, resolve_rolling, split_overlaps

SEASONAL_PERIOD = 365.0
TRADING_DAYS_PER_YEAR = 252.0
DAYS_PER_YEAR = 365.0
#: Above this estimate (1-norm, equilibrated system) a solve is rejected.
MAX_CONDITION = 1e14
#: Relative price tolerance when a quote is implied by other quotes.
REDUNDANCY_RTOL = 1e-9

_POWERS = np.array([4, 3, 2, 1, 0])


# ---------------------------------------------------------------------------
# seasonality


@dataclass(frozen=True)
class SeasonalityParams:
    """``Lambda(u) = amp * cos((u - phase) * 2 pi / period)``."""

    amp: float
    phase: float
    period: float = SEASONAL_PERIOD

    def __post_init__(self):
        if not self.amp >= 0:
            raise ValidationError(f"seasonality amplitude must be >= 0, got {self.amp}")
        if self.period != SEASONAL_PERIOD:
            raise ValidationError(f"seasonality period is fixed at {SEASONAL_PERIOD}")

    def __call__(self, u):
        return seasonality_value(u, self)

    def mean(self, u0, u1):
        """Average of ``Lambda`` over ``[u0, u1]`` in closed form."""
        u0 = np.asarray(u0, dtype=float)
        u1 = np.asarray(u1, dtype=float)
        w = 2.0 * np.pi / self.period
        half = 0.5 * w * (u1 - u0)
        mid = 0.5 * w * (u0 + u1) - w * self.phase
        # sin(w1) - sin(w0) = 2 cos(mid) sin(half); sinc-form is exact at half -> 0
        return self.amp * np.cos(mid) * np.sinc(half / np.pi)

    def integral(self, u0, u1):
        return self.mean(u0, u1) * (np.asarray(u1, dtype=float) - np.asarray(u0, dtype=float))


def seasonality_value(u, p):
    """Evaluate the seasonality function ``p`` at day offset(s) ``u``."""
    u = np.asarray(u, dtype=float)
    out = p.amp * np.cos((u - p.phase) * (2.0 * np.pi / p.period))
    return float(out) if out.ndim == 0 else out


def fit_seasonality(quotes, *, reference="year_end"):
    """Fit amplitude and phase from the whole quote history.

    The amplitude is the smallest closing price over all contracts.  The
    phase is the day distance, rescaled by 252/365, from the reference date
    back to the observation date on which that minimum occurs.

    Parameters
    ----------
    quotes : sequence of FuturesQuote
    reference : {"year_end", "last_date"}, default "year_end"
        ``"year_end"`` measures from 31 December of the last year present in
        the data, ``"last_date"`` from the last observation date.

    Returns
    -------
    SeasonalityParams
    """
    quotes = list(quotes)
    if not quotes:
        raise ValidationError("cannot fit seasonality without quotes")
    closes = np.array([q.close for q in quotes], dtype=float)
    i_min = int(np.argmin(closes))
    min_date = quotes[i_min].obs_date
    last = max(q.obs_date for q in quotes)
    if reference == "year_end":
        ref = dt.date(last.year, 12, 31)
    elif reference == "last_date":
        ref = last
    else:
        raise ValueError(f"unknown reference {reference!r}")
    phase = (ref - min_date).days * TRADING_DAYS_PER_YEAR / DAYS_PER_YEAR
    return SeasonalityParams(amp=float(closes[i_min]), phase=float(phase))


# ---------------------------------------------------------------------------
# QP assembly


def _pow_diff(hi, lo, p):
    """``hi**p - lo**p`` without catastrophic cancellation for hi close to lo."""
    if p == 0:
        return 0.0
    return (hi - lo) * sum(hi ** i * lo ** (p - 1 - i) for i in range(p))


BASES = ("global", "local")


def _segment_ends(knots, time_scale, basis):
    """Per segment, its endpoints in the basis variable: ``(lo_j, hi_j)`` arrays."""
    if not time_scale > 0:
        raise ValidationError("time_scale must be positive")
    if basis not in BASES:
        raise ValidationError(f"basis must be one of {BASES}, got {basis!r}")
    knots = np.asarray(knots, dtype=float)
    if basis == "global":
        t = knots / float(time_scale)
        return t[:-1], t[1:]
    return np.zeros(knots.size - 1), np.diff(knots) / float(time_scale)


def assemble_H(grid, time_scale=1.0, basis="global"):
    """Block-diagonal ``5n x 5n`` matrix with ``x' H x = int eps''(s)^2 ds``.

    Parameters
    ----------
    grid : KnotGrid
    time_scale : float, default 1.0
        Knots are divided by this before assembly (1.0 = raw days).
    basis : {"global", "local"}, default "global"
        Segment polynomials in ``s`` itself or in ``s - T_{j-1} / time_scale``.
    """
    lo, hi = _segment_ends(grid.knots, time_scale, basis)
    n = lo.size
    H = np.zeros((5 * n, 5 * n))
    for j in range(n):
        d1, d2, d3, d4, d5 = (_pow_diff(hi[j], lo[j], p) for p in range(1, 6))
        H[5 * j:5 * j + 3, 5 * j:5 * j + 3] = [
            [144.0 / 5.0 * d5, 18.0 * d4, 8.0 * d3],
            [18.0 * d4, 12.0 * d3, 6.0 * d2],
            [8.0 * d3, 6.0 * d2, 4.0 * d1],
        ]
    return H


def _basis(t, order):
    """Row of d^order/dt^order of (t^4, t^3, t^2, t, 1)."""
    if order == 0:
        return np.array([t ** 4, t ** 3, t ** 2, t, 1.0])
    if order == 1:
        return np.array([4 * t ** 3, 3 * t ** 2, 2 * t, 1.0, 0.0])
    return np.array([12 * t ** 2, 6 * t, 2.0, 0.0, 0.0])


def _as_contract(c):
    if isinstance(c, Contract):
        return c
    (s, e), price = c
    return Contract(float(s), float(e), float(price))


def assemble_constraints(grid, contracts, seasonality, time_scale=1.0, basis="global"):
    """Equality constraints ``A x = b`` of the smoothest-curve problem.

    Rows are, in order: value / first / second derivative continuity at each
    interior knot (``3(n-1)`` rows), flatness ``eps'(T_n) = 0`` (one row) and
    one average-price row per contract.

    Parameters
    ----------
    grid : KnotGrid
    contracts : sequence of Contract or ``((start, end), price)``
    seasonality : SeasonalityParams
    time_scale : float, default 1.0
    basis : {"global", "local"}, default "global"

    Returns
    -------
    A : ndarray of shape (3n + m - 2, 5n)
    b : ndarray of shape (3n + m - 2,)
    """
    contracts = [_as_contract(c) for c in contracts]
    lo, hi = _segment_ends(grid.knots, time_scale, basis)
    n = lo.size
    m = len(contracts)
    A = np.zeros((3 * n + m - 2, 5 * n))
    b = np.zeros(3 * n + m - 2)

    row = 0
    for j in range(1, n):
        for order in range(3):
            A[row, 5 * j:5 * j + 5] = _basis(lo[j], order)
            A[row, 5 * (j - 1):5 * j] = -_basis(hi[j - 1], order)
            row += 1
    A[row, 5 * (n - 1):5 * n] = _basis(hi[n - 1], 1)
    row += 1

    seg_int = np.array([
        [_pow_diff(hi[j], lo[j], p + 1) / (p + 1) for p in _POWERS] for j in range(n)
    ])
    for c in contracts:
        i0, i1 = grid.index_of(c.start), grid.index_of(c.end)
        if i0 is None or i1 is None:
            raise AssemblyError(f"contract window [{c.start}, {c.end}) is not on the knot grid")
        length = (grid.knots[i1] - grid.knots[i0]) / float(time_scale)
        for j in range(i0, i1):
            A[row, 5 * j:5 * j + 5] = seg_int[j] / length
        b[row] = c.price - float(seasonality.mean(c.start, c.end))
        row += 1
    return A, b


@dataclass
class QPSystem:
    """``min x'Hx  s.t.  A x = b`` together with the grid and basis it was built on."""

    H: np.ndarray
    A: np.ndarray
    b: np.ndarray
    grid: KnotGrid
    time_scale: float = 1.0
    basis: str = "global"

    @classmethod
    def build(cls, grid, contracts, seasonality, time_scale=1.0, basis="local"):
        H = assemble_H(grid, time_scale, basis)
        A, b = assemble_constraints(grid, contracts, seasonality, time_scale, basis)
        return cls(H, A, b, grid, float(time_scale), basis)


def _pow2_reciprocal(v):
    # powers of two keep the scaled matrix an exact copy of K
    v = np.where(v == 0, 1.0, v)
    return np.ldexp(1.0, -np.frexp(v)[1])


def _equilibrate(K):
    r = _pow2_reciprocal(np.abs(K).max(axis=1))
    c = _pow2_reciprocal(np.abs(K * r[:, None]).max(axis=0))
    return r, c


_REFINE_STEPS = 3


def solve_kkt(H, A, b, max_condition=MAX_CONDITION):
    """Solve ``[[2H, A'], [A, 0]] [x; lam] = [0; b]`` by LU with equilibration.

    The LU factorization is followed by iterative refinement with residuals
    accumulated in extended precision, which recovers close to full double
    accuracy whenever the condition estimate passes the gate.

    Returns
    -------
    x, lam : ndarray
    condition : float
        1-norm condition estimate of the equilibrated saddle-point matrix.
    """
    nx, nc = H.shape[0], A.shape[0]
    K = np.zeros((nx + nc, nx + nc))
    K[:nx, :nx] = 2.0 * H
    K[:nx, nx:] = A.T
    K[nx:, :nx] = A
    rhs = np.concatenate([np.zeros(nx), b])

    r, c = _equilibrate(K)
    Ks = K * r[:, None] * c[None, :]
    anorm = np.abs(Ks).sum(axis=0).max()
    with warnings.catch_warnings():
        warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
        try:
            lu, piv = scipy.linalg.lu_factor(Ks, check_finite=False)
        except (scipy.linalg.LinAlgWarning, np.linalg.LinAlgError):
            raise NumericalError("singular saddle-point system", condition=math.inf) from None
    rcond, info = lapack.dgecon(lu, anorm, norm="1")
    condition = math.inf if rcond == 0 else 1.0 / rcond
    if info != 0 or not condition <= max_condition:
        raise NumericalError("ill-conditioned saddle-point system", condition=condition)
    rs = rhs * r
    y = scipy.linalg.lu_solve((lu, piv), rs, check_finite=False).astype(np.longdouble)
    Kl, rl = Ks.astype(np.longdouble), rs.astype(np.longdouble)
    for _ in range(_REFINE_STEPS):
        res = (rl - Kl @ y).astype(float)
        y += scipy.linalg.lu_solve((lu, piv), res, check_finite=False)
    sol = (y * c).astype(float)
    return sol[:nx], sol[nx:], condition


# ---------------------------------------------------------------------------
# curves


@dataclass(frozen=True, eq=False)
class SplineCurve:
    """Piecewise-quartic adjustment spline on a knot grid.

    Parameters
    ----------
    knot_grid : KnotGrid
    scaled_coeffs : ndarray of shape (n, 5)
        Coefficients, highest power first, in the variable
        ``(u - o_j) / time_scale`` where the origin ``o_j`` is 0
        (``basis="global"``) or the segment start ``T_{j-1}``
        (``basis="local"``).
    time_scale : float
    obs_date : datetime.date, optional
    objective, residual_inf, condition : float
        Solve diagnostics (objective in day units).
    basis : {"global", "local"}
    """

    knot_grid: KnotGrid
    scaled_coeffs: np.ndarray
    time_scale: float = 1.0
    obs_date: Optional[dt.date] = None
    objective: float = float("nan")
    residual_inf: float = float("nan")
    condition: float = float("nan")
    basis: str = "global"

    def __post_init__(self):
        if self.basis not in BASES:
            raise ValidationError(f"basis must be one of {BASES}, got {self.basis!r}")
        c = np.asarray(self.scaled_coeffs, dtype=float)
        if c.shape != (self.knot_grid.n_segments, 5):
            raise ValidationError(f"expected coefficients of shape ({self.knot_grid.n_segments}, 5)")
        object.__setattr__(self, "scaled_coeffs", c)

    @property
    def knots(self):
        return self.knot_grid.knots

    @property
    def origins(self):
        """Per-segment expansion point ``o_j`` in days."""
        if self.basis == "global":
            return np.zeros(self.knot_grid.n_segments)
        return np.asarray(self.knots[:-1], dtype=float)

    @property
    def local_coeffs(self):
        """Per-segment coefficients of powers of ``u - T_{j-1}`` (days), highest first."""
        day = self.scaled_coeffs / self.time_scale ** _POWERS[None, :]
        if self.basis == "local":
            return day
        return _shift(day, -np.asarray(self.knots[:-1], dtype=float))

    @property
    def coeffs(self):
        """Per-segment ``(a, b, c, d, e)`` of ``a u^4 + ... + e`` in day units."""
        day = self.scaled_coeffs / self.time_scale ** _POWERS[None, :]
        if self.basis == "global":
            return day
        return _shift(day, self.origins)

    @property
    def domain(self):
        return float(self.knots[0]), float(self.knots[-1])

    def segment_index(self, u):
        """Segment of ``u``: intervals ``[T_{j-1}, T_j)``, the last one closed."""
        j = np.searchsorted(self.knots, u, side="right") - 1
        return np.clip(j, 0, self.knot_grid.n_segments - 1)

    def _check_domain(self, u):
        lo, hi = self.domain
        if np.any((u < lo) | (u > hi)) or np.any(np.isnan(u)):
            raise DomainError(f"u outside curve domain [{lo}, {hi}]")

    def __call__(self, u, nu=0):
        """Evaluate the spline (or its ``nu``-th derivative, ``nu <= 2``) at ``u``."""
        u = np.asarray(u, dtype=float)
        self._check_domain(u)
        j = self.segment_index(u)
        s = (u - self.origins[j]) / self.time_scale
        c = self.scaled_coeffs[j]
        if nu == 0:
            out = (((c[..., 0] * s + c[..., 1]) * s + c[..., 2]) * s + c[..., 3]) * s + c[..., 4]
        elif nu == 1:
            out = ((4 * c[..., 0] * s + 3 * c[..., 1]) * s + 2 * c[..., 2]) * s + c[..., 3]
        elif nu == 2:
            out = (12 * c[..., 0] * s + 6 * c[..., 1]) * s + 2 * c[..., 2]
        else:
            raise ValueError("only derivatives up to order 2 are supported")
        out = out / self.time_scale ** nu
        return float(out) if out.ndim == 0 else out

    def eval_segment(self, j, u, nu=0):
        """Evaluate segment ``j``'s polynomial at ``u`` (no domain check)."""
        s = (np.asarray(u, dtype=float) - self.origins[j]) / self.time_scale
        c = np.polyder(self.scaled_coeffs[j], nu) if nu else self.scaled_coeffs[j]
        return np.polyval(c, s) / self.time_scale ** nu

    def integral(self, u0, u1):
        """``int_{u0}^{u1} eps(u) du`` from per-segment antiderivatives."""
        lo, hi = self.domain
        if not (lo <= u0 <= u1 <= hi):
            raise DomainError(f"[{u0}, {u1}] not inside curve domain [{lo}, {hi}]")
        ts = self.time_scale
        knots = self.knots
        origins = self.origins
        j0 = int(self.segment_index(u0))
        j1 = int(self.segment_index(u1))
        total = 0.0
        for j in range(j0, j1 + 1):
            a = (max(u0, knots[j]) - origins[j]) / ts
            b = (min(u1, knots[j + 1]) - origins[j]) / ts
            if b <= a:
                continue
            total += sum(
                cj * _pow_diff(b, a, p + 1) / (p + 1)
                for cj, p in zip(self.scaled_coeffs[j], _POWERS)
            )
        return total * ts

    def mean(self, u0, u1):
        return self.integral(u0, u1) / (u1 - u0)


def _shift(coeffs, origins):
    """Rewrite ``sum_k c_k (u - o)^k`` as ``sum_m g_m u^m`` per row (highest power first)."""
    out = np.zeros_like(coeffs)
    for row, (c, o) in enumerate(zip(coeffs, origins)):
        asc = c[::-1]
        g = np.zeros(5)
        for k in range(5):
            for m in range(k + 1):
                g[m] += asc[k] * math.comb(k, m) * (-o) ** (k - m)
        out[row] = g[::-1]
    return out


@dataclass(frozen=True, eq=False)
class ForwardCurve:
    """``f(u) = Lambda(u) + eps(u)`` on ``[T_0, T_n]``."""

    seasonality: SeasonalityParams
    spline: SplineCurve

    @property
    def obs_date(self):
        return self.spline.obs_date

    @property
    def domain(self):
        return self.spline.domain

    def __call__(self, u):
        return eval_forward(self, u)

    def adjustment(self, u):
        return self.spline(u)

    def reprice(self, T1, T2):
        return reprice_future(self, T1, T2)

    def table(self):
        """Rows ``(u_days, forward, seasonality, adjustment)`` on integer days of the domain."""
        lo, hi = self.domain
        u = np.arange(math.ceil(lo), math.floor(hi) + 1, dtype=float)
        lam = np.asarray(seasonality_value(u, self.seasonality))
        eps = np.asarray(self.spline(u))
        return np.column_stack([u, lam + eps, lam, eps])


def eval_forward(curve, u):
    """Forward price ``Lambda(u) + eps(u)``; raises DomainError outside ``[T_0, T_n]``."""
    eps = curve.spline(u)
    return seasonality_value(u, curve.seasonality) + eps


def reprice_future(curve, T1, T2):
    """Average of the forward curve over the delivery window ``[T1, T2]``."""
    lo, hi = curve.domain
    if not (lo <= T1 < T2 <= hi):
        raise DomainError(f"invalid delivery window [{T1}, {T2}] for domain [{lo}, {hi}]")
    return float(curve.seasonality.mean(T1, T2)) + curve.spline.mean(T1, T2)


def solve_curve(system, *, obs_date=None, max_condition=MAX_CONDITION):
    """Solve a :class:`QPSystem` and return the smoothest admissible spline."""
    x, _, cond = solve_kkt(system.H, system.A, system.b, max_condition=max_condition)
    residual = float(np.max(np.abs(system.A @ x - system.b))) if system.b.size else 0.0
    objective = float(x @ system.H @ x) / system.time_scale ** 3
    return SplineCurve(
        knot_grid=system.grid,
        scaled_coeffs=x.reshape(-1, 5),
        time_scale=system.time_scale,
        obs_date=obs_date,
        objective=objective,
        residual_inf=residual,
        condition=cond,
        basis=system.basis,
    )


def _contract_window(c):
    if isinstance(c, Contract):
        return c.window, c.price
    return tuple(c[0]), float(c[1])


def cascade_residual(parent, children):
    """Price inconsistency between a parent contract and a partition of it.

    Parameters
    ----------
    parent : Contract or ((start, end), price)
    children : sequence of Contract or ((start, end), price)
        Must partition the parent window.

    Returns
    -------
    float
        ``F_parent - sum_i (len_i / len_parent) F_i``; zero when consistent.
    """
    (p0, p1), fp = _contract_window(parent)
    kids = sorted((_contract_window(c) for c in children), key=lambda w: w[0][0])
    if not kids:
        raise StructuralError("no children given")
    cursor = p0
    for (s, e), _ in kids:
        if s != cursor or not e > s:
            raise StructuralError(f"children do not partition [{p0}, {p1}]")
        cursor = e
    if cursor != p1:
        raise StructuralError(f"children do not partition [{p0}, {p1}]")
    weighted = sum((e - s) * f for (s, e), f in kids)
    return fp - weighted / (p1 - p0)


def drop_redundant(contracts, rtol=REDUNDANCY_RTOL):
    """Remove contracts whose delivery window is implied by the others.

    A window whose indicator is a linear combination of other windows (a
    month quoted together with the four weeks tiling it, a year together
    with its four quarters) adds a dependent row to the constraint matrix.
    Shorter contracts are kept first; a dependent contract is dropped once
    its price is checked against the combination it is implied by.

    Parameters
    ----------
    contracts : sequence of Contract
    rtol : float
        Allowed mismatch of the implied price, relative to the largest
        absolute price.

    Returns
    -------
    kept, dropped : list of Contract
        ``kept`` preserves input order.

    Raises
    ------
    InconsistentQuotesError
        A dependent contract's price disagrees with the implied value, so
        no curve can reprice every quote.
    """
    contracts = [_as_contract(c) for c in contracts]
    edges = np.unique([x for c in contracts for x in c.window])
    mid = 0.5 * (edges[:-1] + edges[1:])
    B = np.array([(mid > c.start) & (mid < c.end) for c in contracts], dtype=float)
    if np.linalg.matrix_rank(B) == len(contracts):
        return contracts, []
    scale = max(abs(c.price) for c in contracts)
    order = sorted(range(len(contracts)), key=lambda i: (contracts[i].end - contracts[i].start, i))
    basis, dropped = [], []
    for i in order:
        trial = basis + [i]
        if np.linalg.matrix_rank(B[trial]) == len(trial):
            basis = trial
            continue
        # indicator_i = sum_k w_k indicator_k, so the integrals must match too
        w = np.linalg.lstsq(B[basis].T, B[i], rcond=None)[0]
        c = contracts[i]
        implied = sum(wk * (contracts[k].end - contracts[k].start) * contracts[k].price
                      for wk, k in zip(w, basis)) / (c.end - c.start)
        if abs(implied - c.price) > rtol * scale:
            raise InconsistentQuotesError(
                f"contract [{c.start}, {c.end}) {c.label or ''} priced {c.price!r}, "
                f"other quotes imply {implied!r}")
        dropped.append(c)
    keep = set(basis)
    return [c for j, c in enumerate(contracts) if j in keep], dropped


def curve_from_contracts(contracts, seasonality, *, time_scale=DAYS_PER_YEAR,
                         obs_date=None, max_condition=MAX_CONDITION, basis="local",
                         redundancy_rtol=REDUNDANCY_RTOL):
    """Smoothest forward curve repricing ``contracts`` (day-offset windows).

    Contracts implied by the others are dropped first (see :func:`drop_redundant`).
    """
    contracts = [_as_contract(c) for c in contracts]
    if not contracts:
        raise ValidationError("at least one contract is required")
    contracts, _ = drop_redundant(contracts, redundancy_rtol)
    grid = split_overlaps(contracts)
    system = QPSystem.build(grid, contracts, seasonality, time_scale, basis)
    spline = solve_curve(system, obs_date=obs_date, max_condition=max_condition)
    return ForwardCurve(seasonality, spline)


def build_curve(quotes, seasonality, *, include_quarterly=False, strict=True,
                time_scale=DAYS_PER_YEAR, max_condition=MAX_CONDITION, basis="local",
                redundancy_rtol=REDUNDANCY_RTOL):
    """Forward curve for the quotes of a single observation date.

    Runs rolling resolution, removal of implied contracts, overlap splitting,
    QP assembly and the KKT solve.

    Parameters
    ----------
    quotes : sequence of FuturesQuote
        All quotes of one observation date.
    seasonality : SeasonalityParams
    include_quarterly : bool, default False
    strict : bool, default True
        Passed to :func:`~powerfwd.market_data.resolve_rolling`.
    time_scale : float, default 365
        Internal time unit in days.
    basis : {"local", "global"}, default "local"
        Polynomial basis of the solve (see :class:`SplineCurve`).
    redundancy_rtol : float, default 1e-9
        Price tolerance for contracts implied by others.

    Returns
    -------
    ForwardCurve

    Raises
    ------
    InconsistentQuotesError
        Implied contracts are priced inconsistently.
    """
    quotes = list(quotes)
    if not quotes:
        raise ValidationError("no quotes for this date")
    obs_date = quotes[0].obs_date
    contracts = resolve_rolling(quotes, obs_date, include_quarterly=include_quarterly, strict=strict)
    if not contracts:
        raise ValidationError(f"no usable contracts on {obs_date}")
    return curve_from_contracts(contracts, seasonality, time_scale=time_scale,
                                obs_date=obs_date, max_condition=max_condition, basis=basis,
                                redundancy_rtol=redundancy_rtol)


# ---------------------------------------------------------------------------
# estimator API


class SeasonalityEstimator(BaseEstimator):
    """Fit the cosine seasonality from a quote history.

    Parameters
    ----------
    reference : {"year_end", "last_date"}, default "year_end"
    amp, phase : float, optional
        Overrides for the fitted values.

    Attributes
    ----------
    params_ : SeasonalityParams
    """

    def __init__(self, reference="year_end", amp=None, phase=None):
        self.reference = reference
        self.amp = amp
        self.phase = phase

    def fit(self, quotes, y=None):
        if self.amp is not None and self.phase is not None:
            self.params_ = SeasonalityParams(float(self.amp), float(self.phase))
            return self
        fitted = fit_seasonality(quotes, reference=self.reference)
        self.params_ = SeasonalityParams(
            fitted.amp if self.amp is None else float(self.amp),
            fitted.phase if self.phase is None else float(self.phase),
        )
        return self

    def predict(self, u):
        check_is_fitted(self, "params_")
        return np.asarray(seasonality_value(np.asarray(u, dtype=float), self.params_))


class MaxSmoothnessCurve(BaseEstimator):
    """Smoothest forward curve matching one date's futures quotes.

    ``fit`` takes either :class:`FuturesQuote` objects of one observation
    date or :class:`Contract` windows in day offsets; ``predict`` evaluates
    the forward price.

    Parameters
    ----------
    seasonality : SeasonalityParams, optional
        Defaults to zero seasonality.
    time_scale : float, default 365
    include_quarterly : bool, default False
    strict : bool, default True
    max_condition : float, default 1e14
    basis : {"local", "global"}, default "local"

    Attributes
    ----------
    curve_ : ForwardCurve
    objective_ : float
    residual_ : float
    """

    def __init__(self, seasonality=None, time_scale=DAYS_PER_YEAR, include_quarterly=False,
                 strict=True, max_condition=MAX_CONDITION, basis="local"):
        self.seasonality = seasonality
        self.time_scale = time_scale
        self.include_quarterly = include_quarterly
        self.strict = strict
        self.max_condition = max_condition
        self.basis = basis

    def fit(self, X, y=None):
        seas = self.seasonality if self.seasonality is not None else SeasonalityParams(0.0, 0.0)
        items = list(X)
        if items and isinstance(items[0], FuturesQuote):
            self.curve_ = build_curve(items, seas, include_quarterly=self.include_quarterly,
                                      strict=self.strict, time_scale=self.time_scale,
                                      max_condition=self.max_condition, basis=self.basis)
        else:
            self.curve_ = curve_from_contracts(items, seas, time_scale=self.time_scale,
                                               max_condition=self.max_condition,
                                               basis=self.basis)
        self.objective_ = self.curve_.spline.objective
        self.residual_ = self.curve_.spline.residual_inf
        return self

    def predict(self, u):
        check_is_fitted(self, "curve_")
        return np.asarray(eval_forward(self.curve_, np.asarray(u, dtype=float)))

    def reprice(self, T1, T2):
        check_is_fitted(self, "curve_")
        return reprice_future(self.curve_, T1, T2)
