"""Simulation of CBI and Hawkes forward factors, the CBI Laplace transform and measure changes.

Time is in days throughout.  Jump marks are exponential with rate
``delta``; ``jump_mass`` is the total mass of the jump measure, 1 under the
historical measure and ``delta / (delta + theta)`` after an exponential tilt.
"""

import enum
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp

from .estimation import HawkesParams
from .exceptions import DomainError, ExplosionError, NumericalError, ValidationError

DEFAULT_DT = 0.1
MAX_EVENTS = 10_000_000
LAPLACE_RTOL = 1e-9
_BATCH = 4096


class Measure(str, enum.Enum):
    P = "P"
    Q = "Q"


class Baseline(str, enum.Enum):
    # "constant": lambda relaxes back to lambda(0) between events
    # "decaying": lambda(t) = lambda(0) - beta int lambda ds + jumps, read literally
    CONSTANT = "constant"
    DECAYING = "decaying"


def _nonneg(obj, *names):
    for name in names:
        v = getattr(obj, name)
        if not (np.isfinite(v) and v >= 0):
            raise ValidationError(f"{name} must be finite and >= 0, got {v}")


@dataclass(frozen=True)
class CBIParams:
    """Parameters of ``dY = a(b - Y)dt + sigma sqrt(Y) dW + gamma int z N~(dt, dz, Y)``."""

    a: float
    b: float
    sigma: float
    gamma: float
    delta: float
    y0: float
    jump_mass: float = 1.0

    def __post_init__(self):
        _nonneg(self, "a", "b", "sigma", "gamma", "y0", "jump_mass")
        if not self.delta > 0:
            raise ValidationError(f"delta must be > 0, got {self.delta}")


@dataclass(frozen=True)
class HawkesForwardParams:
    """Forward factor ``dX = -c X dt + sigma sqrt(X) dW + dJ~`` driven by a marked Hawkes process."""

    c: float
    sigma: float
    lambda0: float
    alpha: float
    beta: float
    delta: float
    x0: float
    jump_mass: float = 1.0

    def __post_init__(self):
        HawkesParams(self.lambda0, self.alpha, self.beta, self.delta)
        _nonneg(self, "sigma", "x0", "jump_mass")
        if not np.isfinite(self.c):
            raise ValidationError("c must be finite")

    @property
    def intensity(self):
        return HawkesParams(self.lambda0, self.alpha, self.beta, self.delta)

    @property
    def stable(self):
        return self.beta - self.alpha * self.jump_mass / self.delta > 0


@dataclass(frozen=True)
class MeasureChange:
    """Market prices of risk: ``eta`` for the diffusion, ``theta`` for the jump tilt."""

    eta: float = 0.0
    theta: float = 0.0


@dataclass(frozen=True, eq=False)
class SimPath:
    """Simulation output.

    Attributes
    ----------
    times : ndarray
        Grid times (Euler schemes) or event times (Hawkes).
    states : ndarray
        ``Y`` or ``X`` values; shape ``(n_paths, len(times))`` for grids.
    intensity : ndarray or None
        Hawkes intensity just after each event.
    events : ndarray
        ``(k, 2)`` array of ``(time, mark)``.
    seed : int or None
    diagnostics : dict
    """

    times: np.ndarray
    states: np.ndarray
    intensity: Optional[np.ndarray] = None
    events: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    seed: Optional[int] = None
    diagnostics: dict = field(default_factory=dict)


def path_rng(seed, index=None):
    """Generator for stream ``index`` of ``seed``; independent across indices."""
    if index is None:
        return np.random.default_rng(seed)
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(int(index),)))


class _Draws:
    """Buffered standard exponential / uniform / exponential-mark draws."""

    def __init__(self, rng):
        self.rng = rng
        self._fill()

    def _fill(self):
        self.e = self.rng.standard_exponential(_BATCH)
        self.u = self.rng.random(_BATCH)
        self.z = self.rng.standard_exponential(_BATCH)
        self.i = 0

    def next(self):
        if self.i == _BATCH:
            self._fill()
        i = self.i
        self.i += 1
        return self.e[i], self.u[i], self.z[i]


# ---------------------------------------------------------------------------
# Hawkes


def _hawkes_fields(params):
    if isinstance(params, HawkesForwardParams):
        return params.lambda0, params.alpha, params.beta, params.delta, params.jump_mass
    if isinstance(params, HawkesParams):
        return params.lambda0, params.alpha, params.beta, params.delta, 1.0
    raise ValidationError(f"unsupported Hawkes parameters {type(params).__name__}")


def simulate_hawkes(params, horizon, seed=None, *, marked=True, baseline="constant",
                    max_events=MAX_EVENTS, rng=None):
    """Ogata thinning simulation of an exponential-kernel Hawkes process on ``[0, horizon]``.

    Between events the intensity relaxes exponentially at rate ``beta``
    towards ``lambda0`` (``baseline="constant"``) or towards 0
    (``"decaying"``).  At an event it jumps by ``alpha * z`` (``marked``)
    or ``alpha``.  Events occur at rate ``jump_mass * lambda``; marks are
    ``Exp(delta)``.

    Parameters
    ----------
    params : HawkesForwardParams or HawkesParams
        ``delta`` is required when ``marked``.
    horizon : float
    seed : int, optional
    rng : numpy.random.Generator, optional
        Overrides ``seed``.

    Returns
    -------
    SimPath
        ``times`` are the event times, ``states`` the cumulative marks,
        ``intensity`` the intensity just after each event.

    Raises
    ------
    ExplosionError
        More than ``max_events`` events; the partial path is attached.
    """
    lam0, alpha, beta, delta, mass = _hawkes_fields(params)
    baseline = Baseline(baseline)
    if not horizon > 0:
        raise ValidationError(f"horizon must be > 0, got {horizon}")
    if delta is None and marked:
        raise ValidationError("a marked simulation needs delta")
    unstable = (beta - alpha * mass / delta <= 0) if marked else (beta - alpha * mass <= 0)
    if unstable and baseline is Baseline.CONSTANT:
        warnings.warn("Hawkes parameters violate the stability condition; the event count "
                      f"is capped at {max_events}", RuntimeWarning, stacklevel=2)
    rng = path_rng(seed) if rng is None else rng
    draws = _Draws(rng)
    mu = lam0 if baseline is Baseline.CONSTANT else 0.0
    inv_delta = 1.0 / delta if delta is not None else 1.0

    t, lam = 0.0, lam0
    times, marks, after = [], [], []
    n_cand = 0
    while True:
        bound = mass * lam  # intensity is non-increasing until the next event
        if not bound > 0:
            break
        e, u, z = draws.next()
        n_cand += 1
        t_new = t + e / bound
        if t_new > horizon:
            break
        lam = mu + (lam - mu) * math.exp(-beta * (t_new - t))
        t = t_new
        if u * bound <= mass * lam:
            mark = z * inv_delta
            lam += alpha * mark if marked else alpha
            times.append(t)
            marks.append(mark)
            after.append(lam)
            if len(times) > max_events:
                raise ExplosionError(f"more than {max_events} Hawkes events before t={t:.6g}",
                                     partial=_hawkes_path(times, marks, after, seed, n_cand))
    return _hawkes_path(times, marks, after, seed, n_cand)


def _hawkes_path(times, marks, after, seed, n_cand):
    t = np.asarray(times, dtype=float)
    z = np.asarray(marks, dtype=float)
    return SimPath(t, np.cumsum(z), np.asarray(after, dtype=float), np.column_stack([t, z]),
                   seed, {"n_events": int(t.size), "n_candidates": int(n_cand)})


def hawkes_intensity(path, params, t, *, baseline="constant"):
    """Intensity of a simulated Hawkes path at times ``t`` (left limits at events)."""
    lam0, _, beta, _, _ = _hawkes_fields(params)
    mu = lam0 if Baseline(baseline) is Baseline.CONSTANT else 0.0
    t = np.asarray(t, dtype=float)
    ev = path.times
    k = np.searchsorted(ev, t, side="left") - 1
    ref_t = np.where(k >= 0, ev[np.maximum(k, 0)] if ev.size else 0.0, 0.0)
    ref_lam = np.where(k >= 0, path.intensity[np.maximum(k, 0)] if ev.size else lam0, lam0)
    return mu + (ref_lam - mu) * np.exp(-beta * (t - ref_t))


def hawkes_integrated_intensity(path, params, grid, *, baseline="constant"):
    """``int_0^s lambda(u) du`` at each grid time ``s``."""
    lam0, _, beta, _, _ = _hawkes_fields(params)
    mu = lam0 if Baseline(baseline) is Baseline.CONSTANT else 0.0
    grid = np.asarray(grid, dtype=float)
    # baseline part: mu s + (lam0 - mu)(1 - e^{-beta s}) / beta
    out = mu * grid + (lam0 - mu) * -np.expm1(-beta * grid) / beta
    ev = path.times
    if ev.size == 0:
        return out
    # jump sizes in lambda at each event: lam(t_i+) - lam(t_i-)
    left = hawkes_intensity(path, params, ev, baseline=baseline)
    jumps = path.intensity - left
    step = max(1, int(4_000_000 // max(ev.size, 1)))
    for s in range(0, grid.size, step):
        g = grid[s:s + step, None]
        lag = g - ev[None, :]
        contrib = np.where(lag > 0, jumps[None, :] * -np.expm1(-beta * np.maximum(lag, 0.0)), 0.0)
        out[s:s + step] += contrib.sum(axis=1) / beta
    return out


def mean_count(params, horizon, *, marked=False, baseline="constant"):
    """Expected number of events on ``[0, horizon]`` starting from ``lambda(0) = lambda0``."""
    lam0, alpha, beta, delta, mass = _hawkes_fields(params)
    jump = alpha * mass * ((1.0 / delta) if marked else 1.0)
    kappa = beta - jump
    mu = lam0 if Baseline(baseline) is Baseline.CONSTANT else 0.0
    # E lambda(t) solves m' = beta mu - kappa m, m(0) = lam0
    if kappa == 0:
        integral = lam0 * horizon + 0.5 * beta * mu * horizon ** 2
    else:
        stat = beta * mu / kappa
        integral = stat * horizon + (lam0 - stat) * -math.expm1(-kappa * horizon) / kappa
    return mass * integral


def mean_intensity(params, t, *, marked=True, baseline="constant"):
    """``E[lambda(t)]`` from the first-moment ODE of the intensity."""
    lam0, alpha, beta, delta, mass = _hawkes_fields(params)
    jump = alpha * mass * ((1.0 / delta) if marked else 1.0)
    kappa = beta - jump
    mu = lam0 if Baseline(baseline) is Baseline.CONSTANT else 0.0
    t = np.asarray(t, dtype=float)
    if kappa == 0:
        return lam0 + beta * mu * t
    stat = beta * mu / kappa
    return stat + (lam0 - stat) * np.exp(-kappa * t)


# ---------------------------------------------------------------------------
# CBI


def _grid(horizon, dt):
    if not horizon > 0:
        raise ValidationError(f"horizon must be > 0, got {horizon}")
    if not dt > 0:
        raise ValidationError(f"dt must be > 0, got {dt}")
    n = max(1, int(round(horizon / dt)))
    if not math.isclose(n * dt, horizon, rel_tol=1e-9):
        raise ValidationError(f"horizon {horizon} is not a multiple of dt {dt}")
    return n, horizon / n


def simulate_cbi(params, horizon, dt=DEFAULT_DT, seed=None, *, n_paths=1, record_every=1,
                 rng=None):
    """Full-truncation Euler scheme for a CBI process with exponential jumps.

    ``Y_{k+1} = Y_k + a(b - Y_k+)dt + sigma sqrt(Y_k+ dt) xi_k + gamma sum z_j
    - gamma jump_mass Y_k+ / delta dt`` where the number of jumps in a step
    is Poisson with mean ``jump_mass Y_k+ dt`` (the coefficients are frozen
    over the step, so no thinning is needed) and ``z ~ Exp(delta)``.

    Parameters
    ----------
    params : CBIParams
    horizon, dt : float
        ``horizon`` must be a multiple of ``dt``.
    n_paths : int
        Paths are simulated jointly, vectorized.
    record_every : int
        Store every ``record_every``-th step (the final state is always kept).

    Returns
    -------
    SimPath
        ``states`` of shape ``(n_paths, n_recorded)``, holding ``max(Y, 0)``.
        ``diagnostics["truncation_fraction"]`` is the fraction of
        path-steps that ended below zero.
    """
    n, h = _grid(horizon, dt)
    if n_paths < 1:
        raise ValidationError("n_paths must be >= 1")
    rng = path_rng(seed) if rng is None else rng
    p = params
    rec = sorted(set(range(0, n + 1, max(1, int(record_every)))) | {n})
    rec_set = {k: i for i, k in enumerate(rec)}
    states = np.empty((n_paths, len(rec)))
    Y = np.full(n_paths, float(p.y0))
    states[:, 0] = Y
    comp = p.gamma * p.jump_mass / p.delta
    sqh = math.sqrt(h)
    truncated = 0
    for k in range(1, n + 1):
        Yp = np.maximum(Y, 0.0)
        xi = rng.standard_normal(n_paths)
        counts = rng.poisson(p.jump_mass * Yp * h)
        jumps = rng.gamma(counts, 1.0 / p.delta) if p.gamma > 0 else 0.0
        Y = Y + p.a * (p.b - Yp) * h + p.sigma * np.sqrt(Yp) * sqh * xi \
            + p.gamma * jumps - comp * Yp * h
        truncated += int(np.count_nonzero(Y < 0))
        if k in rec_set:
            states[:, rec_set[k]] = np.maximum(Y, 0.0)
    times = np.asarray(rec, dtype=float) * h
    return SimPath(times, states, seed=seed,
                   diagnostics={"truncation_fraction": truncated / (n * n_paths),
                                "n_steps": n, "dt": h})


def cbi_mean(params, t):
    """``E[Y(t)] = b + (y0 - b) e^{-a t}`` (the compensated martingale terms vanish)."""
    t = np.asarray(t, dtype=float)
    return params.b + (params.y0 - params.b) * np.exp(-params.a * t)


def branching_mechanism(q, params):
    """``Psi(q) = a q + sigma^2 q^2 / 2 + m (delta / (delta + q gamma) - 1 + q gamma / delta)``.

    The bracket is ``int (e^{-q gamma z} - 1 + q gamma z) delta e^{-delta z} dz``
    in closed form; ``m`` is the jump-measure mass.
    """
    p = params
    x = q * p.gamma / p.delta
    # delta/(delta+q gamma) - 1 + x = x^2 / (1 + x), stable for small x
    return p.a * q + 0.5 * p.sigma ** 2 * q * q + p.jump_mass * x * x / (1.0 + x)


def cbi_laplace(params, xi, theta=0.0, t=1.0, *, y0=None, rtol=LAPLACE_RTOL):
    """``E_y[exp(-xi Y(t) - theta int_0^t Y ds)]`` via the Riccati ODE.

    Solves ``v' = -Psi(v) + theta``, ``v(0) = xi`` together with ``int v ds``
    (adaptive Runge-Kutta) and returns ``exp(-y v(t) - a b int_0^t v ds)``.

    Raises
    ------
    NumericalError
        If the ODE solver fails.
    """
    if not (xi >= 0 and theta >= 0):
        raise DomainError("xi and theta must be >= 0")
    if not t >= 0:
        raise DomainError("t must be >= 0")
    y = params.y0 if y0 is None else float(y0)
    if t == 0:
        return math.exp(-y * xi)

    def rhs(_, s):
        return [-branching_mechanism(s[0], params) + theta, s[0]]

    sol = solve_ivp(rhs, (0.0, float(t)), [float(xi), 0.0], method="RK45", rtol=rtol,
                    atol=1e-12)
    if not sol.success:
        raise NumericalError(f"Riccati ODE solver failed: {sol.message}")
    v, iv = sol.y[0, -1], sol.y[1, -1]
    return math.exp(-y * v - params.a * params.b * iv)


# ---------------------------------------------------------------------------
# forward factors


def simulate_forward_factor(model, measure="P", horizon=1.0, dt=DEFAULT_DT, seed=None, *,
                            n_paths=1, record_every=1, marked=True, baseline="constant"):
    """Simulate a forward factor under the historical (``P``) or pricing (``Q``) measure.

    Under ``Q`` the drift (``a`` or ``c``) is set to zero.  A CBI model is
    simulated by :func:`simulate_cbi`.  A Hawkes model uses the Euler scheme
    ``X_{k+1} = X_k - c X_k+ dt + sigma sqrt(X_k+ dt) xi + sum z_j
    - (jump_mass / delta) int lambda ds`` with the jump times of
    :func:`simulate_hawkes` (path ``i`` uses stream ``i`` of ``seed``).

    Returns
    -------
    SimPath
        ``states`` as in :func:`simulate_cbi`; for a single Hawkes path the
        events and intensities are attached.
    """
    measure = Measure(measure)
    if isinstance(model, CBIParams):
        if measure is Measure.Q:
            model = replace(model, a=0.0)
        return simulate_cbi(model, horizon, dt, seed, n_paths=n_paths, record_every=record_every)
    if not isinstance(model, HawkesForwardParams):
        raise ValidationError(f"unsupported model {type(model).__name__}")
    if measure is Measure.Q:
        model = replace(model, c=0.0)
    n, h = _grid(horizon, dt)
    rec = sorted(set(range(0, n + 1, max(1, int(record_every)))) | {n})
    grid = np.arange(n + 1) * h
    states = np.empty((n_paths, len(rec)))
    truncated = 0
    comp = model.jump_mass / model.delta
    last = None
    for i in range(n_paths):
        rng = path_rng(seed, i)
        hp = simulate_hawkes(model, horizon, rng=rng, marked=marked, baseline=baseline)
        Lam = hawkes_integrated_intensity(hp, model, grid, baseline=baseline)
        # sum of marks falling in (t_{k-1}, t_k]
        k_of = np.clip(np.ceil(hp.times / h - 1e-12).astype(int), 1, n)
        jump_sum = np.bincount(k_of, weights=hp.events[:, 1], minlength=n + 1)
        xi = rng.standard_normal(n)
        X = np.empty(n + 1)
        X[0] = x = float(model.x0)
        sqh = math.sqrt(h)
        for k in range(1, n + 1):
            xp = x if x > 0 else 0.0
            x = x - model.c * xp * h + model.sigma * math.sqrt(xp) * sqh * xi[k - 1] \
                + jump_sum[k] - comp * (Lam[k] - Lam[k - 1])
            if x < 0:
                truncated += 1
            X[k] = x if x > 0 else 0.0
        states[i] = X[rec]
        last = hp
    diag = {"truncation_fraction": truncated / (n * n_paths), "n_steps": n, "dt": h}
    kw = {}
    if n_paths == 1:
        kw = {"intensity": last.intensity, "events": last.events}
    return SimPath(np.asarray(rec, dtype=float) * h, states, seed=seed, diagnostics=diag, **kw)


# ---------------------------------------------------------------------------
# measure changes


def tilt_integral(delta, theta, mass=1.0):
    """``int z (e^{-theta z} - 1) m delta e^{-delta z} dz = m (delta/(delta+theta)^2 - 1/delta)``.

    Evaluated as ``-m theta (2 delta + theta) / (delta (delta + theta)^2)``,
    which is exactly zero at ``theta = 0``.
    """
    if not theta > -delta:
        raise DomainError(f"theta must exceed -delta = {-delta}, got {theta}")
    return -mass * theta * (2.0 * delta + theta) / (delta * (delta + theta) ** 2)


def _tilted_jumps(delta, mass, theta):
    # e^{-theta z} m delta e^{-delta z} = m delta/(delta+theta) * Exp(delta+theta)
    return delta + theta, mass * delta / (delta + theta)


def change_measure_cbi(p, mc):
    """CBI parameters after the change of measure ``(eta, theta)``.

    ``a^Q = a - sigma eta - tilt_integral``, ``b^Q = a b / a^Q``; the jump
    measure is tilted to rate ``delta + theta`` with mass
    ``delta / (delta + theta)`` (times the current mass).  Note that the
    jump-size rate is unchanged only at ``theta = 0``.

    Raises
    ------
    DomainError
        ``theta <= -delta``, or ``a^Q = 0`` while ``a b != 0`` (the map is
        singular), or a non-admissible result.
    """
    integral = tilt_integral(p.delta, mc.theta, p.jump_mass)
    aq = p.a - p.sigma * mc.eta - integral
    ab = p.a * p.b
    if ab == 0:
        bq = 0.0 if aq != 0 else p.b
    elif aq == 0:
        raise DomainError("singular measure map: a^Q = 0 with a nonzero immigration term")
    else:
        bq = ab / aq
    delta_q, mass_q = _tilted_jumps(p.delta, p.jump_mass, mc.theta)
    try:
        return CBIParams(aq, bq, p.sigma, p.gamma, delta_q, p.y0, mass_q)
    except ValidationError as exc:
        raise DomainError(f"measure change leaves the CBI class: {exc}") from None


def change_measure_hawkes(p, mc):
    """Hawkes forward-factor parameters after the change of measure ``(eta, theta)``.

    ``c^Q = c - sigma eta - tilt_integral``; ``sigma``, ``alpha``, ``beta``
    and ``lambda0`` are unchanged; the jump measure is tilted as in
    :func:`change_measure_cbi`.
    """
    integral = tilt_integral(p.delta, mc.theta, p.jump_mass)
    cq = p.c - p.sigma * mc.eta - integral
    delta_q, mass_q = _tilted_jumps(p.delta, p.jump_mass, mc.theta)
    return HawkesForwardParams(cq, p.sigma, p.lambda0, p.alpha, p.beta, delta_q, p.x0, mass_q)


def inverse_change(p, mc):
    """The change of measure undoing ``mc`` applied to ``p`` (the pre-image parameters).

    After tilting by ``theta`` the rate is ``delta + theta``, so tilting by
    ``-theta`` returns to ``delta``.  The diffusion price ``-eta`` reverses
    the ``-sigma eta`` shift.
    """
    return MeasureChange(-mc.eta, -mc.theta)


# ---------------------------------------------------------------------------
# futures from forwards


def futures_from_forward(values, maturities, T1, T2):
    """``F(T1, T2) = 1/(T2 - T1) int_{T1}^{T2} f(x) dx`` on a discrete maturity grid.

    Trapezoid weights on the grid points inside ``[T1, T2]``.

    Parameters
    ----------
    values : array-like, shape (..., n_maturities)
        Forward values, one path per leading index.
    maturities : array-like, shape (n_maturities,)
        Strictly increasing maturity grid containing ``T1`` and ``T2``.

    Raises
    ------
    DomainError
        ``T1`` or ``T2`` is not a grid point (the grid does not cover the window).
    """
    x = np.asarray(maturities, dtype=float)
    f = np.asarray(values, dtype=float)
    if x.ndim != 1 or f.shape[-1] != x.size:
        raise ValidationError("values must have the maturity grid as last axis")
    if np.any(np.diff(x) <= 0):
        raise ValidationError("maturities must be strictly increasing")
    if not T1 < T2:
        raise DomainError(f"empty window [{T1}, {T2}]")
    i1, i2 = np.searchsorted(x, T1), np.searchsorted(x, T2)
    if i1 >= x.size or x[i1] != T1 or i2 >= x.size or x[i2] != T2:
        raise DomainError(f"maturity grid does not contain the window endpoints {T1}, {T2}")
    xs = x[i1:i2 + 1]
    d = np.diff(xs)
    w = np.zeros(xs.size)
    w[:-1] += 0.5 * d
    w[1:] += 0.5 * d
    return (f[..., i1:i2 + 1] @ w) / (T2 - T1)


def simulate_nhpp(intensity, bound, horizon, seed=None, *, rng=None):
    """Arrival times of an inhomogeneous Poisson process by thinning.

    Parameters
    ----------
    intensity : callable
        Vectorized ``lambda(t) <= bound`` on ``[0, horizon]``.
    bound : float
    horizon : float
    """
    if not bound > 0:
        raise ValidationError("bound must be positive")
    rng = path_rng(seed) if rng is None else rng
    n = rng.poisson(bound * horizon)
    t = np.sort(rng.uniform(0.0, horizon, n))
    u = rng.random(n)
    lam = np.asarray(intensity(t), dtype=float)
    if np.any(lam > bound * (1 + 1e-12)):
        raise DomainError("intensity exceeds the thinning bound")
    return t[u * bound < lam]
