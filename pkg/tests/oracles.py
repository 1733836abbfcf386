"""Independent reference implementations used as test oracles."""

import math

import numpy as np
import scipy.linalg
from scipy.integrate import quad


def nullspace_qp(H, A, b, refine=3):
    """``min x'Hx s.t. Ax = b`` by a particular solution plus a null-space reduction.

    ``refine`` correction passes re-solve for the remaining feasibility
    residual and reduced gradient (the first solve loses digits when the
    particular solution is large).
    """
    N = scipy.linalg.null_space(A)
    M = N.T @ H @ N if N.shape[1] else None
    x = np.zeros(A.shape[1])
    for _ in range(1 + refine):
        d, *_ = np.linalg.lstsq(A, b - A @ x, rcond=None)
        x = x + d
        if M is not None:
            x = x + N @ np.linalg.lstsq(M, -N.T @ H @ x, rcond=None)[0]
    return x


def random_instance(rng, n_contracts=None, max_knots=30):
    """Random overlapping windows on an integer day grid (rank-deficient draws rejected upstream)."""
    m = int(rng.integers(1, 21)) if n_contracts is None else n_contracts
    pts = np.sort(rng.choice(np.arange(0, 800), size=min(max_knots, 2 * m), replace=False))
    windows = []
    for _ in range(m):
        i, j = np.sort(rng.choice(pts.size, size=2, replace=False))
        windows.append((int(pts[i]), int(pts[j])))
    prices = rng.uniform(20, 80, size=m)
    return windows, prices


def spline_second_derivative_sq(knots, coeffs):
    """``int (eps'')^2`` by adaptive quadrature, coefficients in day units."""
    total = 0.0
    for j in range(len(knots) - 1):
        c2 = np.polyder(coeffs[j], 2)
        val, _ = quad(lambda u: np.polyval(c2, u) ** 2, knots[j], knots[j + 1],
                      epsabs=0, epsrel=1e-13, limit=200)
        total += val
    return total


def hawkes_loglik_direct(lam0, alpha, beta, t, T=None):
    """O(N^2) double-sum log-likelihood of the unmarked exponential Hawkes process."""
    t = np.asarray(t, dtype=float)
    T = t[-1] if T is None else T
    ll = -lam0 * T
    for i in range(t.size):
        s = math.fsum(math.exp(-beta * (t[i] - t[j])) for j in range(i))
        ll += math.log(lam0 + alpha * s)
    ll += math.fsum(alpha / beta * (math.exp(-beta * (T - ti)) - 1.0) for ti in t)
    return ll


def hawkes_intensity_direct(lam0, alpha, beta, t, events):
    events = np.asarray(events)
    past = events[events < t]
    return lam0 + alpha * np.exp(-beta * (t - past)).sum()


def kolmogorov_sf_mp(x, terms=100):
    """``1 - K(x)`` with 100 terms in 50-digit arithmetic."""
    import mpmath as mp
    mp.mp.dps = 50
    x = mp.mpf(x)
    s = mp.fsum((-1) ** (k - 1) * mp.e ** (-2 * k * k * x * x) for k in range(1, terms + 1))
    return float(2 * s)


def hawkes_loglik_direct_vec(lam0, alpha, beta, t, T=None, block=512):
    """Vectorized O(N^2) double sum in row blocks, for samples too large for :func:`hawkes_loglik_direct`."""
    t = np.asarray(t, dtype=float)
    T = t[-1] if T is None else T
    logs = np.empty(t.size)
    for s in range(0, t.size, block):
        ti = t[s:s + block, None]
        d = ti - t[None, :s + block]
        K = np.where(d > 0, np.exp(-beta * np.where(d > 0, d, 0.0)), 0.0)
        logs[s:s + block] = np.log(lam0 + alpha * K.sum(axis=1))
    return -lam0 * T + math.fsum(logs) + alpha / beta * math.fsum(np.expm1(-beta * (T - t)))


def dense_sup(sample, cdf, n_grid=100_001):
    """Brute-force ``sup |S_n - F|`` on a grid plus each point and its left neighbour."""
    x = np.sort(np.asarray(sample))
    lo, hi = x[0] - 1.0, x[-1] + 1.0
    grid = np.concatenate([np.linspace(lo, hi, n_grid), x, np.nextafter(x, -np.inf)])
    S = np.searchsorted(x, grid, side="right") / x.size
    return float(np.max(np.abs(S - cdf(grid))))


def tilt_quad(delta, theta, mass=1.0):
    """Quadrature of ``int z (e^{-theta z} - 1) m delta e^{-delta z} dz``."""
    f = lambda z: z * (math.exp(-(theta + delta) * z) - math.exp(-delta * z)) * mass * delta
    val, _ = quad(f, 0.0, math.inf, epsabs=1e-14, epsrel=1e-13, limit=200)
    return val


def planted_series(rng, n=1000, n_jumps=20, sigma=0.2, kappa=0.01, level=50.0, size=5.0):
    """CIR-like series with upward shocks of ``size`` normalized sigmas."""
    idx = np.sort(rng.choice(np.arange(5, n - 1), n_jumps, replace=False))
    jump_at = np.zeros(n - 1, dtype=bool)
    jump_at[idx] = True
    V = np.empty(n)
    V[0] = level
    for t in range(n - 1):
        sq = np.sqrt(V[t])
        V[t + 1] = V[t] + kappa * (level - V[t]) + sigma * sq * rng.normal()
        if jump_at[t]:
            V[t + 1] += size * sigma * sq * (1.0 + rng.exponential(0.5))
    return V, idx
