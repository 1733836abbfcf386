import datetime as dt

import numpy as np
import pytest
from hypothesis import given, strategies as st

from powerfwd.curve_builder import (ForwardCurve, SeasonalityParams, SplineCurve,
                                    curve_from_contracts)
from powerfwd.exceptions import DomainError, InsufficientDataError
from powerfwd.jumps import JumpDetector, VerticalSection, detect_jumps, vertical_section
from powerfwd.market_data import Contract, KnotGrid

from oracles import planted_series

ZERO = SeasonalityParams(0.0, 0.0)


def flat_surface(n, level=50.0, start=dt.date(2010, 1, 4)):
    out = []
    for i in range(n):
        d = start + dt.timedelta(days=i)
        out.append(curve_from_contracts([Contract(0.0, 800.0, level)], ZERO, obs_date=d))
    return out


def poly_surface(rng, n, seasonality):
    # each date: one quartic on [0, 730] with known coefficients
    curves, coeffs = [], []
    for i in range(n):
        c = np.array([0.0, 0.0, rng.normal(0, 1e-5), rng.normal(0, 1e-2), 40.0 + rng.normal()])
        sp = SplineCurve(KnotGrid(np.array([0.0, 730.0])), c[None, :], 1.0,
                         dt.date(2010, 1, 4) + dt.timedelta(days=i))
        curves.append(ForwardCurve(seasonality, sp))
        coeffs.append(c)
    return curves, coeffs


# ---------------------------------------------------------------------------
# vertical sections

def test_flat_surface_section():
    sec = vertical_section(flat_surface(5), 200.0)
    np.testing.assert_allclose(sec.values, 50.0, rtol=1e-12)
    assert len(sec) == 5 and not sec.deseasonalized


def test_section_matches_grid_lookup(rng):
    seas = SeasonalityParams(5.0, 30.0)
    curves, coeffs = poly_surface(rng, 12, seas)
    for T in (0.0, 200.0, 455.5, 730.0):
        sec = vertical_section(curves, T)
        lam = 5.0 * np.cos(2 * np.pi * (T - 30.0) / 365.0)
        expect = [np.polyval(c, T) + lam for c in coeffs]
        np.testing.assert_allclose(sec.values, expect, rtol=1e-12)
        np.testing.assert_allclose(sec.deseasonalize().values, np.array(expect) - lam, rtol=1e-12)
        assert sec.seasonal_level == pytest.approx(lam, abs=1e-12)


def test_section_deseasonalized_flag(rng):
    curves, _ = poly_surface(rng, 4, SeasonalityParams(5.0, 30.0))
    a = vertical_section(curves, 100.0, deseasonalized=True)
    b = vertical_section(curves, 100.0).deseasonalize()
    assert a.deseasonalized and b.deseasonalized
    np.testing.assert_array_equal(a.values, b.values)
    assert a.deseasonalize() is a


def test_section_excludes_uncovered_dates():
    surf = flat_surface(4)
    short = curve_from_contracts([Contract(0.0, 100.0, 50.0)], ZERO, obs_date=dt.date(2011, 1, 1))
    sec = vertical_section({c.obs_date: c for c in surf + [short]}, 200.0)
    assert len(sec) == 4 and sec.excluded == (dt.date(2011, 1, 1),)


def test_section_too_few_dates():
    with pytest.raises(InsufficientDataError):
        vertical_section(flat_surface(2), 200.0)
    with pytest.raises(InsufficientDataError):
        vertical_section(flat_surface(5), 900.0)


# ---------------------------------------------------------------------------
# detector

def test_constant_series_no_jumps():
    js = detect_jumps(np.full(50, 40.0))
    assert js.counts == [] and js.indices.size == 0
    np.testing.assert_array_equal(js.sigmas, [0.0])


def test_denominators_by_hand():
    V = 10.0 + 0.3 * (np.arange(40) % 2)
    V[25:] += 8.0
    js = detect_jumps(V)
    inc = np.diff(V)
    sq = inc ** 2 / V[:-1]
    n = V.size
    s1 = np.sqrt(sq.sum() / (n - 2))
    assert js.sigmas[0] == pytest.approx(s1, rel=1e-14)
    stat = inc / np.sqrt(V[:-1])
    m1 = np.flatnonzero((inc > 0) & (stat >= 3 * s1))
    np.testing.assert_array_equal(js.jump_indices[0], m1)
    assert list(m1) == [24]
    keep = np.ones(n - 1, bool)
    keep[m1] = False
    s2 = np.sqrt(sq[keep].sum() / (n - m1.size - 1))
    assert js.sigmas[1] == pytest.approx(s2, rel=1e-14)


def test_negative_spike_never_flagged():
    V = np.full(200, 50.0) + 0.01 * np.sin(np.arange(200))
    V[100:] -= 20.0
    js = detect_jumps(V, max_iterations=None)
    assert js.indices.size == 0


def test_nonpositive_rejected():
    with pytest.raises(DomainError):
        detect_jumps(np.array([1.0, 0.0, 2.0]))
    with pytest.raises(DomainError):
        detect_jumps(VerticalSection(100.0, np.array([1.0, -1.0, 2.0]), deseasonalized=True))


def test_too_short():
    with pytest.raises(Exception):
        detect_jumps(np.array([1.0, 2.0]))


def test_max_iterations_none_converges(rng):
    V, _ = planted_series(rng)
    js = detect_jumps(V, max_iterations=None)
    last = js.sigmas[-1]
    stat = np.diff(V) / np.sqrt(V[:-1])
    remaining = np.ones(V.size - 1, bool)
    remaining[js.indices] = False
    assert not np.any(remaining & (np.diff(V) > 0) & (stat >= 3 * last))
    assert js.n_iterations >= 2


@pytest.mark.parametrize("seed", range(5))
def test_planted_jumps_found(seed):
    rng = np.random.default_rng(1000 + seed)
    V, idx = planted_series(rng)
    js = detect_jumps(V, 2)
    found = set(js.indices.tolist())
    assert len(found & set(idx.tolist())) >= 19
    assert np.all(js.sizes > 0)


@given(st.lists(st.floats(1.0, 100.0), min_size=3, max_size=80), st.integers(1, 6))
def test_detector_invariants(values, iters):
    V = np.asarray(values)
    js = detect_jumps(V, iters)
    assert np.all(np.diff(js.sigmas) <= 1e-12 * max(1.0, js.sigmas[0]))
    all_ix = np.concatenate(js.jump_indices) if js.jump_indices else np.zeros(0, int)
    assert all_ix.size == np.unique(all_ix).size
    assert np.all((all_ix >= 0) & (all_ix < V.size - 1))
    assert np.all(js.sizes > 0)
    again = detect_jumps(V.copy(), iters)
    assert again.counts == js.counts
    np.testing.assert_array_equal(again.sigmas, js.sigmas)
    assert js.n_iterations <= iters


def test_iteration_of(rng):
    V, _ = planted_series(rng)
    js = detect_jumps(V)
    it = js.iteration_of()
    assert set(it) == set(js.indices.tolist())
    assert set(it.values()) <= {1, 2}


def test_estimator_wrapper(rng):
    V, idx = planted_series(rng)
    det = JumpDetector().fit(V)
    assert det.get_params() == {"max_iterations": 2, "threshold": 3.0}
    mask = det.predict(V)
    assert mask.shape == (V.size - 1,)
    # sigmas are non-increasing, so the last iteration's hits clear the final threshold
    assert set(np.flatnonzero(mask)) >= set(det.jumps_.jump_indices[-1].tolist())
    assert det.sigma_ == det.jumps_.sigmas[-1]
