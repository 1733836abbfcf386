import datetime as dt

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from powerfwd.curve_builder import (MaxSmoothnessCurve, QPSystem,
                                    SeasonalityEstimator, SeasonalityParams, assemble_H,
                                    assemble_constraints, build_curve, cascade_residual,
                                    curve_from_contracts, drop_redundant, eval_forward,
                                    fit_seasonality,
                                    reprice_future, seasonality_value, solve_curve, solve_kkt)
from powerfwd.exceptions import (AssemblyError, DomainError, InconsistentQuotesError,
                                 NumericalError, StructuralError, ValidationError)
from powerfwd.market_data import Contract, FuturesQuote, KnotGrid, split_overlaps
from powerfwd.synthetic import TrueCurve, quotes_for_date, synthetic_quotes

from oracles import nullspace_qp, random_instance, spline_second_derivative_sq

ZERO = SeasonalityParams(0.0, 0.0)


# ---------------------------------------------------------------------------
# seasonality

def test_seasonality_values():
    p = SeasonalityParams(13.6, 1358.038)
    assert seasonality_value(1358.038, p) == pytest.approx(13.6, abs=1e-12)
    assert abs(seasonality_value(1358.038 + 365 / 4, p)) <= 1e-12 * 13.6
    # independent scalar evaluation in 40-digit arithmetic
    import mpmath as mp
    mp.mp.dps = 40
    ref = mp.mpf("13.6") * mp.cos((200 - mp.mpf("1358.038")) * 2 * mp.pi / 365)
    assert seasonality_value(200.0, p) == pytest.approx(float(ref), rel=1e-13)


@given(st.floats(-2000, 2000), st.floats(0.5, 800), st.floats(0, 50), st.floats(0, 365))
def test_seasonality_mean_closed_form(u0, length, amp, phase):
    p = SeasonalityParams(amp, phase)
    u1 = u0 + length
    val, _ = quad(lambda u: seasonality_value(u, p), u0, u1, limit=200, epsabs=1e-12)
    assert float(p.mean(u0, u1)) == pytest.approx(val / length, abs=1e-9 * (1 + amp))


def test_fit_seasonality_single_quote():
    d = dt.date(2013, 12, 31)
    q = FuturesQuote(d, "M1", "monthly", "c1", dt.date(2014, 1, 1), dt.date(2014, 1, 31), 10.0)
    p = fit_seasonality([q])
    assert p.amp == 10.0 and p.phase == 0.0


def test_fit_seasonality_linear_scan(rng):
    quotes, _ = synthetic_quotes(40, seed=3)
    closes = [q.close for q in quotes]
    i = int(np.argmin(closes))
    last = max(q.obs_date for q in quotes)
    expected_phase = (dt.date(last.year, 12, 31) - quotes[i].obs_date).days * 252 / 365
    p = fit_seasonality(quotes)
    assert p.amp == min(closes)
    assert p.phase == pytest.approx(expected_phase, abs=1e-12)
    p = fit_seasonality(quotes, reference="last_date")
    assert p.phase == pytest.approx((last - quotes[i].obs_date).days * 252 / 365)


def test_fit_seasonality_empty():
    with pytest.raises(ValidationError):
        fit_seasonality([])


def test_reference_phase_is_a_whole_number_of_days():
    # 1358.038 trading-day units back to calendar days
    assert 1358.038 * 365 / 252 == pytest.approx(1967.0, abs=1e-3)


# ---------------------------------------------------------------------------
# H and constraints

def test_H_unit_block():
    H = assemble_H(KnotGrid(np.array([0.0, 1.0])))
    np.testing.assert_allclose(H[:3, :3], [[28.8, 18, 8], [18, 12, 6], [8, 6, 4]], rtol=1e-15)
    assert np.all(H[3:, :] == 0) and np.all(H[:, 3:] == 0)


@pytest.mark.parametrize("eps", [1e-3, 1e-6])
def test_H_vanishing_segment(eps):
    # global basis on [0, eps]: every entry carries at least one power of eps
    H = assemble_H(KnotGrid(np.array([0.0, eps])))
    assert np.max(np.abs(H)) < 10 * eps


@pytest.mark.parametrize("seed", range(10))
def test_H_quadratic_form_matches_quadrature(seed):
    rng = np.random.default_rng(seed)
    knots = np.sort(rng.choice(np.arange(0, 700), size=rng.integers(2, 8), replace=False)).astype(float)
    grid = KnotGrid(knots)
    x = rng.normal(size=5 * grid.n_segments) * np.tile([1e-8, 1e-6, 1e-3, 1e-1, 1.0], grid.n_segments)
    ref = spline_second_derivative_sq(knots, x.reshape(-1, 5))
    assert x @ assemble_H(grid) @ x == pytest.approx(ref, rel=1e-9)


def test_H_time_scale():
    grid = KnotGrid(np.array([0.0, 100.0, 250.0]))
    H1, H365 = assemble_H(grid), assemble_H(grid, 365.0)
    assert np.all(np.linalg.eigvalsh(H365) > -1e-12)
    np.testing.assert_allclose(H365, H365.T)
    assert H1.shape == H365.shape == (10, 10)


def test_constraint_counts():
    A, b = assemble_constraints(KnotGrid(np.array([0.0, 30.0])), [Contract(0, 30, 50.0)], ZERO)
    assert A.shape == (2, 5)
    knots = np.arange(25) * 30.0
    rng = np.random.default_rng(0)
    contracts = []
    for _ in range(16):
        i, j = np.sort(rng.choice(25, 2, replace=False))
        contracts.append(Contract(knots[i], knots[j], 40.0))
    A, b = assemble_constraints(KnotGrid(knots), contracts, ZERO)
    # 3 n + m - 2 rows for n = 24 segments, m = 16 contracts
    assert A.shape == (86, 120) and b.shape == (86,)


def test_constraint_off_grid():
    with pytest.raises(AssemblyError):
        assemble_constraints(KnotGrid(np.array([0.0, 30.0])), [Contract(0, 20, 50.0)], ZERO)


@pytest.mark.parametrize("scale", [1.0, 365.0])
def test_constraints_satisfied_by_global_quartic(scale):
    # one quartic on all segments is C^2; choose p'(T_n) = 0 and price it exactly
    rng = np.random.default_rng(7)
    windows, _ = random_instance(rng, n_contracts=6)
    grid = split_overlaps(windows)
    Tn = grid.knots[-1] / scale
    a, b_, c = rng.normal(size=3) * [1e-1, 1e-1, 1.0]
    d = -(4 * a * Tn ** 3 + 3 * b_ * Tn ** 2 + 2 * c * Tn)
    poly = np.array([a, b_, c, d, 40.0])
    seas = SeasonalityParams(7.0, 33.0)
    contracts = []
    for s, e in windows:
        P = np.polyint(poly)
        avg = (np.polyval(P, e / scale) - np.polyval(P, s / scale)) / ((e - s) / scale)
        contracts.append(Contract(s, e, avg + float(seas.mean(s, e))))
    A, bb = assemble_constraints(grid, contracts, seas, time_scale=scale)
    x = np.tile(poly, grid.n_segments)
    assert np.max(np.abs(A @ x - bb)) < 1e-9 * (1 + np.max(np.abs(bb)))


# ---------------------------------------------------------------------------
# solve

def test_single_flat_contract():
    curve = curve_from_contracts([Contract(0, 30, 50.0)], ZERO)
    u = np.linspace(0, 30, 31)
    np.testing.assert_allclose(curve(u), 50.0, rtol=1e-12)
    assert abs(curve.spline.objective) < 1e-18


def test_overlapping_pair_against_oracle():
    contracts = [Contract(1, 8, 45.0), Contract(4, 12, 52.0)]
    grid = split_overlaps(contracts)
    for scale in (1.0, 365.0):
        system = QPSystem.build(grid, contracts, ZERO, scale)
        sp = solve_curve(system)
        x = sp.scaled_coeffs.ravel()
        assert np.max(np.abs(system.A @ x - system.b)) < 1e-8
        xo = nullspace_qp(system.H, system.A, system.b)
        assert x @ system.H @ x == pytest.approx(xo @ system.H @ xo, rel=1e-6)


def test_null_space_perturbations_never_improve():
    rng = np.random.default_rng(11)
    knots = np.array([0.0, 20.0, 45.0, 70.0, 100.0, 160.0])
    contracts = [Contract(0, 45, 40.0), Contract(20, 100, 47.0), Contract(70, 160, 38.0)]
    grid = split_overlaps(contracts)
    assert np.array_equal(grid.knots, knots)
    system = QPSystem.build(grid, contracts, ZERO, 365.0)
    x = solve_curve(system).scaled_coeffs.ravel()
    import scipy.linalg
    N = scipy.linalg.null_space(system.A)
    f0 = x @ system.H @ x
    for _ in range(1000):
        y = x + N @ rng.normal(size=N.shape[1]) * 10 ** rng.uniform(-6, 0)
        assert y @ system.H @ y >= f0 - 1e-12 * max(1.0, f0)


def test_singular_system_raises():
    grid = KnotGrid(np.array([0.0, 10.0]))
    contracts = [Contract(0, 10, 40.0), Contract(0, 10, 41.0)]  # duplicate rows
    with pytest.raises(NumericalError):
        solve_curve(QPSystem.build(grid, contracts, ZERO, 365.0))


def test_condition_gate():
    grid = split_overlaps([(0, 30), (30, 60)])
    system = QPSystem.build(grid, [Contract(0, 30, 1.0), Contract(30, 60, 2.0)], ZERO, 365.0)
    with pytest.raises(NumericalError) as info:
        solve_kkt(system.H, system.A, system.b, max_condition=1.0)
    assert info.value.condition > 1.0


def _solved_curve(seed=5):
    rng = np.random.default_rng(seed)
    windows, prices = random_instance(rng, n_contracts=8)
    contracts = [Contract(s, e, p) for (s, e), p in zip(windows, prices)]
    return curve_from_contracts(contracts, SeasonalityParams(9.0, 100.0)), contracts


def test_curve_smoothness_invariants():
    curve, _ = _solved_curve()
    sp = curve.spline
    for j in range(1, sp.knot_grid.n_segments):
        T = sp.knots[j]
        for nu in range(3):
            left, right = sp.eval_segment(j - 1, T, nu), sp.eval_segment(j, T, nu)
            assert left == pytest.approx(right, rel=1e-8, abs=1e-8 * (1 + abs(left)))
    assert abs(sp(sp.knots[-1], nu=1)) < 1e-8
    lo, hi = curve.domain
    assert eval_forward(curve, hi) == pytest.approx(
        seasonality_value(hi, curve.seasonality) + sp(hi))


def test_eval_matches_horner_oracle(rng):
    curve, _ = _solved_curve()
    lo, hi = curve.domain
    u = rng.uniform(lo, hi, 100)
    coeffs = curve.spline.coeffs
    j = np.searchsorted(curve.spline.knots, u, side="right") - 1
    ref = np.array([np.polyval(coeffs[k], x) for k, x in zip(j, u)])
    ref += 9.0 * np.cos((u - 100.0) * 2 * np.pi / 365)
    np.testing.assert_allclose(eval_forward(curve, u), ref, rtol=1e-9)


def test_eval_outside_domain():
    curve, _ = _solved_curve()
    lo, hi = curve.domain
    with pytest.raises(DomainError):
        eval_forward(curve, hi + 1)
    with pytest.raises(DomainError):
        eval_forward(curve, lo - 0.5)


def test_reprice_inputs_and_quadrature(rng):
    curve, contracts = _solved_curve()
    for c in contracts:
        assert reprice_future(curve, c.start, c.end) == pytest.approx(c.price, rel=1e-6)
    lo, hi = curve.domain
    for _ in range(10):
        a, b = np.sort(rng.uniform(lo, hi, 2))
        val, _ = quad(lambda u: eval_forward(curve, u), a, b, limit=500, epsabs=0, epsrel=1e-12,
                      points=[k for k in curve.spline.knots if a < k < b][:400] or None)
        assert reprice_future(curve, a, b) == pytest.approx(val / (b - a), rel=1e-8)
    with pytest.raises(DomainError):
        reprice_future(curve, 10, 10)


def test_reprice_constant():
    curve = curve_from_contracts([Contract(0, 30, 40.0), Contract(30, 90, 40.0)], ZERO)
    for a, b in [(0, 30), (3.5, 77.2), (10, 11)]:
        assert reprice_future(curve, a, b) == pytest.approx(40.0, rel=1e-9)


def test_cascade_residual():
    assert cascade_residual(((0, 10), 50.0), [((0, 5), 40.0), ((5, 10), 60.0)]) == 0.0
    rng = np.random.default_rng(2)
    cuts = np.sort(rng.choice(np.arange(1, 100), 3, replace=False))
    edges = [0, *cuts.tolist(), 100]
    prices = rng.uniform(20, 60, 4)
    kids = [((a, b), p) for a, b, p in zip(edges, edges[1:], prices)]
    ref = 45.0 - sum((b - a) * p for (a, b), p in kids) / 100
    assert cascade_residual(((0, 100), 45.0), kids[::-1]) == pytest.approx(ref, abs=1e-12)
    curve, _ = _solved_curve()
    lo, hi = curve.domain
    a, m1, m2, b = np.linspace(lo, hi, 4)
    kids = [((x, y), curve.reprice(x, y)) for x, y in [(a, m1), (m1, m2), (m2, b)]]
    assert abs(cascade_residual(((a, b), curve.reprice(a, b)), kids)) < 1e-9
    with pytest.raises(StructuralError):
        cascade_residual(((0, 10), 1.0), [((0, 4), 1.0), ((5, 10), 1.0)])


# ---------------------------------------------------------------------------
# build_curve and estimators

def test_build_one_contract(obs_date):
    q = FuturesQuote(obs_date, "M1", "monthly", "c1", dt.date(2014, 2, 1), dt.date(2014, 2, 28), 42.0)
    seas = SeasonalityParams(5.0, 40.0)
    curve = build_curve([q], seas)
    assert curve.domain == (15.0, 43.0)
    assert curve.spline.mean(15, 43) == pytest.approx(42.0 - float(seas.mean(15, 43)), rel=1e-10)


def test_build_recovers_generating_curve(obs_date):
    # generator: the smoothest curve for some prices (via the oracle); its
    # quadrature-priced quotes must give back the same curve
    truth = TrueCurve(50.0, 6.0, 30.0, 4.0)
    quotes = quotes_for_date(obs_date, truth)
    seas = SeasonalityParams(6.0, 30.0)
    from powerfwd.market_data import resolve_rolling
    contracts = resolve_rolling(quotes, obs_date)
    grid = split_overlaps(contracts)
    system = QPSystem.build(grid, contracts, seas, 365.0, "global")
    x = nullspace_qp(system.H, system.A, system.b).reshape(-1, 5)
    coeffs = x / 365.0 ** np.array([4, 3, 2, 1, 0])

    def f_gen(u):
        j = min(int(np.searchsorted(grid.knots, u, side="right")) - 1, grid.n_segments - 1)
        return np.polyval(coeffs[j], u) + seasonality_value(u, seas)

    regen = []
    for q, c in zip(quotes, contracts):
        val, _ = quad(f_gen, c.start, c.end, limit=400, epsabs=0, epsrel=1e-13,
                      points=[k for k in grid.knots if c.start < k < c.end] or None)
        regen.append(FuturesQuote(q.obs_date, q.ticker, q.tenor, q.roll_slot, q.delivery_start,
                                  q.delivery_end, val / c.length))
    curve = build_curve(regen, seas)
    for k in grid.knots:
        assert eval_forward(curve, k) == pytest.approx(f_gen(k), abs=1e-4)


@pytest.mark.parametrize("seed", range(5))
def test_time_rescale_invariance(seed):
    rng = np.random.default_rng(100 + seed)
    windows, prices = random_instance(rng, n_contracts=int(rng.integers(2, 10)))
    contracts = [Contract(s, e, p) for (s, e), p in zip(windows, prices)]
    g = split_overlaps(contracts)
    if np.linalg.matrix_rank(QPSystem.build(g, contracts, ZERO, 365.0).A) < 3 * g.n_segments + len(contracts) - 2:
        pytest.skip("rank-deficient draw")
    days = curve_from_contracts(contracts, ZERO, time_scale=1.0)
    years = curve_from_contracts(contracts, ZERO, time_scale=365.0)
    lo, hi = days.domain
    u = np.linspace(lo, hi, 200)
    np.testing.assert_allclose(days(u), years(u), rtol=1e-6)
    assert days.spline.objective == pytest.approx(years.spline.objective, rel=1e-6)


# ---------------------------------------------------------------------------
# implied contracts

def test_drop_redundant_full_rank_untouched():
    cs = [Contract(0, 10, 5.0), Contract(5, 20, 6.0), Contract(30, 40, 7.0)]
    kept, dropped = drop_redundant(cs)
    assert kept == cs and dropped == []


def test_drop_redundant_parent_of_partition():
    kids = [Contract(7 * k, 7 * k + 7, 40.0 + k) for k in range(4)]
    parent = Contract(0, 28, float(np.mean([c.price for c in kids])))
    kept, dropped = drop_redundant([parent] + kids + [Contract(28, 59, 45.0)])
    assert dropped == [parent] and len(kept) == 5
    curve = curve_from_contracts([parent] + kids, ZERO)
    assert reprice_future(curve, 0, 28) == pytest.approx(parent.price, rel=1e-10)
    for c in kids:
        assert reprice_future(curve, c.start, c.end) == pytest.approx(c.price, rel=1e-10)


def test_drop_redundant_non_partition_combination():
    # [0,20) = [0,15) + [5,20) - [5,15): dependent without being a partition
    cs = [Contract(0, 15, 10.0), Contract(5, 20, 12.0), Contract(5, 15, 11.0)]
    implied = (15 * 10.0 + 15 * 12.0 - 10 * 11.0) / 20
    kept, dropped = drop_redundant(cs + [Contract(0, 20, implied)])
    assert [c.window for c in dropped] == [(0, 20)]
    with pytest.raises(InconsistentQuotesError):
        drop_redundant(cs + [Contract(0, 20, implied + 1e-3)])


def test_february_tiled_by_weeks():
    # Feb 2010 starts on a Monday and has 28 days: M1 = mean of W1..W4
    obs = dt.date(2010, 1, 25)
    quotes = quotes_for_date(obs, TrueCurve(50.0, 6.0, 30.0, 4.0))
    curve = build_curve(quotes, SeasonalityParams(6.0, 30.0))
    from powerfwd.market_data import resolve_rolling
    for c in resolve_rolling(quotes, obs):
        assert reprice_future(curve, c.start, c.end) == pytest.approx(c.price, rel=1e-9)
    assert len(curve.spline.knot_grid.contract_spans) == len(quotes) - 1


def test_quarters_tiling_next_year():
    obs = dt.date(2013, 11, 5)
    quotes = quotes_for_date(obs, TrueCurve(50.0, 6.0, 30.0, 4.0),
                             tenors=("weekly", "monthly", "quarterly", "yearly"))
    curve = build_curve(quotes, SeasonalityParams(6.0, 30.0), include_quarterly=True)
    y1 = next(q for q in quotes if q.ticker == "SYN-Y1")
    u0 = (y1.delivery_start - obs).days
    u1 = (y1.delivery_end - obs).days + 1
    assert reprice_future(curve, u0, u1) == pytest.approx(y1.close, rel=1e-9)


def test_estimators(obs_date):
    quotes = quotes_for_date(obs_date, TrueCurve(50.0, 6.0, 30.0, 4.0))
    seas = SeasonalityEstimator().fit(quotes)
    assert seas.params_.amp == min(q.close for q in quotes)
    assert SeasonalityEstimator(amp=3.0, phase=7.0).fit(quotes).params_ == SeasonalityParams(3.0, 7.0)
    model = MaxSmoothnessCurve(seasonality=seas.params_).fit(quotes)
    for q in quotes:
        s, e = q.window()
        assert model.reprice(s, e) == pytest.approx(q.close, rel=1e-6)
    assert model.get_params()["time_scale"] == 365.0
    assert model.residual_ < 1e-8
    np.testing.assert_allclose(model.predict([20.0, 30.0]), eval_forward(model.curve_, [20.0, 30.0]))
    generic = MaxSmoothnessCurve().fit([Contract(0, 30, 50.0)])
    assert generic.predict(10.0) == pytest.approx(50.0)
