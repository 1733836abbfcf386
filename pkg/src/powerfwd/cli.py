"""Command-line front end: ``powerfwd {curve,analyze,simulate,report,synthesize}``.

Configuration is resolved as defaults < ``--config`` JSON < ``POWERFWD_*``
environment variables < command-line flags.  Every run writes
``manifest.json`` last; apart from ``timing.json`` all outputs are
byte-identical for identical inputs and configuration.
"""

import argparse
import csv
import dataclasses
import datetime as dt
import hashlib
import io
import json
import logging
import math
import os
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from . import gof
from .curve_builder import (DAYS_PER_YEAR, MAX_CONDITION, ForwardCurve, SeasonalityParams,
                            SplineCurve, build_curve, fit_seasonality)
from .dynamics import (CBIParams, HawkesForwardParams, cbi_laplace, cbi_mean,
                       mean_count, simulate_forward_factor, simulate_hawkes,
                       path_rng)
from .estimation import (HawkesParams, JumpSample, estimate_branching_gamma, estimate_delta,
                         estimate_mean_reversion, estimate_poisson, estimate_sigma, fit_hawkes)
from .exceptions import ExplosionError, PowerFwdError, ValidationError
from .jumps import detect_jumps, vertical_section
from .market_data import KnotGrid, group_by_date, read_quotes, write_quotes

log = logging.getLogger("powerfwd")

ENV_PREFIX = "POWERFWD_"
MODELS = ("poisson", "hawkes", "branching")
EXIT_OK, EXIT_PARTIAL, EXIT_USAGE = 0, 1, 2


@dataclass
class RunConfig:
    """Resolved run configuration (every field may be set from JSON, env or flags)."""

    input_path: Optional[str] = None
    output_dir: str = "powerfwd-out"
    curves_dir: Optional[str] = None
    maturities: tuple = (200, 400, 700)
    include_quarterly: bool = False
    strict_schedule: bool = True
    max_jump_iterations: int = 2
    seasonality_override: Optional[tuple] = None
    seasonality_reference: str = "year_end"
    seed: int = 0
    models: tuple = MODELS
    jobs: int = 1
    time_scale: float = DAYS_PER_YEAR
    max_condition: float = MAX_CONDITION
    write_curve_tables: bool = True
    basis: str = "local"
    scenario: Optional[dict] = None
    scenario_path: Optional[str] = None
    n_dates: int = 250

    def __post_init__(self):
        self.maturities = tuple(float(m) for m in self.maturities)
        if not self.maturities or any(not m > 0 for m in self.maturities):
            raise ValidationError(f"maturities must be positive, got {self.maturities}")
        self.models = tuple(str(m) for m in self.models)
        bad = set(self.models) - set(MODELS)
        if bad:
            raise ValidationError(f"unknown models {sorted(bad)}")
        if self.seasonality_override is not None:
            amp, phase = self.seasonality_override
            self.seasonality_override = (float(amp), float(phase))
        self.seed = int(self.seed)
        if not 0 <= self.seed < 2 ** 64:
            raise ValidationError("seed must be an unsigned 64-bit integer")
        self.jobs = max(1, int(self.jobs))

    def to_dict(self):
        d = dataclasses.asdict(self)
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        return d

    def digest(self):
        return hashlib.sha256(_canonical_json(self.to_dict()).encode()).hexdigest()


def _canonical_json(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=True)


def _env_value(raw):
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def load_config(path=None, env=None, **overrides):
    """Build a :class:`RunConfig` from a JSON file, the environment and explicit overrides."""
    env = os.environ if env is None else env
    names = {f.name for f in dataclasses.fields(RunConfig)}
    values = {}
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        unknown = set(data) - names
        if unknown:
            raise ValidationError(f"unknown config keys {sorted(unknown)}")
        values.update(data)
    for name in names:
        key = ENV_PREFIX + name.upper()
        if key in env:
            values[name] = _env_value(env[key])
    values.update({k: v for k, v in overrides.items() if v is not None})
    if "input_path" in values and isinstance(values["input_path"], (int, float)):
        values["input_path"] = str(values["input_path"])
    return RunConfig(**values)


# ---------------------------------------------------------------------------
# output helpers


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


class Outputs:
    """Tracks written files so the manifest can list their hashes."""

    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.files = []

    def path(self, rel):
        p = self.root / rel
        p.parent.mkdir(parents=True, exist_ok=True)
        return p

    def write_text(self, rel, text, track=True):
        p = self.path(rel)
        with open(p, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        if track:
            self.files.append(rel)
        return p

    def write_csv(self, rel, header, rows):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
        return self.write_text(rel, buf.getvalue())

    def write_json(self, rel, obj, track=True):
        return self.write_text(rel, json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n",
                               track=track)

    def manifest(self, command, config, failures):
        import numba
        import scipy
        import sklearn
        entries = []
        for rel in sorted(set(self.files)):
            h = hashlib.sha256(self.path(rel).read_bytes()).hexdigest()
            entries.append({"path": rel, "sha256": h})
        self.write_json("manifest.json", {
            "command": command,
            "config": config.to_dict(),
            "config_hash": config.digest(),
            "seed": config.seed,
            "versions": {"powerfwd": __version__, "python": sys.version.split()[0],
                         "numpy": np.__version__, "scipy": scipy.__version__,
                         "scikit-learn": sklearn.__version__, "numba": numba.__version__},
            "outputs": entries,
            "n_failures": len(failures),
        }, track=False)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, dt.date):
        return obj.isoformat()
    return obj


def _failure(item, exc, **extra):
    rec = {"item": item, "error": type(exc).__name__, "message": str(exc)}
    rec.update(extra)
    log.error("%s: %s: %s", item, type(exc).__name__, exc)
    return rec


# ---------------------------------------------------------------------------
# curve


def _build_one(args):
    date, quotes, seas, cfg = args
    try:
        curve = build_curve(quotes, seas, include_quarterly=cfg["include_quarterly"],
                            strict=cfg["strict"], time_scale=cfg["time_scale"],
                            max_condition=cfg["max_condition"], basis=cfg["basis"])
        return date, curve, None
    except PowerFwdError as exc:
        return date, None, exc


def _curve_csv(curve):
    tbl = curve.table()
    body = "".join("%d,%.12g,%.12g,%.12g\n" % (int(r[0]), r[1], r[2], r[3]) for r in tbl.tolist())
    return "u_days,forward,seasonality,adjustment\n" + body


def cmd_curve(config):
    """Build one forward curve per observation date of ``config.input_path``.

    Writes ``curves/<date>.csv`` (plot-ready table on integer days),
    ``curve_index.csv``, ``spline_coefficients.csv``, ``seasonality.json``,
    ``failures.json`` and ``manifest.json``.

    Returns
    -------
    int
        Exit code: 0 when every row and date succeeded.
    """
    if not config.input_path:
        raise ValidationError("curve needs input_path")
    t0 = time.perf_counter()
    out = Outputs(config.output_dir)
    failures = []

    def on_error(exc):
        failures.append(_failure("quotes", exc, line=getattr(exc, "line", None)))

    quotes = read_quotes(config.input_path, on_error=on_error)
    groups = group_by_date(quotes)
    if config.seasonality_override is not None:
        seas = SeasonalityParams(*config.seasonality_override)
    elif quotes:
        seas = fit_seasonality(quotes, reference=config.seasonality_reference)
    else:
        seas = SeasonalityParams(0.0, 0.0)
    out.write_json("seasonality.json", {"amp": seas.amp, "phase": seas.phase,
                                        "period": seas.period,
                                        "overridden": config.seasonality_override is not None})

    opts = {"include_quarterly": config.include_quarterly, "strict": config.strict_schedule,
            "time_scale": config.time_scale, "max_condition": config.max_condition,
            "basis": config.basis}
    tasks = [(d, qs, seas, opts) for d, qs in groups.items()]
    if config.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            results = list(pool.map(_build_one, tasks, chunksize=max(1, len(tasks) // (4 * config.jobs))))
    else:
        results = [_build_one(t) for t in tasks]

    index_rows, coef_rows = [], []
    for date, curve, exc in results:
        label = date.isoformat()
        fname = f"curves/{label}.csv"
        if exc is not None:
            failures.append(_failure(label, exc))
            index_rows.append([label, "", "", "", "", "", "", "", "", "failed"])
            continue
        sp = curve.spline
        lo, hi = sp.domain
        m = len(sp.knot_grid.contract_spans)
        index_rows.append([label, fname if config.write_curve_tables else "", lo, hi,
                           sp.knot_grid.n_segments, m, sp.objective, sp.residual_inf,
                           sp.condition, "ok"])
        for j, (a, b) in enumerate(sp.knot_grid.segments):
            coef_rows.append([label, j, a, b, sp.basis, sp.time_scale,
                              *sp.scaled_coeffs[j].tolist()])
        if config.write_curve_tables:
            out.write_text(fname, _curve_csv(curve))

    out.write_csv("curve_index.csv", ["obs_date", "file", "T0", "Tn", "n_segments",
                                      "m_contracts", "objective", "residual_inf", "condition",
                                      "status"], index_rows)
    out.write_csv("spline_coefficients.csv", ["obs_date", "segment", "t_start", "t_end",
                                              "basis", "time_scale", "c4", "c3", "c2", "c1",
                                              "c0"],
                  coef_rows)
    out.write_json("failures.json", failures)
    out.write_json("timing.json", {"wall_seconds": time.perf_counter() - t0,
                                   "n_dates": len(groups)}, track=False)
    out.manifest("curve", config, failures)
    log.info("built %d of %d curves", len(groups) - sum(r[2] is not None for r in results),
             len(groups))
    return EXIT_PARTIAL if failures else EXIT_OK


def load_surface(directory):
    """Rebuild ``{obs_date: ForwardCurve}`` from the files written by :func:`cmd_curve`."""
    d = Path(directory)
    with open(d / "seasonality.json", encoding="utf-8") as fh:
        s = json.load(fh)
    seas = SeasonalityParams(s["amp"], s["phase"], s.get("period", 365.0))
    diag = {}
    with open(d / "curve_index.csv", newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            if row["status"] == "ok":
                diag[row["obs_date"]] = row
    rows = {}
    with open(d / "spline_coefficients.csv", newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            rows.setdefault(row["obs_date"], []).append(row)
    surface = {}
    for label in sorted(rows):
        rs = sorted(rows[label], key=lambda r: int(r["segment"]))
        knots = [float(r["t_start"]) for r in rs] + [float(rs[-1]["t_end"])]
        coeffs = np.array([[float(r[k]) for k in ("c4", "c3", "c2", "c1", "c0")] for r in rs])
        info = diag.get(label, {})
        spline = SplineCurve(KnotGrid(np.array(knots)), coeffs, float(rs[0]["time_scale"]),
                             dt.date.fromisoformat(label),
                             float(info.get("objective") or "nan"),
                             float(info.get("residual_inf") or "nan"),
                             float(info.get("condition") or "nan"), rs[0]["basis"])
        surface[spline.obs_date] = ForwardCurve(seas, spline)
    return surface


# ---------------------------------------------------------------------------
# analyze


def analyze_section(section, *, models=MODELS, max_iterations=2):
    """Jump detection, estimation and KS tests for one vertical section.

    Returns
    -------
    dict
        ``jumps`` (JumpSet), ``estimates`` (dict), ``gof`` (list of dicts)
        and ``errors`` (list of (stage, exception)).
    """
    jumps = detect_jumps(section, max_iterations=max_iterations)
    sample = JumpSample.from_jumps(jumps)
    est = {"maturity_days": section.maturity, "n_dates": len(section), "n_jumps": sample.n,
           "sigmas": jumps.sigmas.tolist(), "status": "ok"}
    tests, errors = [], []
    if sample.n == 0:
        est["status"] = "skipped: no jumps detected"
        return {"jumps": jumps, "estimates": est, "gof": tests, "errors": errors}

    def attempt(stage, fn):
        try:
            return fn()
        except (PowerFwdError, ValueError, ArithmeticError) as exc:
            errors.append((stage, exc))
            est.setdefault("stage_errors", {})[stage] = f"{type(exc).__name__}: {exc}"
            return None

    delta = est["delta"] = attempt("delta", lambda: estimate_delta(sample.sizes))
    est["a_tilde"] = attempt("a_tilde", lambda: estimate_mean_reversion(section, jumps))
    est["sigma"] = attempt("sigma", lambda: estimate_sigma(jumps))
    rate = est["lambda_poisson"] = attempt("poisson", lambda: estimate_poisson(sample))
    hk = None
    if "hawkes" in models:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            fit = attempt("hawkes", lambda: fit_hawkes(sample))
        if fit is not None:
            hk = fit.params
            stable = None if delta is None else bool(hk.beta - hk.alpha / delta > 0)
            est["hawkes"] = {"lambda0": hk.lambda0, "alpha": hk.alpha, "beta": hk.beta,
                             "loglik": fit.loglik, "stable": stable,
                             "branching_ratio": hk.branching_ratio,
                             "poisson_loglik": fit.poisson_loglik, "degenerate": fit.degenerate}
    desea = section.deseasonalize()
    if "branching" in models:
        est["gamma_branching"] = attempt("branching",
                                         lambda: estimate_branching_gamma(sample, desea))

    def run_test(model, fn):
        res = attempt(f"gof_{model}", fn)
        if res is not None:
            tests.append({"model": model, "n": res.n, "statistic": res.statistic,
                          "p_value": res.p_value, "reject": res.reject(), "status": "ok"})
        else:
            tests.append({"model": model, "n": sample.n, "statistic": None, "p_value": None,
                          "reject": None, "status": "error"})

    if "poisson" in models and rate is not None:
        run_test("poisson", lambda: gof.test_poisson(sample, rate))
    if "hawkes" in models and hk is not None:
        run_test("hawkes", lambda: gof.test_hawkes(hk, sample))
    if "branching" in models:
        run_test("branching", lambda: gof.test_branching(desea, sample))
    return {"jumps": jumps, "estimates": est, "gof": tests, "errors": errors}


def _tag(T):
    return f"{int(T)}" if float(T).is_integer() else f"{T:g}"


def cmd_analyze(config):
    """Jump summaries, parameter estimates and KS tests for each configured maturity.

    Reads the outputs of :func:`cmd_curve` from ``curves_dir`` (default
    ``output_dir``) and writes ``sections.csv``, ``jumps.csv``,
    ``jump_summary.csv``, ``estimates/<T>.json``, ``gof.csv`` and
    ``failures.json``.
    """
    src = config.curves_dir or config.output_dir
    surface = load_surface(src)
    out = Outputs(config.output_dir)
    failures = []
    sec_rows, jump_rows, summary_rows, gof_rows = [], [], [], []
    n_iter = max(1, int(config.max_jump_iterations))
    for T in config.maturities:
        tag = _tag(T)
        try:
            section = vertical_section(surface, T)
            res = analyze_section(section, models=config.models,
                                  max_iterations=config.max_jump_iterations)
        except PowerFwdError as exc:
            failures.append(_failure(f"maturity {tag}", exc))
            continue
        desea = section.deseasonalize().values
        for d, v, x in zip(section.obs_dates, section.values.tolist(), desea.tolist()):
            sec_rows.append([tag, d.isoformat(), v, x])
        js = res["jumps"]
        it_of = js.iteration_of()
        for ix, size in zip(js.indices.tolist(), js.sizes.tolist()):
            jump_rows.append([tag, it_of[ix], ix, section.obs_dates[ix + 1].isoformat(), size])
        counts = (js.counts + [0] * n_iter)[:n_iter]
        summary_rows.append([tag, *counts, sum(js.counts)])
        for g in res["gof"]:
            gof_rows.append([tag, g["model"], g["statistic"], g["n"], g["p_value"],
                             "" if g["reject"] is None else int(g["reject"])])
        for stage, exc in res["errors"]:
            failures.append(_failure(f"maturity {tag} {stage}", exc))
        out.write_json(f"estimates/{tag}.json", res["estimates"])

    out.write_csv("sections.csv", ["maturity_days", "obs_date", "value", "deseasonalized"],
                  sec_rows)
    out.write_csv("jumps.csv", ["maturity_days", "iteration", "t_index", "obs_date", "size"],
                  jump_rows)
    out.write_csv("jump_summary.csv", ["maturity_days"]
                  + [f"iter{i + 1}_count" for i in range(n_iter)] + ["total"], summary_rows)
    out.write_csv("gof.csv", ["maturity_days", "model", "D_n", "n", "p_value",
                              "reject_at_5pct"], gof_rows)
    out.write_json("failures.json", failures)
    out.manifest("analyze", config, failures)
    return EXIT_PARTIAL if failures else EXIT_OK


# ---------------------------------------------------------------------------
# simulate


def _load_scenario(config):
    if config.scenario is not None:
        return dict(config.scenario)
    if config.scenario_path:
        with open(config.scenario_path, encoding="utf-8") as fh:
            return json.load(fh)
    raise ValidationError("simulate needs a scenario (scenario or scenario_path)")


def _rows_events(path_id, p):
    return [[path_id, t, z, lam] for (t, z), lam in zip(p.events.tolist(), p.intensity.tolist())]


def run_scenario(scn, seed):
    """Run a simulation scenario; returns ``(events_rows, path_rows, summary)``.

    Scenario keys: ``model`` (``hawkes``, ``cbi`` or ``hawkes_factor``),
    ``params``, ``measure`` (``P``/``Q``), ``horizon``, ``dt``, ``n_paths``,
    ``marked``, ``baseline``, ``laplace_xi``, ``write_paths``.
    """
    model = scn.get("model", "hawkes")
    params = dict(scn.get("params", {}))
    horizon = float(scn.get("horizon", 100.0))
    step = float(scn.get("dt", 0.1))
    n_paths = int(scn.get("n_paths", 1))
    measure = scn.get("measure", "P")
    write_paths = int(scn.get("write_paths", 100))
    ev_rows, path_rows = [], []
    summary = {"model": model, "measure": measure, "horizon": horizon, "n_paths": n_paths,
               "seed": seed, "exploded": False}

    if model == "hawkes":
        marked = bool(scn.get("marked", False))
        baseline = scn.get("baseline", "constant")
        hp = HawkesParams(params["lambda0"], params["alpha"], params["beta"], params.get("delta"))
        counts = []
        for i in range(n_paths):
            try:
                p = simulate_hawkes(hp, horizon, rng=path_rng(seed, i), marked=marked,
                                    baseline=baseline, max_events=int(scn.get("max_events", 10_000_000)))
            except ExplosionError as exc:
                summary["exploded"] = True
                summary["exploded_path"] = i
                if exc.partial is not None:
                    ev_rows.extend(_rows_events(i, exc.partial))
                raise _ScenarioExplosion(ev_rows, path_rows, summary, exc) from None
            counts.append(p.times.size)
            ev_rows.extend(_rows_events(i, p))
        c = np.asarray(counts, dtype=float)
        expected = mean_count(hp, horizon, marked=marked, baseline=baseline)
        summary.update({"mean_events": float(c.mean()), "expected_events": expected,
                        "event_rate": float(c.mean() / horizon),
                        "se_events": float(c.std(ddof=1) / math.sqrt(c.size)) if c.size > 1 else None})
        return ev_rows, path_rows, summary

    if model == "cbi":
        cp = CBIParams(**params)
        sim = simulate_forward_factor(cp, measure, horizon, step, seed, n_paths=n_paths,
                                      record_every=int(scn.get("record_every", 1)))
        for i in range(min(n_paths, write_paths)):
            path_rows.extend([i, t, y] for t, y in zip(sim.times.tolist(), sim.states[i].tolist()))
        final = sim.states[:, -1]
        use = cp if measure == "P" else dataclasses.replace(cp, a=0.0)
        xi = float(scn.get("laplace_xi", 0.5))
        mc = float(np.mean(np.exp(-xi * final)))
        ode = cbi_laplace(use, xi, 0.0, horizon)
        summary.update({
            "mean_final": float(final.mean()), "expected_final": float(cbi_mean(use, horizon)),
            "se_final": float(final.std(ddof=1) / math.sqrt(final.size)) if final.size > 1 else None,
            "laplace_xi": xi, "laplace_mc": mc, "laplace_ode": ode,
            "laplace_rel_error": abs(mc - ode) / ode,
            "truncation_fraction": sim.diagnostics["truncation_fraction"],
        })
        return ev_rows, path_rows, summary

    if model == "hawkes_factor":
        fp = HawkesForwardParams(**params)
        marked = bool(scn.get("marked", True))
        sim = simulate_forward_factor(fp, measure, horizon, step, seed, n_paths=n_paths,
                                      record_every=int(scn.get("record_every", 1)),
                                      marked=marked, baseline=scn.get("baseline", "constant"))
        for i in range(min(n_paths, write_paths)):
            path_rows.extend([i, t, y] for t, y in zip(sim.times.tolist(), sim.states[i].tolist()))
        if n_paths == 1:
            ev_rows.extend(_rows_events(0, sim))
        final = sim.states[:, -1]
        summary.update({
            "mean_final": float(final.mean()), "x0": fp.x0,
            "se_final": float(final.std(ddof=1) / math.sqrt(final.size)) if final.size > 1 else None,
            "truncation_fraction": sim.diagnostics["truncation_fraction"],
        })
        return ev_rows, path_rows, summary
    raise ValidationError(f"unknown scenario model {model!r}")


class _ScenarioExplosion(Exception):
    def __init__(self, ev_rows, path_rows, summary, cause):
        super().__init__(str(cause))
        self.ev_rows, self.path_rows, self.summary, self.cause = ev_rows, path_rows, summary, cause


def cmd_simulate(config):
    """Run the configured scenario; writes ``events.csv``, ``paths.csv`` and ``summary.json``."""
    scn = _load_scenario(config)
    seed = int(scn.get("seed", config.seed))
    out = Outputs(config.output_dir)
    failures = []
    try:
        ev_rows, path_rows, summary = run_scenario(scn, seed)
    except _ScenarioExplosion as exc:
        ev_rows, path_rows, summary = exc.ev_rows, exc.path_rows, exc.summary
        summary["partial"] = True
        failures.append(_failure("simulation", exc.cause))
    out.write_csv("events.csv", ["path_id", "event_time", "mark", "intensity_after"], ev_rows)
    out.write_csv("paths.csv", ["path_id", "t", "state"], path_rows)
    out.write_json("summary.json", {"scenario": scn, **summary})
    out.write_json("failures.json", failures)
    out.manifest("simulate", config, failures)
    return EXIT_PARTIAL if failures else EXIT_OK


# ---------------------------------------------------------------------------
# report / synthesize


def cmd_report(config):
    """Collect curve and analysis outputs of ``output_dir`` into ``report.md``."""
    root = Path(config.output_dir)
    lines = ["# powerfwd report", ""]
    idx = root / "curve_index.csv"
    if idx.exists():
        with open(idx, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        ok = [r for r in rows if r["status"] == "ok"]
        lines += ["## Curves", "", f"- dates: {len(rows)}", f"- solved: {len(ok)}"]
        if ok:
            res = max(float(r["residual_inf"]) for r in ok)
            lines.append(f"- max constraint residual: {res:.3e}")
        lines.append("")
    js = root / "jump_summary.csv"
    if js.exists():
        with open(js, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            cols = [c for c in reader.fieldnames if c != "maturity_days"]
            lines += ["## Jumps", "", "| T | " + " | ".join(cols) + " |",
                      "|---" * (len(cols) + 1) + "|"]
            for r in reader:
                lines.append(f"| {r['maturity_days']} | " + " | ".join(r[c] for c in cols) + " |")
        lines.append("")
    est_dir = root / "estimates"
    if est_dir.is_dir():
        lines += ["## Estimates", "",
                  "| T | jumps | delta | a_tilde | sigma | lambda_P | gamma | lambda0 | alpha | beta |",
                  "|---|---|---|---|---|---|---|---|---|---|"]
        for p in sorted(est_dir.glob("*.json"), key=lambda p: float(p.stem)):
            e = json.loads(p.read_text(encoding="utf-8"))
            hk = e.get("hawkes") or {}

            def f(v):
                return "" if v is None else f"{v:.4g}"
            lines.append(f"| {p.stem} | {e.get('n_jumps')} | {f(e.get('delta'))} "
                         f"| {f(e.get('a_tilde'))} | {f(e.get('sigma'))} "
                         f"| {f(e.get('lambda_poisson'))} | {f(e.get('gamma_branching'))} "
                         f"| {f(hk.get('lambda0'))} | {f(hk.get('alpha'))} | {f(hk.get('beta'))} |")
        lines.append("")
    g = root / "gof.csv"
    if g.exists():
        lines += ["## Kolmogorov-Smirnov", "", "| T | model | n | D_n | p-value |",
                  "|---|---|---|---|---|"]
        with open(g, newline="", encoding="utf-8") as fh:
            for r in csv.DictReader(fh):
                if r["p_value"]:
                    lines.append(f"| {r['maturity_days']} | {r['model']} | {r['n']} | "
                                 f"{float(r['D_n']):.4f} | {float(r['p_value']):.4g} |")
        lines.append("")
    out = Outputs(root)
    out.write_text("report.md", "\n".join(lines))
    out.manifest("report", config, [])
    return EXIT_OK


def cmd_synthesize(config):
    """Write a synthetic quote history of ``n_dates`` business days to ``input_path``."""
    from .synthetic import synthetic_quotes
    if not config.input_path:
        raise ValidationError("synthesize needs input_path (the CSV to create)")
    quotes, _ = synthetic_quotes(config.n_dates, seed=config.seed)
    p = Path(config.input_path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with open(p, "w", encoding="utf-8", newline="") as fh:
        write_quotes(quotes, fh)
    return EXIT_OK


COMMANDS = {"curve": cmd_curve, "analyze": cmd_analyze, "simulate": cmd_simulate,
            "report": cmd_report, "synthesize": cmd_synthesize}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration file")
    common.add_argument("--output", help="output directory")
    common.add_argument("--seed", type=int, help="RNG seed (unsigned 64-bit)")
    common.add_argument("--jobs", type=int, help="worker processes")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="powerfwd", description=__doc__.splitlines()[0],
                                     parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("curve", parents=[common], help="build forward curves from quotes")
    p.add_argument("input", nargs="?", help="quotes CSV")
    p.add_argument("--include-quarterly", action="store_true", default=None)
    p = sub.add_parser("analyze", parents=[common], help="jumps, estimates and KS tests")
    p.add_argument("--curves", help="directory written by 'curve' (default: --output)")
    p.add_argument("--maturities", type=lambda s: [float(x) for x in s.split(",")],
                   help="comma-separated day offsets")
    p = sub.add_parser("simulate", parents=[common], help="run a simulation scenario")
    p.add_argument("scenario", nargs="?", help="scenario JSON")
    sub.add_parser("report", parents=[common], help="summarize an output directory")
    p = sub.add_parser("synthesize", parents=[common], help="write synthetic quotes")
    p.add_argument("input", help="quotes CSV to create")
    p.add_argument("--n-dates", type=int)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = {"output_dir": args.output, "seed": args.seed, "jobs": args.jobs,
                 "input_path": getattr(args, "input", None),
                 "include_quarterly": getattr(args, "include_quarterly", None),
                 "curves_dir": getattr(args, "curves", None),
                 "maturities": getattr(args, "maturities", None),
                 "scenario_path": getattr(args, "scenario", None),
                 "n_dates": getattr(args, "n_dates", None)}
    try:
        config = load_config(args.config, **overrides)
        return COMMANDS[args.command](config)
    except (PowerFwdError, OSError, json.JSONDecodeError, TypeError) as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
