"""Monte-Carlo experiment runner producing plot-ready tables.

Every experiment is a complete grid over (trial, sweep value, scheme).  A
scheme that raises is kept as an error row with ``feasible = False`` and NaN
rates, so no cell is ever missing.  Per-trial seeds come from the master seed
through ``SeedSequence(master, spawn_key=(trial,))``.  Apart from the
wall-time column the output is a pure function of the ``ExperimentSpec``.
"""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import baselines, beamforming, metaheuristics, twopa
from .cmt import coupling_coefficient, radiation_profile
from .errors import InvalidConfigError
from .metaheuristics import DEParams, InitMode, PSOParams
from .scenario import (
    PowerAndQoS,
    Regime,
    ScenarioConfig,
    UserLayout,
    default_scenario,
    dbm_to_watt,
    sample_user_layout,
)

EXPERIMENTS = (
    "leakage_sweep",
    "rate_vs_pmax_2pa",
    "rate_vs_users",
    "convergence_nl",
    "convergence_wl",
    "rate_vs_pmax_multipa",
    "rate_vs_antennas",
)

CSV_COLUMNS = (
    "experiment",
    "trial",
    "seed",
    "scheme",
    "sweep_var",
    "sweep_value",
    "sum_rate_bpshz",
    "rate_u1",
    "rate_u2",
    "feasible",
    "wall_time_s",
)
TRACE_COLUMNS = ("experiment", "trial", "seed", "scheme", "sweep_var", "sweep_value", "iteration", "f_gbest")
LEAKAGE_COLUMNS = ("experiment", "mu_unmatch", "delta_beta_rad_per_m", "eta_sq", "eta_sq_bound", "eta_sq_bound_tight")

DEFAULT_TRIALS = 20
DEFAULT_MULTI_PA = 12
PMAX_GRID_DBM = (15.0, 20.0, 25.0, 27.0, 30.0, 35.0)
DELTA_A_GRID = (0.0, 2.0, 4.0, 6.0, 8.0)
Y_OFFSET_GRID = (0.0, 2.0, 4.0)
ANTENNA_GRID = (4, 8, 12, 16)
PARTICLE_GRID = (20, 50, 100)
INERTIA_GRID = (0.7, 0.85, 1.0)
LEAKAGE_MU_GRID = (0.3, 0.5, 0.7, 1.0)
LEAKAGE_DBETA_GRID = tuple(float(v) for v in np.linspace(0.0, 1000.0, 201))
# spread sweep user pairs: a_2 = a_1 + delta_a, y_2 = y_1 + 1, both shifted laterally by the offset
USERS_Y1_RANGE = (3.0, 5.0)
USERS_Y_GAP = 1.0

SCHEMES_2PA = ("mm_nl", "mm_wl", "tdma", "miso_fd")
SCHEMES_MULTI = ("mm_nl", "mm_wl", "tdma", "miso_fd", "miso_hybrid", "de_zf")
SCHEMES_CONVERGENCE = ("pso_rand", "pso_topt")


def trial_seed(master_seed: int, trial: int) -> int:
    """Counter-based per-trial seed."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(trial),))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass
class ExperimentSpec:
    experiment: str
    trials: int = DEFAULT_TRIALS
    seed: int = 0
    overrides: dict = field(default_factory=dict)
    schemes: tuple[str, ...] | None = None
    sweep_values: tuple | None = None
    pa_count: int | None = None
    particles: int | None = None
    iterations: int | None = None
    init: str | None = None
    workers: int = 1
    base: ScenarioConfig | None = None

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise InvalidConfigError(f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}")
        if self.trials < 1:
            raise InvalidConfigError("trials must be at least 1")
        known = {f for f in ScenarioConfig.__dataclass_fields__}
        unknown = set(self.overrides) - known
        if unknown:
            raise InvalidConfigError(f"override keys not in ScenarioConfig: {sorted(unknown)}")
        if self.schemes is not None:
            self.schemes = tuple(self.schemes)

    def base_scenario(self) -> ScenarioConfig:
        base = self.base if self.base is not None else default_scenario()
        if not self.overrides:
            return base
        return ScenarioConfig.from_dict(_deep_merge(base.to_dict(), self.overrides))


@dataclass
class ExperimentRecord:
    experiment: str
    trial: int
    seed: int
    scheme: str
    sweep_var: str
    sweep_value: float
    sum_rate: float
    rates: tuple[float, float]
    feasible: bool
    wall_time: float = 0.0
    trace: list[float] = field(default_factory=list)
    error: str | None = None

    def sort_key(self):
        return (self.experiment, self.sweep_var, self.sweep_value, self.trial, self.scheme)

    def row(self) -> dict[str, Any]:
        return {
            "experiment": self.experiment,
            "trial": self.trial,
            "seed": self.seed,
            "scheme": self.scheme,
            "sweep_var": self.sweep_var,
            "sweep_value": self.sweep_value,
            "sum_rate_bpshz": self.sum_rate,
            "rate_u1": self.rates[0],
            "rate_u2": self.rates[1],
            "feasible": int(self.feasible),
            "wall_time_s": self.wall_time,
        }


@dataclass
class LeakageRecord:
    experiment: str
    mu_unmatch: float
    delta_beta: float
    eta_sq: float
    eta_sq_bound: float
    eta_sq_bound_tight: float

    def sort_key(self):
        return (self.experiment, self.mu_unmatch, self.delta_beta)

    def row(self) -> dict[str, Any]:
        return {
            "experiment": self.experiment,
            "mu_unmatch": self.mu_unmatch,
            "delta_beta_rad_per_m": self.delta_beta,
            "eta_sq": self.eta_sq,
            "eta_sq_bound": self.eta_sq_bound,
            "eta_sq_bound_tight": self.eta_sq_bound_tight,
        }


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    records: list
    metadata: dict

    @property
    def any_feasible(self) -> bool:
        return any(getattr(r, "feasible", True) for r in self.records)

    @property
    def all_errors(self) -> bool:
        return bool(self.records) and all(getattr(r, "error", None) for r in self.records)


def _deep_merge(base: dict, extra: dict) -> dict:
    out = dict(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _deep_merge(out[k], v)
        else:
            out[k] = v
    return out


def default_metadata() -> dict[str, Any]:
    """Every default chosen where the model leaves a value open."""
    return {
        "schema": list(CSV_COLUMNS),
        "trace_schema": list(TRACE_COLUMNS),
        "trials_default": DEFAULT_TRIALS,
        "seed_rule": "SeedSequence(master_seed, spawn_key=(trial,)).generate_state(1, uint64)",
        "twopa": {
            "grid_size": twopa.DEFAULT_GRID_SIZE,
            "newton_tol": twopa.DEFAULT_NEWTON_TOL,
            "newton_max_iters": twopa.DEFAULT_NEWTON_ITERS,
            "bisection_tol": twopa.DEFAULT_BISECTION_TOL,
            "delta": "2 * wavelength",
            "min_search_width_m": twopa.MIN_SEARCH_WIDTH,
            "rounding": "half away from zero",
        },
        "beamforming": {
            "zf_loading": f"{beamforming.LOADING_FACTOR} * tr(HH^H)/K when |det| < {beamforming.SINGULARITY_FACTOR} * (tr/K)^K",
            "wmmse": {"init": "equal-power MRT", "tol": 1e-6, "max_iters": 200},
            "mrt_power": "water-filling",
        },
        "pso": {
            "particles": 100,
            "iterations": 50,
            "max_velocity": 5.0,
            "cognitive": 1.4,
            "social": 1.2,
            "trust_radius": {m.value: r for m, r in metaheuristics.DEFAULT_TRUST_RADIUS.items()},
            "inertia": {m.value: r for m, r in metaheuristics.DEFAULT_INERTIA.items()},
            "initial_velocity": 0.0,
            "velocity_after_projection": "unchanged",
            "projection": "sort then isotonic regression on x_n - n*min_spacing, clipped to bounds",
        },
        "de": {"population": 100, "scale_factor": 0.5, "crossover_rate": 0.9, "strategy": "rand/1/bin"},
        "tdma": {"power_per_slot": "P_max", "time_share": baselines.TDMA_TIME_SHARE, "center_grid": "a_k + j*wavelength/8, |j|<=8"},
        "miso": {"element_spacing": "wavelength/2 from x=0", "hybrid_inner_iters": baselines.HYBRID_MAX_ITERS},
        "grids": {
            "pmax_dbm": list(PMAX_GRID_DBM),
            "delta_a_m": list(DELTA_A_GRID),
            "y_offset_m": list(Y_OFFSET_GRID),
            "antennas": list(ANTENNA_GRID),
            "particles": list(PARTICLE_GRID),
            "inertia": list(INERTIA_GRID),
            "leakage_mu": list(LEAKAGE_MU_GRID),
            "leakage_dbeta_rad_per_m": [LEAKAGE_DBETA_GRID[0], LEAKAGE_DBETA_GRID[-1], len(LEAKAGE_DBETA_GRID)],
        },
        "multi_pa_count": DEFAULT_MULTI_PA,
        "wl_two_pa_scheme": "PSO-ZF with TOInit around the two-PA optimum",
        "unmatched_field_selectivity_wl": 0.5,
    }


# --- leakage sweep -----------------------------------------------------------


def leakage_table(scenario: ScenarioConfig, mu_grid=LEAKAGE_MU_GRID, dbeta_grid=LEAKAGE_DBETA_GRID):
    """Unmatched ``|eta|^2`` of a PA whose spacing is set for a full single-PA group.

    The matched strength is read from the scenario's single-PA profile, the
    unmatched one is ``mu`` times it (equal decay and peak coupling per mode).
    """
    single = scenario.replace(regime=Regime.NON_LEAKAGE).with_pa_groups((1,) * len(scenario.modes))
    kappa_matched = float(radiation_profile(single).kappa[0, 0])
    L = scenario.geometry.coupling_length
    out = []
    for mu in mu_grid:
        kappa = mu * kappa_matched
        for db in dbeta_grid:
            eta = float(coupling_coefficient(kappa, db, L))
            out.append(
                LeakageRecord(
                    experiment="leakage_sweep",
                    mu_unmatch=float(mu),
                    delta_beta=float(db),
                    eta_sq=eta**2,
                    eta_sq_bound=kappa**2 / (1.0 + db**2 / 4.0),
                    eta_sq_bound_tight=kappa**2 / (kappa**2 + db**2 / 4.0) if kappa > 0 else 0.0,
                )
            )
    return out


# --- schemes -----------------------------------------------------------------


class _TrialContext:
    """Per-trial cache so schemes that share the two-PA optimum compute it once."""

    def __init__(self, spec: ExperimentSpec, seed: int):
        self.spec = spec
        self.seed = seed
        self._two_pa: dict = {}

    def two_pa_positions(self, scenario: ScenarioConfig):
        key = (scenario.users, scenario.power)
        if key not in self._two_pa:
            base = scenario.replace(regime=Regime.NON_LEAKAGE).with_pa_groups((1,) * len(scenario.modes))
            res = twopa.optimize_two_pa(base)
            self._two_pa[key] = res
        return self._two_pa[key]

    def pso_params(self, init, **extra) -> PSOParams:
        kw = {"seed": self.seed}
        if self.spec.particles is not None:
            kw["particle_count"] = self.spec.particles
        if self.spec.iterations is not None:
            kw["iterations"] = self.spec.iterations
        kw.update(extra)
        return PSOParams.for_init(init, **kw)

    def de_params(self, init) -> DEParams:
        mode = InitMode.parse(init)
        kw = {"seed": self.seed, "init": mode, "trust_radius": metaheuristics.DEFAULT_TRUST_RADIUS[mode]}
        if self.spec.particles is not None:
            kw["population"] = max(4, self.spec.particles)
        if self.spec.iterations is not None:
            kw["iterations"] = self.spec.iterations
        return DEParams(**kw)


def _nan_rates():
    return (math.nan, math.nan)


def _search_outcome(res):
    if not res.feasible:
        return math.nan, _nan_rates(), False, res.trace
    r = res.report.rates
    return res.report.sum_rate, (float(r[0]), float(r[1])), res.report.feasible, res.trace


def run_scheme(name: str, scenario: ScenarioConfig, ctx: _TrialContext, **options):
    """Run one scheme; returns ``(sum_rate, (rate_u1, rate_u2), feasible, trace)``."""
    nl = scenario.replace(regime=Regime.NON_LEAKAGE)
    wl = scenario.replace(regime=Regime.WEAK_LEAKAGE)
    init_nl = ctx.spec.init or InitMode.RAND.value
    init_wl = ctx.spec.init or InitMode.TOPT.value
    if name == "mm_nl":
        if scenario.pa_count == 2 and ctx.spec.init is None:
            res = ctx.two_pa_positions(nl)
            if not res.feasible:
                return math.nan, _nan_rates(), False, []
            r = res.report.rates
            return res.report.sum_rate, (float(r[0]), float(r[1])), res.report.feasible, []
        return _search_outcome(_pso(nl, ctx, init_nl))
    if name == "mm_wl":
        return _search_outcome(_pso(wl, ctx, init_wl))
    if name == "de_zf":
        two = _two_pa_or_none(nl, ctx, init_nl)
        return _search_outcome(metaheuristics.de_zf(nl, ctx.de_params(init_nl), ctx.spec.workers, two))
    if name in ("pso_rand", "pso_topt"):
        init = InitMode.RAND if name == "pso_rand" else InitMode.TOPT
        return _search_outcome(_pso(scenario, ctx, init, **options))
    if name == "tdma":
        b = baselines.tdma_single_mode(scenario, scenario.pa_count)
    elif name == "miso_fd":
        b = baselines.fixed_miso(scenario, 2, baselines.MisoMode.FULL_DIGITAL)
    elif name == "miso_hybrid":
        b = baselines.fixed_miso(scenario, max(2, scenario.pa_count), baselines.MisoMode.HYBRID)
    else:
        raise InvalidConfigError(f"unknown scheme {name!r}")
    return b.sum_rate, (float(b.rates[0]), float(b.rates[1])), b.feasible, []


def _two_pa_or_none(scenario, ctx, init):
    if InitMode.parse(init) is not InitMode.TOPT:
        return None
    res = ctx.two_pa_positions(scenario)
    return res.positions if res.feasible else None


def _pso(scenario, ctx, init, **extra):
    params = ctx.pso_params(init, **extra)
    two = _two_pa_or_none(scenario, ctx, init)
    return metaheuristics.pso_zf(scenario, params, ctx.spec.workers, two)


# --- sweeps ------------------------------------------------------------------


def _with_pmax(scenario: ScenarioConfig, dbm: float) -> ScenarioConfig:
    p = scenario.power
    return scenario.replace(power=PowerAndQoS(dbm_to_watt(dbm), p.noise_power, p.min_rate))


def _groups_for(count: int) -> tuple[int, int]:
    return (count - count // 2, count // 2)


def _users_for_spread(seed, delta_a, y_offset, bounds):
    rng = np.random.default_rng(seed)
    lo, hi = 3.0, bounds[1] - delta_a
    a1 = rng.uniform(lo, hi)
    y1 = rng.uniform(*USERS_Y1_RANGE)
    return UserLayout((a1, a1 + delta_a), (y1 + y_offset, y1 + USERS_Y_GAP + y_offset))


def _sweep_points(spec: ExperimentSpec, base: ScenarioConfig):
    """``(sweep_var, value, scenario_builder, scheme_options)`` per sweep point."""
    exp = spec.experiment
    multi = spec.pa_count or DEFAULT_MULTI_PA
    if exp == "rate_vs_pmax_2pa":
        vals = spec.sweep_values or PMAX_GRID_DBM
        return [("max_power_dbm", float(v), lambda users, v=v: _with_pmax(base.replace(users=users), v), {}) for v in vals]
    if exp == "rate_vs_pmax_multipa":
        vals = spec.sweep_values or PMAX_GRID_DBM
        sc = base.with_pa_groups(_groups_for(multi))
        return [("max_power_dbm", float(v), lambda users, v=v: _with_pmax(sc.replace(users=users), v), {}) for v in vals]
    if exp == "rate_vs_antennas":
        vals = spec.sweep_values or ANTENNA_GRID
        return [
            ("antennas", float(v), lambda users, v=v: base.with_pa_groups(_groups_for(int(v))).replace(users=users), {})
            for v in vals
        ]
    if exp == "rate_vs_users":
        pts = []
        offsets = Y_OFFSET_GRID
        vals = spec.sweep_values or DELTA_A_GRID
        for yo in offsets:
            for da in vals:
                pts.append((f"delta_a[y_offset={yo:g}]", float(da), None, {"delta_a": float(da), "y_offset": float(yo)}))
        return pts
    if exp == "convergence_nl":
        vals = spec.sweep_values or PARTICLE_GRID
        sc = base.with_pa_groups(_groups_for(multi)).replace(regime=Regime.NON_LEAKAGE)
        return [("particle_count", float(v), lambda users: sc.replace(users=users), {"particle_count": int(v)}) for v in vals]
    if exp == "convergence_wl":
        vals = spec.sweep_values or INERTIA_GRID
        sc = base.with_pa_groups(_groups_for(multi)).replace(regime=Regime.WEAK_LEAKAGE)
        return [("inertia", float(v), lambda users: sc.replace(users=users), {"inertia": float(v)}) for v in vals]
    raise InvalidConfigError(f"experiment {exp!r} has no sweep")


def default_schemes(exp: str):
    if exp in ("rate_vs_pmax_2pa", "rate_vs_users"):
        return SCHEMES_2PA
    if exp in ("convergence_nl", "convergence_wl"):
        return SCHEMES_CONVERGENCE
    return SCHEMES_MULTI


def _run_trial(spec: ExperimentSpec, base: ScenarioConfig, points, schemes, trial: int):
    seed = trial_seed(spec.seed, trial)
    ctx = _TrialContext(spec, seed)
    users = sample_user_layout(seed, a_bounds=(3.0, base.geometry.x_max))
    out = []
    for var, value, build, options in points:
        scheme_options = dict(options)
        scenario = None
        build_error = None
        try:
            if spec.experiment == "rate_vs_users":
                u = _users_for_spread(seed, scheme_options.pop("delta_a"), scheme_options.pop("y_offset"), base.geometry.position_bounds)
                scenario = base.replace(users=u)
            else:
                scenario = build(users)
        except Exception as exc:  # invalid sweep point: keep the cell as an error row
            build_error = f"{type(exc).__name__}: {exc}"
        for name in schemes:
            t0 = time.perf_counter()
            if build_error is not None:
                out.append(ExperimentRecord(spec.experiment, trial, seed, name, var, value, math.nan, _nan_rates(), False, 0.0, [], build_error))
                continue
            try:
                s, rates, ok, trace = run_scheme(name, scenario, ctx, **scheme_options)
                err = None
            except Exception as exc:
                s, rates, ok, trace, err = math.nan, _nan_rates(), False, [], f"{type(exc).__name__}: {exc}"
            out.append(
                ExperimentRecord(
                    spec.experiment, trial, seed, name, var, value, float(s), rates, bool(ok), time.perf_counter() - t0, list(trace), err
                )
            )
    return out


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    """Run every scheme at every sweep point for every trial."""
    base = spec.base_scenario()
    meta = default_metadata()
    meta.update(experiment=spec.experiment, trials=spec.trials, master_seed=spec.seed, overrides=spec.overrides)
    if spec.experiment == "leakage_sweep":
        dbeta = tuple(spec.sweep_values) if spec.sweep_values else LEAKAGE_DBETA_GRID
        records = leakage_table(base, LEAKAGE_MU_GRID, dbeta)
        meta["actual_delta_beta_21"] = float(abs(base.betas[0] - base.betas[1]))
        return ExperimentResult(spec, sorted(records, key=LeakageRecord.sort_key), meta)

    points = _sweep_points(spec, base)
    schemes = spec.schemes or default_schemes(spec.experiment)
    meta["schemes"] = list(schemes)
    trials = range(spec.trials)
    if spec.workers > 1:
        with ThreadPoolExecutor(max_workers=spec.workers) as pool:
            chunks = list(pool.map(lambda t: _run_trial(spec, base, points, schemes, t), trials))
    else:
        chunks = [_run_trial(spec, base, points, schemes, t) for t in trials]
    records = [r for chunk in chunks for r in chunk]
    records.sort(key=ExperimentRecord.sort_key)
    return ExperimentResult(spec, records, meta)


# --- output ------------------------------------------------------------------


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def trace_rows(records):
    for r in records:
        for i, f in enumerate(getattr(r, "trace", []) or []):
            yield {
                "experiment": r.experiment,
                "trial": r.trial,
                "seed": r.seed,
                "scheme": r.scheme,
                "sweep_var": r.sweep_var,
                "sweep_value": r.sweep_value,
                "iteration": i,
                "f_gbest": float(f),
            }


def trace_path_for(path) -> Path:
    p = Path(path)
    return p.with_name(p.stem + "_traces" + (p.suffix or ".csv"))


def emit_results(result: ExperimentResult, fmt: str = "csv", path=None, timing: bool = True):
    """Write the records table (and a long-format trace table) to ``path``.

    CSV writes the records to ``path`` and, when any scheme produced a trace,
    the traces to ``<stem>_traces.csv`` next to it.  JSON writes one document
    with ``metadata``, ``records`` and ``traces``.  Returns the written paths.
    """
    records = result.records
    if not records:
        raise ValueError("no records to emit")
    leakage = isinstance(records[0], LeakageRecord)
    columns = LEAKAGE_COLUMNS if leakage else CSV_COLUMNS
    rows = [r.row() for r in records]
    if not timing and not leakage:
        for row in rows:
            row["wall_time_s"] = 0.0
    traces = [] if leakage else list(trace_rows(records))
    errors = [
        {"trial": r.trial, "scheme": r.scheme, "sweep_value": r.sweep_value, "error": r.error}
        for r in records
        if getattr(r, "error", None)
    ]
    path = Path(path)
    written = [path]
    if fmt == "json":
        doc = {"metadata": dict(result.metadata, errors=errors), "records": rows, "traces": traces}
        path.write_text(json.dumps(doc, indent=1, allow_nan=True) + "\n")
        return written
    if fmt != "csv":
        raise ValueError(f"unknown format {fmt!r}")
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in columns])
    if traces:
        tpath = trace_path_for(path)
        with tpath.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TRACE_COLUMNS)
            for row in traces:
                w.writerow([_fmt(row[c]) for c in TRACE_COLUMNS])
        written.append(tpath)
    return written


def read_csv(path) -> list[dict[str, Any]]:
    """Parse an emitted records table back into typed rows."""
    out = []
    with Path(path).open(newline="") as fh:
        for row in csv.DictReader(fh):
            typed = {}
            for k, v in row.items():
                if k in ("experiment", "scheme", "sweep_var"):
                    typed[k] = v
                elif k in ("trial", "seed", "feasible"):
                    typed[k] = int(v)
                else:
                    typed[k] = float(v)
            out.append(typed)
    return out


def aggregate(rows, key=("scheme", "sweep_var", "sweep_value"), value="sum_rate_bpshz"):
    """Mean and normal-approximation 95% half-width per group (NaNs skipped)."""
    groups: dict = {}
    for row in rows:
        k = tuple(row[c] for c in key)
        groups.setdefault(k, []).append(row[value])
    out = {}
    for k, vals in sorted(groups.items()):
        v = np.asarray(vals, dtype=float)
        v = v[np.isfinite(v)]
        if v.size == 0:
            out[k] = (math.nan, math.nan, 0)
            continue
        half = 1.96 * v.std(ddof=1) / np.sqrt(v.size) if v.size > 1 else 0.0
        out[k] = (float(v.mean()), float(half), int(v.size))
    return out


def summarize(result: ExperimentResult) -> str:
    if result.records and isinstance(result.records[0], LeakageRecord):
        return f"{len(result.records)} leakage points"
    agg = aggregate([r.row() for r in result.records])
    lines = []
    for (scheme, var, val), (mean, half, n) in agg.items():
        lines.append(f"{var}={val:g}  {scheme:<12s} {mean:8.3f} +/- {half:.3f} bps/Hz  (n={n})")
    return "\n".join(lines)


__all__ = [
    "EXPERIMENTS",
    "ExperimentRecord",
    "ExperimentResult",
    "ExperimentSpec",
    "LeakageRecord",
    "aggregate",
    "default_metadata",
    "emit_results",
    "leakage_table",
    "read_csv",
    "run_experiment",
    "run_scheme",
    "summarize",
    "trial_seed",
]
