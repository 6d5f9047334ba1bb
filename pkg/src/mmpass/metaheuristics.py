"""Swarm (PSO-ZF) and differential-evolution (DE-ZF) search over PA positions.

Both optimizers score a layout by the ZF sum rate of its effective channel
and share one feasibility pipeline: projection onto the spacing/bounds set
``X``, clamping to the trust box around the initial layout, and projection
again.  Random draws come from a generator keyed on ``(seed, stage,
iteration, member)`` so the outcome does not depend on evaluation order or
on how fitness evaluations are split across workers.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.optimize import isotonic_regression

from .beamforming import Beamformer, RateReport, compute_sinr, normalize_power, rate_report, zf_directions, zf_precoder
from .channel import effective_channel, effective_channel_batch
from .cmt import RadiationProfile, radiation_profile
from .scenario import ScenarioConfig

_STAGE_INIT, _STAGE_PSO, _STAGE_DE = 0, 1, 2


class InitMode(str, Enum):
    RAND = "rand"
    TOPT = "topt"

    @classmethod
    def parse(cls, value) -> "InitMode":
        if isinstance(value, cls):
            return value
        v = str(value).strip().lower()
        aliases = {"randinit": "rand", "toinit": "topt", "twopaoptimum": "topt"}
        return cls(aliases.get(v, v))


DEFAULT_TRUST_RADIUS = {InitMode.RAND: 2.0, InitMode.TOPT: 0.5}
DEFAULT_INERTIA = {InitMode.RAND: 0.85, InitMode.TOPT: 1.0}


def rng_for(seed, *keys) -> np.random.Generator:
    """Independent generator for one (stage, iteration, member) cell of a run."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys)))


@dataclass(frozen=True)
class PSOParams:
    particle_count: int = 100
    iterations: int = 50
    inertia: float = 0.85
    cognitive: float = 1.4
    social: float = 1.2
    max_velocity: float = 5.0
    trust_radius: float = 2.0
    seed: int = 0
    init: InitMode = InitMode.RAND

    def __post_init__(self):
        object.__setattr__(self, "init", InitMode.parse(self.init))
        if self.particle_count < 1 or self.iterations < 1:
            raise ValueError("particle_count and iterations must be at least 1")
        if not self.max_velocity > 0 or self.inertia < 0 or self.trust_radius < 0:
            raise ValueError("need max_velocity > 0, inertia >= 0 and trust_radius >= 0")

    @classmethod
    def for_init(cls, init, **overrides) -> "PSOParams":
        """Defaults tuned per initialization (trust radius and inertia)."""
        mode = InitMode.parse(init)
        kw = {"init": mode, "trust_radius": DEFAULT_TRUST_RADIUS[mode], "inertia": DEFAULT_INERTIA[mode]}
        kw.update(overrides)
        return cls(**kw)


@dataclass(frozen=True)
class DEParams:
    population: int = 100
    iterations: int = 50
    scale_factor: float = 0.5
    crossover_rate: float = 0.9
    trust_radius: float = 2.0
    seed: int = 0
    init: InitMode = InitMode.RAND

    def __post_init__(self):
        object.__setattr__(self, "init", InitMode.parse(self.init))
        if self.population < 4:
            raise ValueError("rand/1/bin needs a population of at least 4")
        if self.iterations < 1:
            raise ValueError("iterations must be at least 1")
        if not 0.0 <= self.crossover_rate <= 1.0:
            raise ValueError("crossover_rate must lie in [0, 1]")


@dataclass
class SwarmState:
    positions: np.ndarray
    velocities: np.ndarray
    pbest: np.ndarray
    pbest_fitness: np.ndarray
    gbest: np.ndarray
    gbest_fitness: float
    iteration: int = 0


# --- feasibility -------------------------------------------------------------


def project_feasible(x, min_spacing, lower, upper):
    """Euclidean projection of sorted layouts onto ``x_{n+1} - x_n >= min_spacing``, ``lower <= x <= upper``.

    Works row-wise on ``(..., N)`` arrays.  Coordinates are sorted, shifted by
    the ladder ``n * min_spacing``, fitted by isotonic regression and clipped,
    which is the exact projection onto the ordered set and is idempotent.
    """
    x = np.sort(np.asarray(x, dtype=float), axis=-1)
    n = x.shape[-1]
    ladder = np.arange(n) * min_spacing
    y = (x - ladder).reshape(-1, n)
    fitted = np.empty_like(y)
    for i, row in enumerate(y):
        fitted[i] = isotonic_regression(row, increasing=True).x
    hi = upper - (n - 1) * min_spacing
    fitted = np.clip(fitted, lower, hi)
    return (fitted + ladder).reshape(x.shape)


def clamp_trust_region(x, center, radius):
    return np.clip(x, center - radius, center + radius)


def feasible_step(x, scenario: ScenarioConfig, center, radius):
    """``Pi_X``, trust-box clamp, ``Pi_X`` again."""
    geo = scenario.geometry
    x = project_feasible(x, geo.min_spacing, geo.x_min, geo.x_max)
    x = clamp_trust_region(x, center, radius)
    return project_feasible(x, geo.min_spacing, geo.x_min, geo.x_max)


# --- initialization ----------------------------------------------------------


def cluster_layout(centers, group_sizes, min_spacing):
    """PAs of group ``m`` packed at ``min_spacing`` and centred on ``centers[m]``."""
    parts = []
    for c, size in zip(centers, group_sizes):
        parts.append(c + (np.arange(size) - (size - 1) / 2.0) * min_spacing)
    return np.concatenate(parts)


def initial_layout(mode, scenario: ScenarioConfig, seed, two_pa_positions=None):
    """Reference layout ``x0`` and a metadata dict.

    ``topt`` clusters the groups around the two-PA optimum (computed here when
    not supplied); when no interference-free pair exists it falls back to a
    random layout and says so in the metadata.
    """
    mode = InitMode.parse(mode)
    geo = scenario.geometry
    meta = {"init": mode.value, "shifted_inward": False, "fallback": None}
    if mode is InitMode.TOPT:
        if two_pa_positions is None:
            from .twopa import optimize_two_pa

            base = scenario.with_pa_groups((1,) * len(scenario.group_sizes))
            res = optimize_two_pa(base)
            two_pa_positions = res.positions if res.feasible else None
        if two_pa_positions is not None:
            raw = cluster_layout(two_pa_positions, scenario.group_sizes, geo.min_spacing)
            x0 = project_feasible(raw, geo.min_spacing, geo.x_min, geo.x_max)
            meta["shifted_inward"] = bool(np.max(np.abs(x0 - raw)) > 1e-12)
            meta["two_pa_positions"] = [float(v) for v in two_pa_positions]
            return x0, meta
        meta["fallback"] = "rand"
    rng = rng_for(seed, _STAGE_INIT)
    raw = rng.uniform(geo.x_min, geo.x_max, scenario.pa_count)
    return project_feasible(raw, geo.min_spacing, geo.x_min, geo.x_max), meta


def init_positions(mode, scenario: ScenarioConfig, radius, count, seed, two_pa_positions=None):
    """Initial swarm: member 0 sits at ``x0``, the rest are uniform within ``radius`` of it.

    Returns ``(positions (count, N), x0, metadata)``.
    """
    x0, meta = initial_layout(mode, scenario, seed, two_pa_positions)
    rng = rng_for(seed, _STAGE_INIT, 1)
    jitter = rng.uniform(-radius, radius, (count, scenario.pa_count))
    jitter[0] = 0.0
    positions = feasible_step(x0 + jitter, scenario, x0, radius)
    positions[0] = x0
    return positions, x0, meta


# --- fitness -----------------------------------------------------------------


@dataclass
class FitnessBatch:
    values: np.ndarray
    sinr: np.ndarray
    violation: np.ndarray
    tags: np.ndarray


def _fitness_chunk(scenario, profile, positions):
    P, sigma2 = scenario.power.max_power, scenario.power.noise_power
    H_eff, _, _, _ = effective_channel_batch(scenario, positions, profile)
    with np.errstate(all="ignore"):
        W_zf, _ = zf_directions(H_eff)
        W = normalize_power(W_zf, P)
        sinr = compute_sinr(H_eff, W, sigma2)
    return sinr


def fitness_batch(scenario: ScenarioConfig, positions, profile: RadiationProfile | None = None, workers: int = 1):
    """ZF sum rate of every layout in ``positions`` (shape ``(P, N)``).

    Layouts missing the SINR requirement score ``-inf`` (tag ``"sinr"``);
    layouts whose channel or precoder is not finite score ``-inf`` (tag
    ``"channel"``).  ``violation`` is the SINR shortfall, 0 when feasible.
    """
    if profile is None:
        profile = radiation_profile(scenario)
    positions = np.atleast_2d(np.asarray(positions, dtype=float))
    if workers > 1 and len(positions) > 1:
        chunks = np.array_split(positions, min(workers, len(positions)))
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda c: _fitness_chunk(scenario, profile, c), chunks))
        sinr = np.concatenate(parts)
    else:
        sinr = _fitness_chunk(scenario, profile, positions)
    min_sinr = scenario.power.min_sinr
    broken = ~np.all(np.isfinite(sinr), axis=-1)
    with np.errstate(invalid="ignore"):
        shortfall = np.where(broken, np.inf, np.maximum(min_sinr - np.min(sinr, axis=-1), 0.0))
        rates = np.sum(np.log2(1.0 + sinr), axis=-1)
    ok = ~broken & np.all(sinr >= min_sinr, axis=-1)
    values = np.where(ok, rates, -np.inf)
    tags = np.where(broken, "channel", np.where(ok, "", "sinr"))
    return FitnessBatch(values=values, sinr=sinr, violation=shortfall, tags=tags)


def fitness(x, scenario: ScenarioConfig, profile: RadiationProfile | None = None) -> float:
    return float(fitness_batch(scenario, np.asarray(x, dtype=float)[None, :], profile).values[0])


# --- PSO ---------------------------------------------------------------------


def velocity_update(state: SwarmState, params: PSOParams, r1, r2):
    v = (
        params.inertia * state.velocities
        + params.cognitive * r1 * (state.pbest - state.positions)
        + params.social * r2 * (state.gbest - state.positions)
    )
    return np.clip(v, -params.max_velocity, params.max_velocity)


def position_step(positions, velocities, scenario: ScenarioConfig, center, radius):
    return feasible_step(positions + velocities, scenario, center, radius)


@dataclass
class SearchResult:
    positions: np.ndarray
    fitness: float
    beamformer: Beamformer | None
    report: RateReport | None
    trace: list[float]
    feasible: bool
    x0: np.ndarray
    evaluations: int
    diagnostics: dict = field(default_factory=dict)

    @property
    def sum_rate(self) -> float:
        return self.report.sum_rate if self.report is not None and self.feasible else float("-inf")


def _finish(scenario, best_x, best_f, trace, x0, evaluations, best_violation, meta) -> SearchResult:
    feasible = bool(np.isfinite(best_f))
    bf = report = None
    if feasible:
        channel = effective_channel(scenario, best_x)
        bf = zf_precoder(channel.H_eff, scenario.power.max_power)
        report = rate_report(channel.H_eff, bf.W, scenario.power.noise_power, scenario.power.min_sinr)
    diag = dict(meta)
    if not feasible:
        diag["best_sinr_shortfall"] = float(best_violation)
    return SearchResult(
        positions=np.asarray(best_x, dtype=float),
        fitness=float(best_f),
        beamformer=bf,
        report=report,
        trace=[float(v) for v in trace],
        feasible=feasible,
        x0=x0,
        evaluations=evaluations,
        diagnostics=diag,
    )


def pso_zf(scenario: ScenarioConfig, params: PSOParams | None = None, workers: int = 1, two_pa_positions=None) -> SearchResult:
    """Particle-swarm search of PA positions scored by the ZF sum rate.

    Each iteration evaluates the swarm, refreshes personal and global bests
    (ties keep the lowest particle index), records ``f_gbest`` and moves the
    particles.  Velocities are not modified by the projection.
    """
    params = params or PSOParams()
    profile = radiation_profile(scenario)
    n_p, N = params.particle_count, scenario.pa_count
    positions, x0, meta = init_positions(params.init, scenario, params.trust_radius, n_p, params.seed, two_pa_positions)
    state = SwarmState(
        positions=positions,
        velocities=np.zeros((n_p, N)),
        pbest=positions.copy(),
        pbest_fitness=np.full(n_p, -np.inf),
        gbest=positions[0].copy(),
        gbest_fitness=-np.inf,
    )
    best_violation = np.inf
    trace = []
    for t in range(params.iterations):
        fit = fitness_batch(scenario, state.positions, profile, workers)
        best_violation = min(best_violation, float(np.min(fit.violation)))
        improved = fit.values > state.pbest_fitness
        state.pbest[improved] = state.positions[improved]
        state.pbest_fitness[improved] = fit.values[improved]
        leader = int(np.argmax(state.pbest_fitness))
        if state.pbest_fitness[leader] > state.gbest_fitness or t == 0:
            state.gbest = state.pbest[leader].copy()
            state.gbest_fitness = float(state.pbest_fitness[leader])
        trace.append(state.gbest_fitness)
        state.iteration = t + 1
        if t == params.iterations - 1:
            break
        draws = [rng_for(params.seed, _STAGE_PSO, t, p).random((2, N)) for p in range(n_p)]
        r = np.stack(draws)
        state.velocities = velocity_update(state, params, r[:, 0], r[:, 1])
        state.positions = position_step(state.positions, state.velocities, scenario, x0, params.trust_radius)
    meta.update(trust_radius=params.trust_radius, inertia=params.inertia, velocity_after_projection="unchanged")
    return _finish(scenario, state.gbest, state.gbest_fitness, trace, x0, n_p * params.iterations, best_violation, meta)


# --- DE ----------------------------------------------------------------------


def binomial_crossover(target, mutant, crossover_rate, rng: np.random.Generator):
    """rand/1/bin crossover; one uniformly drawn coordinate always comes from the mutant."""
    n = target.shape[-1]
    forced = rng.integers(n)
    take = rng.random(n) < crossover_rate
    take[forced] = True
    return np.where(take, mutant, target)


def de_zf(scenario: ScenarioConfig, params: DEParams | None = None, workers: int = 1, two_pa_positions=None) -> SearchResult:
    """Differential evolution (rand/1/bin, greedy selection) on the ZF fitness.

    Generation 0 evaluates the initial population; each of the remaining
    ``iterations - 1`` generations evaluates one trial per member, so the
    evaluation budget equals a swarm of the same size and iteration count.
    """
    params = params or DEParams()
    profile = radiation_profile(scenario)
    NP = params.population
    pop, x0, meta = init_positions(params.init, scenario, params.trust_radius, NP, params.seed, two_pa_positions)
    fit = fitness_batch(scenario, pop, profile, workers)
    values = fit.values.copy()
    best_violation = float(np.min(fit.violation))
    trace = [float(values.max())]
    for t in range(1, params.iterations):
        trials = np.empty_like(pop)
        for i in range(NP):
            rng = rng_for(params.seed, _STAGE_DE, t, i)
            others = np.delete(np.arange(NP), i)
            a, b, c = rng.choice(others, 3, replace=False)
            mutant = pop[a] + params.scale_factor * (pop[b] - pop[c])
            trials[i] = binomial_crossover(pop[i], mutant, params.crossover_rate, rng)
        trials = feasible_step(trials, scenario, x0, params.trust_radius)
        tf = fitness_batch(scenario, trials, profile, workers)
        best_violation = min(best_violation, float(np.min(tf.violation)))
        accept = tf.values >= values
        pop[accept] = trials[accept]
        values[accept] = tf.values[accept]
        trace.append(float(values.max()))
    best = int(np.argmax(values))
    meta.update(trust_radius=params.trust_radius, scale_factor=params.scale_factor, crossover_rate=params.crossover_rate)
    return _finish(scenario, pop[best], values[best], trace, x0, NP * params.iterations, best_violation, meta)
