"""Comparison schemes: single-mode PASS with TDMA and fixed-position MISO arrays."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.optimize import brentq

from .beamforming import compute_sinr, normalize_power, wmmse_precoder
from .channel import pa_user_distances, wireless_gain_from_distance
from .scenario import ScenarioConfig

TDMA_TIME_SHARE = 0.5
TDMA_CENTER_STEPS = 8  # candidate ladder centres a_k + j lambda0/8, |j| <= 8
HYBRID_MAX_ITERS = 100
HYBRID_TOL = 1e-10


class MisoMode(str, Enum):
    FULL_DIGITAL = "FullDigital"
    HYBRID = "Hybrid"


@dataclass
class BaselineResult:
    scheme: str
    rates: np.ndarray
    sum_rate: float
    antenna_count: int
    positions: list
    feasible: bool = True
    metadata: dict = field(default_factory=dict)


# --- single-mode PASS with TDMA ---------------------------------------------


def _phase(x, a, z, k0, beta):
    """Total phase ``k0 R(x) + beta x`` of a PA's contribution; strictly increasing in ``x``."""
    return k0 * np.sqrt((x - a) ** 2 + z**2) + beta * x


def _next_coherent(prev, direction, target, a, z, k0, beta, min_spacing, bounds):
    """Nearest position beyond ``prev`` (in ``direction``) whose phase equals ``target`` mod 2 pi."""
    start = prev + direction * min_spacing
    if not bounds[0] <= start <= bounds[1]:
        return None
    ph = _phase(start, a, z, k0, beta)
    if direction > 0:
        goal = target + 2.0 * np.pi * np.ceil((ph - target) / (2.0 * np.pi))
    else:
        goal = target - 2.0 * np.pi * np.ceil((target - ph) / (2.0 * np.pi))
    if np.isclose(goal, ph, rtol=0.0, atol=1e-12):
        return start
    # the phase slope is at least beta - k0 > 0, so one period is bracketed by this width
    width = 2.0 * np.pi / (beta - k0) + min_spacing
    end = start + direction * width
    end = min(max(end, bounds[0]), bounds[1])
    f = lambda x: _phase(x, a, z, k0, beta) - goal
    if f(start) * f(end) > 0:
        return None
    return brentq(f, min(start, end), max(start, end), xtol=1e-15, rtol=4 * np.finfo(float).eps)


def coherent_ladder(center, count, a, z, wavelength, beta, min_spacing, bounds):
    """``count`` phase-aligned PA positions grown greedily outward from ``center``.

    Each step adds the next coherent position on the side whose candidate is
    closer to the user.
    """
    k0 = 2.0 * np.pi / wavelength
    target = _phase(center, a, z, k0, beta)
    xs = [float(center)]
    left = right = float(center)
    while len(xs) < count:
        cand_r = _next_coherent(right, +1, target, a, z, k0, beta, min_spacing, bounds)
        cand_l = _next_coherent(left, -1, target, a, z, k0, beta, min_spacing, bounds)
        if cand_r is None and cand_l is None:
            raise ValueError("no room for another phase-aligned PA inside the bounds")
        if cand_l is None or (cand_r is not None and abs(cand_r - a) <= abs(cand_l - a)):
            right = cand_r
            xs.append(cand_r)
        else:
            left = cand_l
            xs.append(cand_l)
    return np.sort(np.array(xs))


def single_mode_gain(positions, a, y, height, wavelength, beta):
    """``|h|^2`` of one user for PAs radiating equal power ``1/N`` from a single mode."""
    x = np.asarray(positions, dtype=float)
    R = np.sqrt((x - a) ** 2 + y**2 + height**2)
    terms = wireless_gain_from_distance(R, wavelength).conj() * np.exp(-1j * beta * x) / np.sqrt(len(x))
    return float(np.abs(np.sum(terms)) ** 2)


def coherent_bound(positions, a, y, height, wavelength):
    x = np.asarray(positions, dtype=float)
    R = np.sqrt((x - a) ** 2 + y**2 + height**2)
    return float(np.sum(wavelength / (4.0 * np.pi * R * np.sqrt(len(x)))) ** 2)


def place_single_mode(scenario: ScenarioConfig, user: int, count: int):
    """Best phase-aligned ladder for one user over centres on a ``lambda0/8`` grid around ``a_k``."""
    geo = scenario.geometry
    lam = scenario.wavelength
    beta = scenario.betas[0]
    a, y = scenario.users.along_axis[user], scenario.users.lateral[user]
    z = float(np.hypot(y, geo.height))
    centers = a + np.arange(-TDMA_CENTER_STEPS, TDMA_CENTER_STEPS + 1) * lam / 8.0
    centers = centers[(centers >= geo.x_min) & (centers <= geo.x_max)]
    if centers.size == 0:
        centers = np.array([min(max(a, geo.x_min), geo.x_max)])
    best, best_gain = None, -np.inf
    for c in centers:
        try:
            xs = coherent_ladder(c, count, a, z, lam, beta, geo.min_spacing, (geo.x_min, geo.x_max))
        except ValueError:
            continue
        g = single_mode_gain(xs, a, y, geo.height, lam, beta)
        if g > best_gain:
            best, best_gain = xs, g
    return best, best_gain


def tdma_single_mode(scenario: ScenarioConfig, count: int | None = None) -> BaselineResult:
    """Fundamental mode only; users take turns with half the time each at full power."""
    count = scenario.pa_count if count is None else count
    P, sigma2 = scenario.power.max_power, scenario.power.noise_power
    rates, placements, gains = [], [], []
    for k in range(scenario.users.count):
        xs, g = place_single_mode(scenario, k, count)
        placements.append([float(v) for v in xs])
        gains.append(g)
        rates.append(TDMA_TIME_SHARE * np.log2(1.0 + P * g / sigma2))
    rates = np.array(rates)
    feasible = bool(np.all(rates >= scenario.power.min_rate))
    return BaselineResult(
        scheme="tdma_single_mode",
        rates=rates,
        sum_rate=float(rates.sum()),
        antenna_count=count,
        positions=placements,
        feasible=feasible,
        metadata={"power_per_slot": "P_max", "time_share": TDMA_TIME_SHARE, "gains": gains},
    )


# --- fixed-position MISO -----------------------------------------------------


def miso_channel(scenario: ScenarioConfig, antenna_count: int):
    """``K x I`` channel of a half-wavelength array along the guide axis starting at ``x = 0``."""
    positions = np.arange(antenna_count) * scenario.wavelength / 2.0
    users = scenario.users
    R = pa_user_distances(positions, users.along_axis, users.lateral, scenario.geometry.height)
    return np.conj(wireless_gain_from_distance(R, scenario.wavelength)).T, positions


@dataclass
class HybridPrecoder:
    analog: np.ndarray
    digital: np.ndarray
    W: np.ndarray
    residual_trace: list[float]


def hybrid_approximation(W_target, rf_chains, total_power, max_iters=HYBRID_MAX_ITERS, tol=HYBRID_TOL):
    """Approximate ``W_target`` by ``F_analog @ W_digital`` with unit-modulus-scaled ``F_analog``.

    Alternates a least-squares digital update with exact per-entry phase
    updates of the analog matrix, so the Frobenius residual never increases.
    The product is finally scaled to ``total_power``.
    """
    I, K = W_target.shape
    src = W_target[:, :rf_chains] if rf_chains <= K else np.pad(W_target, ((0, 0), (0, rf_chains - K)))
    F = np.exp(1j * np.angle(src)) / np.sqrt(I)
    modulus = 1.0 / np.sqrt(I)
    D = np.linalg.lstsq(F, W_target, rcond=None)[0]
    trace = [float(np.linalg.norm(W_target - F @ D))]
    for _ in range(max_iters):
        for i in range(I):
            for r in range(rf_chains):
                rest = W_target[i] - F[i] @ D + F[i, r] * D[r]
                c = rest @ np.conj(D[r])
                if abs(c) > 0:
                    F[i, r] = modulus * c / abs(c)
        D = np.linalg.lstsq(F, W_target, rcond=None)[0]
        trace.append(float(np.linalg.norm(W_target - F @ D)))
        if trace[-2] - trace[-1] <= tol * max(trace[0], 1e-300):
            break
    W = normalize_power(F @ D, total_power)
    return HybridPrecoder(analog=F, digital=D, W=W, residual_trace=trace)


def fixed_miso(scenario: ScenarioConfig, antenna_count: int = 2, mode=MisoMode.FULL_DIGITAL, rf_chains: int = 2) -> BaselineResult:
    """MISO array at the feed point with fully digital WMMSE or hybrid beamforming."""
    mode = MisoMode(mode)
    if antenna_count < 2:
        raise ValueError("the MISO baseline needs at least two antennas")
    P, sigma2 = scenario.power.max_power, scenario.power.noise_power
    H, positions = miso_channel(scenario, antenna_count)
    wm = wmmse_precoder(H, P, sigma2)
    meta = {"element_spacing": scenario.wavelength / 2.0, "wmmse_iterations": wm.iterations}
    W = wm.beamformer.W
    if mode is MisoMode.HYBRID:
        hy = hybrid_approximation(W, rf_chains, P)
        W = hy.W
        meta["hybrid_residual_trace"] = hy.residual_trace
        meta["rf_chains"] = rf_chains
    sinr = compute_sinr(H, W, sigma2)
    rates = np.log2(1.0 + sinr)
    return BaselineResult(
        scheme="miso_full_digital" if mode is MisoMode.FULL_DIGITAL else "miso_hybrid",
        rates=rates,
        sum_rate=float(rates.sum()),
        antenna_count=antenna_count,
        positions=[float(v) for v in positions],
        feasible=bool(np.all(sinr >= scenario.power.min_sinr)),
        metadata=meta,
    )
