"""Global PA placement for two users served by two single-PA mode groups.

Zero inter-user interference between the effective channels of two PAs at
``x_1 < x_2`` requires two conditions.  The product distances must match,
``D(x_1) = D(x_2)`` with ``D(x) = R_1(x) R_2(x)``, and the path differences
must be an odd multiple of half a wavelength,
``phi(x_1, x_2) = (n + 1/2) lambda0``.  ``D`` is piecewise monotone between
the real roots of a depressed cubic.  A coarse grid over ``x_1`` with
bisection partners seeds a two-variable Newton solve of both conditions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .beamforming import Beamformer, RateReport, mrt_waterfilling, rate_report
from .channel import effective_channel
from .scenario import ScenarioConfig

DEFAULT_GRID_SIZE = 1000
DEFAULT_NEWTON_TOL = 1e-9
DEFAULT_NEWTON_ITERS = 40
DEFAULT_BISECTION_TOL = 1e-9
MIN_SEARCH_WIDTH = 1.0
_SINGULAR_JACOBIAN = 1e-14
# Newton keeps iterating below the acceptance tolerance down to this fraction of it
_POLISH_FRACTION = 1e-3


def _radius(x, a, z):
    return np.sqrt((np.asarray(x, dtype=float) - a) ** 2 + z**2)


def product_distance(x, a, z):
    """``D(x) = R_1(x) R_2(x)`` for users with along-axis ``a`` and heights ``z``."""
    return _radius(x, a[0], z[0]) * _radius(x, a[1], z[1])


def product_distance_derivative(x, a, z):
    r1, r2 = _radius(x, a[0], z[0]), _radius(x, a[1], z[1])
    x = np.asarray(x, dtype=float)
    return (x - a[0]) * r2 / r1 + (x - a[1]) * r1 / r2


def phase_difference(x1, x2, a, z):
    """``phi = [R_1(x_2) - R_1(x_1)] - [R_2(x_2) - R_2(x_1)]`` in metres."""
    return (_radius(x2, a[0], z[0]) - _radius(x1, a[0], z[0])) - (
        _radius(x2, a[1], z[1]) - _radius(x1, a[1], z[1])
    )


@dataclass(frozen=True)
class CubicAnalysis:
    p: float
    q: float
    discriminant: float
    trig_angle: float | None
    stationary_points: tuple[float, ...]
    breakpoints: tuple[float, ...]

    @property
    def intervals(self) -> list[tuple[float, float]]:
        b = self.breakpoints
        return [(b[i], b[i + 1]) for i in range(len(b) - 1)]


def stationary_points(a1, a2, z1, z2, lower=None, upper=None) -> CubicAnalysis:
    """Stationary points of ``D`` from the depressed cubic ``t^3 + p t + q = 0``.

    ``t`` is measured from the users' midpoint.  Intervals run from ``lower``
    (default ``a1``) through the sorted roots to ``upper`` (default ``a2``).
    """
    d = a2 - a1
    p = (-(d**2) + 2.0 * (z1**2 + z2**2)) / 4.0
    q = d * (z2**2 - z1**2) / 4.0
    disc = (q / 2.0) ** 2 + (p / 3.0) ** 3
    angle = None
    if disc >= 0:
        s = np.sqrt(disc)
        roots = [np.cbrt(-q / 2.0 + s) + np.cbrt(-q / 2.0 - s)]
    else:
        arg = 3.0 * q / (2.0 * p) * np.sqrt(-3.0 / p)
        angle = float(np.arccos(np.clip(arg, -1.0, 1.0)))
        amp = 2.0 * np.sqrt(-p / 3.0)
        roots = [amp * np.cos(angle / 3.0 - 2.0 * np.pi * j / 3.0) for j in range(3)]
    centre = a1 + d / 2.0
    tau = sorted(float(centre + t) for t in roots)
    if d > 0:
        tau = [t for t in tau if a1 < t < a2]
    lo = a1 if lower is None else lower
    hi = a2 if upper is None else upper
    return CubicAnalysis(
        p=float(p),
        q=float(q),
        discriminant=float(disc),
        trig_angle=angle,
        stationary_points=tuple(tau),
        breakpoints=(float(lo), *tau, float(hi)),
    )


def match_partner(x1, interval, a, z, tol=DEFAULT_BISECTION_TOL):
    """Solve ``D(x_2) = D(x_1)`` for ``x_2`` inside a monotone interval of ``D``.

    Vectorized over ``x1``; entries whose level is outside the interval's range
    come back as NaN.
    """
    x1 = np.atleast_1d(np.asarray(x1, dtype=float))
    lo_x, hi_x = interval
    target = product_distance(x1, a, z)
    d_lo, d_hi = product_distance(lo_x, a, z), product_distance(hi_x, a, z)
    increasing = d_hi >= d_lo
    inside = (target >= min(d_lo, d_hi)) & (target <= max(d_lo, d_hi))
    lo = np.full_like(x1, lo_x)
    hi = np.full_like(x1, hi_x)
    steps = max(1, int(np.ceil(np.log2(max(hi_x - lo_x, tol) / tol))))
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        above = product_distance(mid, a, z) > target
        go_left = above if increasing else ~above
        hi = np.where(go_left, mid, hi)
        lo = np.where(go_left, lo, mid)
    # final secant step inside the bracket
    f_lo = product_distance(lo, a, z) - target
    f_hi = product_distance(hi, a, z) - target
    denom = f_hi - f_lo
    frac = np.where(denom != 0, -f_lo / np.where(denom != 0, denom, 1.0), 0.5)
    x2 = lo + np.clip(frac, 0.0, 1.0) * (hi - lo)
    return np.where(inside, x2, np.nan)


def round_half_away(v):
    v = np.asarray(v, dtype=float)
    return np.sign(v) * np.floor(np.abs(v) + 0.5)


def nearest_halfwave_integer(x1, x2, wavelength, a, z):
    """Integer ``n`` whose target ``(n + 1/2) lambda0`` is closest to ``phi(x_1, x_2)``.

    Ties round half away from zero, so ``phi = 0`` gives ``n = -1``.
    """
    n = round_half_away(phase_difference(x1, x2, a, z) / wavelength - 0.5)
    return n.astype(int) if np.ndim(n) else int(n)


@dataclass
class CandidatePair:
    x1: float
    x2: float
    halfwave_integer: int
    residual_norm: float
    objective: float
    feasible: bool


def _residual(x1, x2, n, wavelength, a, z):
    f1 = product_distance(x1, a, z) - product_distance(x2, a, z)
    f2 = phase_difference(x1, x2, a, z) - (n + 0.5) * wavelength
    return f1, f2


def newton_refine(x1, x2, n, wavelength, a, z, eps=DEFAULT_NEWTON_TOL, max_iters=DEFAULT_NEWTON_ITERS, delta=None):
    """Vectorized two-variable Newton solve of the orthogonality conditions.

    Returns ``(x1, x2, residual_norm, converged)``.  Candidates with a
    singular Jacobian, no convergence within ``max_iters`` or (when ``delta``
    is given) a step outside the ``delta`` box around the start are marked not
    converged.  Points already accepted keep iterating (within ``max_iters``)
    towards ``eps * 1e-3`` so the residual interference is negligible.
    """
    x1 = np.atleast_1d(np.asarray(x1, dtype=float)).copy()
    x2 = np.atleast_1d(np.asarray(x2, dtype=float)).copy()
    n = np.broadcast_to(np.asarray(n, dtype=float), x1.shape)
    x1_0, x2_0 = x1.copy(), x2.copy()
    alive = np.isfinite(x1) & np.isfinite(x2)
    f1, f2 = _residual(x1, x2, n, wavelength, a, z)
    norm = np.hypot(f1, f2)
    for _ in range(max_iters):
        active = alive & ~(norm <= eps * _POLISH_FRACTION)
        if not np.any(active):
            break
        r11, r21 = _radius(x1, a[0], z[0]), _radius(x1, a[1], z[1])
        r12, r22 = _radius(x2, a[0], z[0]), _radius(x2, a[1], z[1])
        j11 = product_distance_derivative(x1, a, z)
        j12 = -product_distance_derivative(x2, a, z)
        j21 = -(x1 - a[0]) / r11 + (x1 - a[1]) / r21
        j22 = (x2 - a[0]) / r12 - (x2 - a[1]) / r22
        det = j11 * j22 - j12 * j21
        scale = np.abs(j11 * j22) + np.abs(j12 * j21)
        singular = np.abs(det) < _SINGULAR_JACOBIAN * np.maximum(scale, 1e-300)
        alive &= ~(active & singular & (norm > eps))
        step = active & ~singular
        safe = np.where(step, det, 1.0)
        dx1 = (j22 * f1 - j12 * f2) / safe
        dx2 = (-j21 * f1 + j11 * f2) / safe
        x1 = np.where(step, x1 - dx1, x1)
        x2 = np.where(step, x2 - dx2, x2)
        f1, f2 = _residual(x1, x2, n, wavelength, a, z)
        norm = np.hypot(f1, f2)
    converged = alive & (norm <= eps)
    if delta is not None:
        converged &= (np.abs(x1 - x1_0) <= delta) & (np.abs(x2 - x2_0) <= delta)
    return x1, x2, norm, converged


def _water_fill_two(g1, g2, total_power, noise_power):
    """Vectorized two-channel water-filling; returns ``(p1, p2)``."""
    f1, f2 = noise_power / g1, noise_power / g2
    mu = (total_power + f1 + f2) / 2.0
    p1, p2 = mu - f1, mu - f2
    p1, p2 = np.where(p2 < 0, total_power, p1), np.where(p2 < 0, 0.0, p2)
    p1, p2 = np.where(p1 < 0, 0.0, p1), np.where(p1 < 0, total_power, p2)
    return p1, p2


def channel_gains(x1, x2, a, z, wavelength):
    """``||h_k||^2 = lambda0^2 / (16 pi^2) (1/R_k(x_1)^2 + 1/R_k(x_2)^2)`` per user."""
    c = wavelength**2 / (16.0 * np.pi**2)
    g1 = c * (1.0 / _radius(x1, a[0], z[0]) ** 2 + 1.0 / _radius(x2, a[0], z[0]) ** 2)
    g2 = c * (1.0 / _radius(x1, a[1], z[1]) ** 2 + 1.0 / _radius(x2, a[1], z[1]) ** 2)
    return g1, g2


def reduced_objective(x1, x2, a, z, total_power, noise_power, wavelength, return_sinr=False):
    """Sum rate of an interference-free PA pair with water-filled MRT powers."""
    g1, g2 = channel_gains(x1, x2, a, z, wavelength)
    p1, p2 = _water_fill_two(g1, g2, total_power, noise_power)
    s1, s2 = p1 * g1 / noise_power, p2 * g2 / noise_power
    value = np.log2(1.0 + s1) + np.log2(1.0 + s2)
    if return_sinr:
        return value, s1, s2
    return value


@dataclass
class TwoPAResult:
    positions: np.ndarray
    beamformer: Beamformer | None
    report: RateReport | None
    objective: float
    halfwave_integer: int | None
    feasible: bool
    cubic: CubicAnalysis
    search_region: tuple[float, float]
    candidates: int = 0
    accepted: int = 0
    metadata: dict = field(default_factory=dict)

    @property
    def sum_rate(self) -> float:
        return self.report.sum_rate if self.report is not None else float("-inf")


def search_region(a1, a2, geometry, min_width=MIN_SEARCH_WIDTH):
    """``[a1, a2]`` widened symmetrically to ``min_width`` and clipped to the bounds."""
    lo, hi = a1, a2
    if hi - lo < min_width:
        extra = (min_width - (hi - lo)) / 2.0
        lo, hi = lo - extra, hi + extra
    return max(lo, geometry.x_min), min(hi, geometry.x_max)


def optimize_two_pa(
    scenario: ScenarioConfig,
    grid_size: int = DEFAULT_GRID_SIZE,
    eps: float = DEFAULT_NEWTON_TOL,
    delta: float | None = None,
    max_iters: int = DEFAULT_NEWTON_ITERS,
    bisection_tol: float = DEFAULT_BISECTION_TOL,
    min_search_width: float = MIN_SEARCH_WIDTH,
) -> TwoPAResult:
    """Coarse sampling and local refinement of the interference-free two-PA layout.

    PA positions are found under the non-leakage model (each PA radiates only
    its own mode).  The returned beamformer is MRT with water-filling on the
    scenario's effective channel at the chosen positions.
    """
    if scenario.pa_count != 2 or scenario.users.count != 2:
        raise ValueError("the two-PA optimizer needs exactly two PAs and two users")
    lam = scenario.wavelength
    delta = 2.0 * lam if delta is None else delta
    geo = scenario.geometry
    P, sigma2 = scenario.power.max_power, scenario.power.noise_power
    min_sinr = scenario.power.min_sinr

    a_users = np.asarray(scenario.users.along_axis, dtype=float)
    z_users = scenario.user_heights
    order = np.argsort(a_users, kind="stable")
    a, z = a_users[order], z_users[order]

    lo, hi = search_region(a[0], a[1], geo, min_search_width)
    cubic = stationary_points(a[0], a[1], z[0], z[1], lower=lo, upper=hi)
    intervals = [(max(s, lo), min(e, hi)) for s, e in cubic.intervals]

    xs1, xs2, ns = [], [], []
    # x_1 needs a partner in a strictly later interval
    grid = np.linspace(intervals[0][0], intervals[-1][0], grid_size)
    for s, (s_lo, s_hi) in enumerate(intervals[:-1]):
        x1 = grid[(grid >= s_lo) & (grid <= s_hi)]
        for later in intervals[s + 1 :]:
            x2 = match_partner(x1, later, a, z, bisection_tol)
            ok = np.isfinite(x2)
            xs1.append(x1[ok])
            xs2.append(x2[ok])
    x1c = np.concatenate(xs1) if xs1 else np.empty(0)
    x2c = np.concatenate(xs2) if xs2 else np.empty(0)
    n_c = nearest_halfwave_integer(x1c, x2c, lam, a, z) if x1c.size else np.empty(0, dtype=int)
    r1, r2, norm, conv = newton_refine(x1c, x2c, n_c, lam, a, z, eps, max_iters, delta)

    ok = conv & (r2 - r1 >= geo.min_spacing - 1e-12)
    ok &= (r1 >= geo.x_min) & (r2 <= geo.x_max)
    obj, s1, s2 = reduced_objective(r1, r2, a, z, P, sigma2, lam, return_sinr=True)
    ok &= (s1 >= min_sinr) & (s2 >= min_sinr)

    meta = {"grid_size": grid_size, "newton_tol": eps, "delta": delta, "bisection_tol": bisection_tol}
    if not np.any(ok):
        return TwoPAResult(
            positions=np.full(2, np.nan),
            beamformer=None,
            report=None,
            objective=float("-inf"),
            halfwave_integer=None,
            feasible=False,
            cubic=cubic,
            search_region=(lo, hi),
            candidates=int(x1c.size),
            accepted=0,
            metadata=meta,
        )
    # argmax with ties broken by the smaller x_1
    idx = np.flatnonzero(ok)
    best_val = obj[idx].max()
    ties = idx[obj[idx] == best_val]
    best = ties[np.argmin(r1[ties])]
    positions = np.array([r1[best], r2[best]])
    channel = effective_channel(scenario, positions)
    bf = mrt_waterfilling(channel.H_eff, P, sigma2)
    report = rate_report(channel.H_eff, bf.W, sigma2, min_sinr)
    meta["residual_norm"] = float(norm[best])
    return TwoPAResult(
        positions=positions,
        beamformer=bf,
        report=report,
        objective=float(best_val),
        halfwave_integer=int(n_c[best]),
        feasible=True,
        cubic=cubic,
        search_region=(lo, hi),
        candidates=int(x1c.size),
        accepted=int(ok.sum()),
        metadata=meta,
    )
