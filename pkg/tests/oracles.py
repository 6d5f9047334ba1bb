"""Independent reference computations shared by unit and acceptance tests."""

import numpy as np

from mmpass.twopa import search_region


def derivative_sign_changes(a1, a2, z1, z2, points=1_000_000):
    """Locations where ``dD/dx`` changes sign on a uniform grid over ``[a1, a2]``.

    Returns ``(crossings, step)``; each crossing is the midpoint of the grid
    cell containing the sign change.
    """
    x = np.linspace(a1, a2, points)
    r1 = np.sqrt((x - a1) ** 2 + z1**2)
    r2 = np.sqrt((x - a2) ** 2 + z2**2)
    # sign of D' = sign((x-a1) r2^2 + (x-a2) r1^2) since r1, r2 > 0
    s = np.sign((x - a1) * r2**2 + (x - a2) * r1**2)
    idx = np.flatnonzero(s[:-1] * s[1:] < 0)
    idx = np.concatenate([idx, np.flatnonzero(s[1:-1] == 0)])
    step = x[1] - x[0]
    return np.sort(x[idx] + step / 2), step


def mrt_pipeline_rate(x1, x2, a, y, height, wavelength, total_power, noise_power):
    """Sum rate, SINRs and normalized correlation of single-PA-per-mode MRT.

    Written from scratch: wireless gains per PA, water-filled MRT powers and
    the interference that MRT leaves when the channels are not orthogonal.
    Column phases of the waveguide cancel in every quantity used here.
    """
    k0 = 2 * np.pi / wavelength
    c = wavelength / (4 * np.pi)

    def gain(x, k):
        R = np.sqrt((x - a[k]) ** 2 + y[k] ** 2 + height**2)
        return c * np.exp(1j * k0 * R) / R

    h11, h21 = gain(x1, 0), gain(x2, 0)
    h12, h22 = gain(x1, 1), gain(x2, 1)
    g1 = np.abs(h11) ** 2 + np.abs(h21) ** 2
    g2 = np.abs(h12) ** 2 + np.abs(h22) ** 2
    cross = np.abs(h11 * np.conj(h12) + h21 * np.conj(h22)) ** 2
    corr = cross / (g1 * g2)

    f1, f2 = noise_power / g1, noise_power / g2
    mu = (total_power + f1 + f2) / 2
    p1, p2 = mu - f1, mu - f2
    p1, p2 = np.where(p2 < 0, total_power, p1), np.where(p2 < 0, 0.0, p2)
    p1, p2 = np.where(p1 < 0, 0.0, p1), np.where(p1 < 0, total_power, p2)

    s1 = p1 * g1 / (p2 * cross / g2 + noise_power)
    s2 = p2 * g2 / (p1 * cross / g1 + noise_power)
    return np.log2(1 + s1) + np.log2(1 + s2), s1, s2, corr


def dense_grid_oracle(scenario, points=2000, corr_tol=1e-4, widened=False):
    """Best MRT sum rate over a ``points x points`` grid of ordered PA pairs.

    The grid spans ``[a_1, a_2]``, or with ``widened`` the optimizer's search
    region (at least 1 m wide).  Only pairs that are spaced, meet the SINR
    floor and are nearly orthogonal (normalized correlation ``<= corr_tol``)
    are admitted; ``-inf`` when none is.
    """
    users = scenario.users
    order = np.argsort(users.along_axis)
    a = np.asarray(users.along_axis)[order]
    y = np.asarray(users.lateral)[order]
    geo = scenario.geometry
    lo, hi = search_region(a[0], a[1], geo) if widened else (a[0], a[1])
    grid = np.linspace(lo, hi, points)
    P, s2n = scenario.power.max_power, scenario.power.noise_power
    smin = scenario.power.min_sinr
    best = -np.inf
    for i, x1 in enumerate(grid):
        x2 = grid[i + 1 :]
        x2 = x2[x2 - x1 >= geo.min_spacing]
        if x2.size == 0:
            continue
        rate, s1, s2, corr = mrt_pipeline_rate(x1, x2, a, y, geo.height, scenario.wavelength, P, s2n)
        ok = (corr <= corr_tol) & (s1 >= smin) & (s2 >= smin)
        if np.any(ok):
            best = max(best, float(rate[ok].max()))
    return best


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def record_criterion(number, passed, detail):
    line = f"{'PASS' if passed else 'FAIL'} criterion {number}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed
