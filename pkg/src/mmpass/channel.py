"""Wireless, in-waveguide and effective baseband channels."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cmt import RadiationProfile, radiation_profile
from .errors import LayoutError
from .scenario import ScenarioConfig

_LAYOUT_TOL = 1e-9


def pa_user_distances(positions, users_a, users_y, height) -> np.ndarray:
    """Distances ``R[..., n, k]`` from PAs at ``(x_n, 0, h)`` to users at ``(a_k, y_k, 0)``."""
    x = np.asarray(positions, dtype=float)[..., :, None]
    a = np.asarray(users_a, dtype=float)
    y = np.asarray(users_y, dtype=float)
    return np.sqrt((x - a) ** 2 + y**2 + height**2)


def wireless_gain_from_distance(distance, wavelength):
    k0 = 2.0 * np.pi / wavelength
    return wavelength / (4.0 * np.pi) * np.exp(1j * k0 * distance) / distance


def wireless_gain(pa_position, user_along, user_lateral, height, wavelength):
    """Free-space spherical-wave gain ``lambda/(4 pi R) * exp(j k0 R)``."""
    r = np.sqrt((np.asarray(pa_position) - user_along) ** 2 + user_lateral**2 + height**2)
    return wireless_gain_from_distance(r, wavelength)


def waveguide_vector(rho_column, beta, positions):
    """In-waveguide propagation ``g_n = rho_n * exp(-j beta x_n)`` for one mode."""
    return np.asarray(rho_column) * np.exp(-1j * beta * np.asarray(positions, dtype=float))


@dataclass(frozen=True)
class ChannelSet:
    H: np.ndarray
    G: np.ndarray
    H_eff: np.ndarray
    distances: np.ndarray


def check_layout(positions, scenario: ScenarioConfig, tol: float = _LAYOUT_TOL) -> None:
    """Raise :class:`LayoutError` unless positions are ordered, spaced and in bounds."""
    x = np.asarray(positions, dtype=float)
    geo = scenario.geometry
    if x.shape != (scenario.pa_count,):
        raise LayoutError(f"expected {scenario.pa_count} PA positions, got shape {x.shape}")
    if np.any(x < geo.x_min - tol) or np.any(x > geo.x_max + tol):
        raise LayoutError(f"PA positions outside [{geo.x_min}, {geo.x_max}]")
    if np.any(np.diff(x) < geo.min_spacing - tol):
        raise LayoutError(f"PA spacing below the minimum {geo.min_spacing:.4g} m")


def effective_channel_batch(scenario: ScenarioConfig, positions, profile: RadiationProfile | None = None):
    """``H_eff`` for a stack of layouts, shape ``(..., K, M)``.

    ``positions`` has shape ``(..., N)``.  The mode-to-PA coefficients are taken
    from ``profile`` (computed from the scenario when omitted).
    """
    if profile is None:
        profile = radiation_profile(scenario)
    x = np.asarray(positions, dtype=float)
    users = scenario.users
    R = pa_user_distances(x, users.along_axis, users.lateral, scenario.geometry.height)
    H = wireless_gain_from_distance(R, scenario.wavelength)
    G = profile.rho * np.exp(-1j * x[..., :, None] * scenario.betas)
    # H_eff[k, m] = sum_n conj(H[n, k]) G[n, m]
    H_eff = np.sum(np.conj(H)[..., :, :, None] * G[..., :, None, :], axis=-3)
    return H_eff, H, G, R


def effective_channel(scenario: ScenarioConfig, positions, profile: RadiationProfile | None = None, validate=True):
    """Build ``H``, ``G`` and ``H_eff = H^H G`` for one PA layout."""
    if validate:
        check_layout(positions, scenario)
    H_eff, H, G, R = effective_channel_batch(scenario, positions, profile)
    return ChannelSet(H=H, G=G, H_eff=H_eff, distances=R)
