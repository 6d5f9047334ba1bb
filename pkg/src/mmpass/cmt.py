"""Coupled-mode theory for a multi-mode waveguide feeding pinching antennas.

The closed-form coupling coefficient of a PA to a guided mode is

    eta = kappa / phi * sin(phi * L),   phi = sqrt(|kappa|^2 + (dbeta / 2)^2)

with ``dbeta = beta_PA - beta_m``.  :func:`cme_integrate` integrates the full
coupled-mode equations numerically and is used to validate it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError, InfeasibleSpacingError, IntegrationAccuracyError
from .scenario import Regime, ScenarioConfig

_ETA_SLACK = 1e-12


def generalized_coupling_strength(kappa, delta_beta):
    return np.sqrt(np.abs(kappa) ** 2 + (np.asarray(delta_beta) / 2.0) ** 2)


def coupling_coefficient(kappa, delta_beta, length):
    """Closed-form coupling coefficient ``kappa/phi * sin(phi L)``.

    Vectorized over ``kappa`` and ``delta_beta``; ``kappa = 0`` yields 0.
    """
    kappa = np.asarray(kappa)
    phi = generalized_coupling_strength(kappa, delta_beta)
    safe = np.where(phi > 0, phi, 1.0)
    eta = np.where(phi > 0, kappa / safe * np.sin(safe * length), 0.0)
    return eta[()] if eta.ndim == 0 else eta


@dataclass(frozen=True)
class CouplingSpec:
    kappa: complex
    delta_beta: float
    coupling_length: float

    @property
    def phi(self) -> float:
        return float(generalized_coupling_strength(self.kappa, self.delta_beta))

    def eta(self):
        return coupling_coefficient(self.kappa, self.delta_beta, self.coupling_length)


def coupling_strength_from_spacing(spacing, decay_rate, peak_coupling, selectivity=1.0):
    """``|kappa| = mu * exp(-alpha S) * |Omega|`` for a PA at spacing ``S``."""
    spacing = np.asarray(spacing, dtype=float)
    if np.any(spacing < 0):
        raise DomainError("PA-waveguide spacing must be nonnegative")
    k = selectivity * np.exp(-decay_rate * spacing) * abs(peak_coupling)
    return float(k) if np.ndim(k) == 0 else k


def spacing_for_target_eta(eta_target, decay_rate, peak_coupling, length, pa_index=None) -> float:
    """Spacing at which a phase-matched PA reaches coupling coefficient ``eta_target``."""
    if not 0.0 < eta_target <= 1.0 + _ETA_SLACK:
        raise DomainError(f"target coupling coefficient {eta_target} outside (0, 1]")
    needed = np.arcsin(min(eta_target, 1.0))
    reach = length * abs(peak_coupling)
    if needed > reach * (1.0 + 1e-12):
        who = f" for PA {pa_index}" if pa_index is not None else ""
        raise InfeasibleSpacingError(
            f"coupling coefficient {eta_target:.6g}{who} needs |Omega| L >= {needed:.6g}, have {reach:.6g}",
            pa_index=pa_index,
        )
    return max(0.0, float(-np.log(needed / reach) / decay_rate))


def group_radiation_targets(group_size: int, rho_group: float = 1.0) -> np.ndarray:
    """Per-PA coupling targets ``rho_group / sqrt(|N_m| - n + 1)`` giving equal radiation.

    With ``rho_group = 1`` these are the physical coefficients applied to the
    residual in-waveguide signal.  With ``rho_group < 1`` they are referenced to
    the group entrance amplitude (the residual left after leakage).
    """
    if group_size < 1:
        raise DomainError("group size must be >= 1")
    if not 0.0 < rho_group <= 1.0:
        raise DomainError("group residual must lie in (0, 1]")
    n = np.arange(1, group_size + 1)
    return rho_group / np.sqrt(group_size - n + 1)


def incident_amplitudes(eta) -> np.ndarray:
    """Incident amplitude of every mode at every PA, PAs ordered along the guide.

    ``eta`` has shape ``(N, M)``; entry ``(n, m)`` of the result is
    ``prod_{i<n} sqrt(1 - |eta_{i,m}|^2)``.
    """
    mag2 = np.abs(np.atleast_2d(eta)) ** 2
    if np.any(mag2 > 1.0 + _ETA_SLACK):
        raise DomainError("coupling coefficient magnitude exceeds 1")
    through = np.sqrt(np.clip(1.0 - mag2, 0.0, None))
    out = np.ones_like(through)
    out[1:] = np.cumprod(through[:-1], axis=0)
    return out


@dataclass(frozen=True)
class RadiationProfile:
    """Per-(PA, mode) coupling, incident amplitude and radiation coefficient."""

    eta: np.ndarray
    incident: np.ndarray
    rho: np.ndarray
    group_residual: np.ndarray
    spacings: np.ndarray
    kappa: np.ndarray
    group_index: np.ndarray

    @property
    def radiated_fraction(self) -> np.ndarray:
        return np.sum(np.abs(self.rho) ** 2, axis=0)

    @property
    def residual_fraction(self) -> np.ndarray:
        return np.prod(1.0 - np.abs(self.eta) ** 2, axis=0)


def radiation_profile(scenario: ScenarioConfig) -> RadiationProfile:
    """Coupling profile of the grouped PAs for the scenario's leakage regime.

    Group ``m`` occupies a consecutive block of PAs; within it, spacings are set
    so the matched mode is radiated in equal shares.  In the weak-leakage regime
    an unmatched mode couples to the PA with the selectivity-scaled strength at
    the spacing fixed by the PA's own group and with the inter-mode phase
    mismatch.  Position along the guide does not enter: the profile depends only
    on group sizes, mode parameters and regime.
    """
    betas = scenario.betas
    L = scenario.geometry.coupling_length
    groups = scenario.group_index
    n_pa, n_modes = len(groups), len(scenario.modes)
    mu_un = scenario.mu_unmatch

    spacings = np.zeros(n_pa)
    kappa = np.zeros((n_pa, n_modes))
    eta = np.zeros((n_pa, n_modes))
    start = 0
    for m_own, size in enumerate(scenario.group_sizes):
        mode = scenario.modes[m_own]
        targets = group_radiation_targets(size)
        for local, target in enumerate(targets):
            n = start + local
            omega = mode.matched_field_selectivity * mode.peak_coupling_magnitude
            spacings[n] = spacing_for_target_eta(target, mode.evanescent_decay_rate, omega, L, pa_index=n)
            for m in range(n_modes):
                other = scenario.modes[m]
                if m == m_own:
                    kappa[n, m] = coupling_strength_from_spacing(spacings[n], mode.evanescent_decay_rate, omega)
                    eta[n, m] = np.sin(kappa[n, m] * L)
                elif scenario.regime is Regime.WEAK_LEAKAGE and mu_un > 0:
                    kappa[n, m] = coupling_strength_from_spacing(
                        spacings[n], other.evanescent_decay_rate, other.peak_coupling_magnitude, mu_un
                    )
                    eta[n, m] = coupling_coefficient(kappa[n, m], betas[m_own] - betas[m], L)
        start += size

    eta = np.clip(eta, -1.0, 1.0)
    incident = incident_amplitudes(eta)
    first_of_group = np.concatenate([[0], np.cumsum(scenario.group_sizes)[:-1]])
    group_residual = incident[first_of_group, np.arange(n_modes)]
    return RadiationProfile(
        eta=eta,
        incident=incident,
        rho=eta * incident,
        group_residual=group_residual,
        spacings=spacings,
        kappa=kappa,
        group_index=groups,
    )


# --- coupled-mode equations -------------------------------------------------


def _rk4_envelope(kappa, dbeta, a0, b0, length, steps):
    # envelope form: a_m = A_m e^{j beta_m xi}, b = B e^{j beta_PA xi}
    # da_m/dxi = -j kappa_m b e^{-j dbeta_m xi}
    # db/dxi   = -j sum_m conj(kappa_m) a_m e^{+j dbeta_m xi}
    h = length / steps
    kc = np.conj(kappa)

    def rhs(xi, a, b):
        rot = np.exp(1j * dbeta * xi)
        da = -1j * kappa * b[..., None] * np.conj(rot)
        db = -1j * np.sum(kc * a * rot, axis=-1)
        return da, db

    a, b = a0.astype(complex), b0.astype(complex)
    for i in range(steps):
        xi = i * h
        k1a, k1b = rhs(xi, a, b)
        k2a, k2b = rhs(xi + h / 2, a + h / 2 * k1a, b + h / 2 * k1b)
        k3a, k3b = rhs(xi + h / 2, a + h / 2 * k2a, b + h / 2 * k2b)
        k4a, k4b = rhs(xi + h, a + h * k3a, b + h * k3b)
        a = a + h / 6 * (k1a + 2 * k2a + 2 * k3a + k4a)
        b = b + h / 6 * (k1b + 2 * k2b + 2 * k3b + k4b)
    return a, b


def cme_integrate(betas, kappas, beta_pa, length, a0, b0=0.0, steps=4096, tol=1e-10, check=True):
    """Integrate the full multi-mode coupled-mode equations over ``[0, L]``.

    Fixed-step classical RK4 on the slowly varying envelopes, converted back to
    physical amplitudes at ``xi = L``.  Leading dimensions of ``kappas``,
    ``beta_pa``, ``a0`` and ``b0`` broadcast as a batch; the mode axis is last.

    Returns
    -------
    (A_L, B_L)
        Modal amplitudes ``A_m(L)`` (shape ``(..., M)``) and PA amplitude ``B(L)``.

    Raises
    ------
    IntegrationAccuracyError
        If rerunning with half the steps changes the result by more than ``tol``.
    """
    betas = np.asarray(betas, dtype=float)
    kappas = np.asarray(kappas, dtype=complex)
    beta_pa = np.asarray(beta_pa, dtype=float)
    batch = np.broadcast_shapes(kappas.shape, betas.shape, np.shape(a0), beta_pa.shape + (1,))
    kappas = np.broadcast_to(kappas, batch)
    betas_b = np.broadcast_to(betas, batch)
    a0 = np.broadcast_to(np.asarray(a0, dtype=complex), batch)
    b0 = np.broadcast_to(np.asarray(b0, dtype=complex), batch[:-1])
    bpa = np.broadcast_to(beta_pa, batch[:-1])
    dbeta = bpa[..., None] - betas_b

    a, b = _rk4_envelope(kappas, dbeta, a0, b0, length, steps)
    if check:
        a_h, b_h = _rk4_envelope(kappas, dbeta, a0, b0, length, steps // 2)
        err = max(np.max(np.abs(a - a_h), initial=0.0), np.max(np.abs(b - b_h), initial=0.0))
        if err > tol:
            raise IntegrationAccuracyError(
                f"step halving changed the CME solution by {err:.3g} > {tol:.3g}; increase steps"
            )
    A_L = a * np.exp(-1j * betas_b * length)
    B_L = b * np.exp(-1j * bpa * length)
    return A_L, B_L


def superposition_closed_form(betas, kappas, beta_pa, length, a0):
    """PA amplitude ``B(L)`` from the decoupled two-mode subsystems, ``B(0) = 0``.

    Each guided mode exchanges power with the PA independently; the returned
    value is the sum of the exact two-mode solutions

        b_m(L) = -j conj(kappa_m) / phi_m * sin(phi_m L) * exp(+j dbeta_m L / 2) * a_m(0)

    converted to the physical amplitude ``B(L) = b(L) exp(-j beta_PA L)``.  The
    magnitude of each term equals ``|eta_m| |a_m(0)|``.
    """
    betas = np.asarray(betas, dtype=float)
    kappas = np.asarray(kappas, dtype=complex)
    beta_pa = np.asarray(beta_pa, dtype=float)
    dbeta = beta_pa[..., None] - betas
    phi = generalized_coupling_strength(kappas, dbeta)
    safe = np.where(phi > 0, phi, 1.0)
    term = np.where(
        phi > 0,
        -1j * np.conj(kappas) / safe * np.sin(safe * length) * np.exp(0.5j * dbeta * length),
        0.0,
    )
    b = np.sum(term * np.asarray(a0, dtype=complex), axis=-1)
    return b * np.exp(-1j * beta_pa * length)


def selectivity_sweep(beta_pa_grid, betas: Sequence[float], kappas: Sequence[float], length: float) -> np.ndarray:
    """``|eta_m(beta_PA)|^2`` on a grid of PA propagation constants, shape ``(G, M)``."""
    grid = np.asarray(beta_pa_grid, dtype=float)[:, None]
    return np.abs(coupling_coefficient(np.asarray(kappas)[None, :], grid - np.asarray(betas)[None, :], length)) ** 2
