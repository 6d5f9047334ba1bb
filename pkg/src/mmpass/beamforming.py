"""Baseband precoders (MRT with water-filling, ZF, WMMSE) and rate evaluation.

Convention: row ``k`` of ``H_eff`` (shape ``K x M``) is ``h_k^H``, so user
``k`` receives ``H_eff[k] @ W @ s``.  Column ``k`` of ``W`` (``M x K``) is the
precoder of user ``k``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateChannelError, NearSingularChannelError

LOADING_FACTOR = 1e-12
SINGULARITY_FACTOR = 1e-12


@dataclass
class Beamformer:
    W: np.ndarray
    power_allocation: np.ndarray
    water_level: float | None = None
    diagonal_loading: float = 0.0

    @property
    def total_power(self) -> float:
        return float(np.sum(np.abs(self.W) ** 2))


@dataclass
class RateReport:
    sinr: np.ndarray
    rates: np.ndarray
    sum_rate: float
    feasible: bool


def compute_sinr(H_eff, W, noise_power):
    """Per-user SINR; works on a single channel or a stack ``(..., K, M)``."""
    HW = np.asarray(H_eff) @ np.asarray(W)
    gain = np.abs(HW) ** 2
    K = gain.shape[-1]
    eye = np.eye(K, dtype=bool)
    signal = gain[..., eye].reshape(gain.shape[:-2] + (K,))
    interference = np.sum(np.where(eye, 0.0, gain), axis=-1)
    return signal / (interference + noise_power)


def sum_rate(sinr) -> float:
    return float(np.sum(np.log2(1.0 + np.asarray(sinr)), axis=-1))


def rate_report(H_eff, W, noise_power, min_sinr=0.0) -> RateReport:
    sinr = compute_sinr(H_eff, W, noise_power)
    rates = np.log2(1.0 + sinr)
    return RateReport(sinr=sinr, rates=rates, sum_rate=float(rates.sum()), feasible=bool(np.all(sinr >= min_sinr)))


def water_filling(gains, total_power, noise_power):
    """Water-filling over parallel channels with power gains ``gains``.

    Returns ``(p, mu)`` with ``p_k = max(mu - noise/g_k, 0)`` and ``sum p = total_power``.
    Channels with zero gain receive no power.
    """
    g = np.asarray(gains, dtype=float)
    active = np.flatnonzero(g > 0)
    if active.size == 0:
        raise DegenerateChannelError("all channel gains are zero")
    floors = noise_power / g[active]
    order = np.argsort(floors, kind="stable")
    floors = floors[order]
    # drop the weakest channel while its floor lies above the water level
    n = floors.size
    while n > 1:
        mu = (total_power + floors[:n].sum()) / n
        if mu > floors[n - 1]:
            break
        n -= 1
    mu = (total_power + floors[:n].sum()) / n
    p = np.zeros_like(g)
    p_active = np.maximum(mu - noise_power / g[active], 0.0)
    p_active[order[n:]] = 0.0
    p[active] = p_active
    return p, float(mu)


def mrt_waterfilling(channels, total_power, noise_power) -> Beamformer:
    """MRT beams ``sqrt(p_k) h_k / ||h_k||`` with water-filled powers.

    ``channels`` is the ``K x M`` effective channel (row ``k`` is ``h_k^H``).
    Optimal when the user channels are orthogonal.
    """
    H = np.atleast_2d(np.asarray(channels, dtype=complex))
    h = np.conj(H)  # column vectors h_k stored as rows
    norms = np.linalg.norm(h, axis=1)
    p, mu = water_filling(norms**2, total_power, noise_power)
    safe = np.where(norms > 0, norms, 1.0)
    W = (h / safe[:, None] * np.sqrt(p)[:, None]).T
    return Beamformer(W=W, power_allocation=p, water_level=mu)


def _auto_loading(gram):
    K = gram.shape[-1]
    tr = np.real(np.trace(gram, axis1=-2, axis2=-1))
    scale = (tr / K) ** K
    det = np.abs(np.linalg.det(gram))
    return np.where(det < SINGULARITY_FACTOR * scale, LOADING_FACTOR * tr / K, 0.0)


def zf_directions(H_eff, diagonal_loading=None):
    """Unnormalized ZF beams ``H^H (H H^H + loading I)^{-1}``, batched over leading axes.

    ``diagonal_loading=None`` adds ``1e-12 tr(HH^H)/K`` only when ``HH^H`` is
    numerically singular.
    """
    H = np.asarray(H_eff, dtype=complex)
    Hh = np.conj(np.swapaxes(H, -1, -2))
    gram = H @ Hh
    K = gram.shape[-1]
    if diagonal_loading is None:
        loading = _auto_loading(gram)
    else:
        loading = np.broadcast_to(np.asarray(diagonal_loading, dtype=float), gram.shape[:-2])
    gram = gram + loading[..., None, None] * np.eye(K)
    return Hh @ np.linalg.inv(gram), loading


def normalize_power(W, total_power):
    fro2 = np.sum(np.abs(W) ** 2, axis=(-2, -1), keepdims=True)
    return W * np.sqrt(total_power / fro2)


def zf_precoder(H_eff, total_power, diagonal_loading=None) -> Beamformer:
    """Zero-forcing precoder scaled to ``||W||_F^2 = total_power``.

    Raises
    ------
    NearSingularChannelError
        When ``diagonal_loading == 0`` and ``H H^H`` is numerically singular.
    """
    H = np.asarray(H_eff, dtype=complex)
    if diagonal_loading == 0:
        gram = H @ np.conj(H.T)
        if np.any(_auto_loading(gram) > 0) or not np.any(gram):
            raise NearSingularChannelError("H_eff H_eff^H is near singular; pass a positive diagonal loading")
    W_zf, loading = zf_directions(H, diagonal_loading)
    W = normalize_power(W_zf, total_power)
    return Beamformer(W=W, power_allocation=np.sum(np.abs(W) ** 2, axis=0), diagonal_loading=float(loading))


def _power_constrained_solve(A, rhs, total_power, iters=200):
    """Solve ``(A + lam I) X = rhs`` with the smallest ``lam >= 0`` meeting the power budget."""
    evals, U = np.linalg.eigh(A)
    evals = np.clip(evals, 0.0, None)
    proj = np.conj(U.T) @ rhs
    weight = np.sum(np.abs(proj) ** 2, axis=1)
    tiny = 1e-14 * max(evals.max(), 1e-300)

    def power(lam):
        denom = evals + lam
        ok = denom > tiny
        return np.sum(weight[ok] / denom[ok] ** 2)

    def solve(lam):
        denom = evals + lam
        inv = np.where(denom > tiny, 1.0 / np.where(denom > tiny, denom, 1.0), 0.0)
        return U @ (inv[:, None] * proj)

    if power(0.0) <= total_power:
        return solve(0.0)
    lo, hi = 0.0, 1.0
    while power(hi) > total_power:
        hi *= 2.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if power(mid) > total_power:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * hi:
            break
    return solve(hi)


@dataclass
class WMMSEResult:
    beamformer: Beamformer
    trace: list[float] = field(default_factory=list)
    iterations: int = 0


def wmmse_precoder(H_eff, total_power, noise_power, max_iters=200, tol=1e-6, W_init=None) -> WMMSEResult:
    """Sum-rate WMMSE (equal user weights), initialised with equal-power MRT.

    Alternates MMSE receivers, MSE weights and a power-constrained precoder
    update.  ``trace`` holds the sum rate of the initial point and of every
    iterate; the best iterate is returned.
    """
    H = np.atleast_2d(np.asarray(H_eff, dtype=complex))
    K, M = H.shape
    if W_init is None:
        norms = np.linalg.norm(H, axis=1)
        if not np.any(norms > 0):
            raise DegenerateChannelError("all channel vectors are zero")
        safe = np.where(norms > 0, norms, 1.0)
        W = (np.conj(H) / safe[:, None]).T * np.sqrt(total_power / K)
    else:
        W = normalize_power(np.asarray(W_init, dtype=complex), total_power)

    best_W, best_rate = W, sum_rate(compute_sinr(H, W, noise_power))
    trace = [best_rate]
    it = 0
    for it in range(1, max_iters + 1):
        HW = H @ W
        total = np.sum(np.abs(HW) ** 2, axis=1) + noise_power
        desired = np.diag(HW)
        g = np.conj(desired) / total
        mse = 1.0 - np.abs(desired) ** 2 / total
        omega = 1.0 / np.maximum(mse, 1e-300)
        A = (np.conj(H.T) * (omega * np.abs(g) ** 2)) @ H
        rhs = np.conj(H.T) * (omega * np.conj(g))
        W = _power_constrained_solve(A, rhs, total_power)
        rate = sum_rate(compute_sinr(H, W, noise_power))
        trace.append(rate)
        if rate > best_rate:
            best_W, best_rate = W, rate
        if abs(trace[-1] - trace[-2]) <= tol * max(abs(trace[-2]), 1e-12):
            break
    bf = Beamformer(W=best_W, power_allocation=np.sum(np.abs(best_W) ** 2, axis=0))
    return WMMSEResult(beamformer=bf, trace=trace, iterations=it)
