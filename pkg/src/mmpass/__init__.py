"""Simulation and optimization of multi-mode pinching-antenna systems (PASS).

A dielectric waveguide carries several guided modes.  Pinching antennas
(PAs) clipped onto it radiate the mode they are phase-matched to, so two
users can be served at once through mode-domain multiplexing.
"""

from .baselines import fixed_miso, tdma_single_mode
from .beamforming import compute_sinr, mrt_waterfilling, rate_report, sum_rate, wmmse_precoder, zf_precoder
from .channel import effective_channel
from .cmt import cme_integrate, coupling_coefficient, radiation_profile
from .metaheuristics import DEParams, PSOParams, de_zf, pso_zf
from .scenario import Regime, ScenarioConfig, default_scenario, sample_user_layout
from .twopa import optimize_two_pa

__version__ = "0.1.0"

__all__ = [
    "DEParams",
    "PSOParams",
    "Regime",
    "ScenarioConfig",
    "cme_integrate",
    "compute_sinr",
    "coupling_coefficient",
    "de_zf",
    "default_scenario",
    "effective_channel",
    "fixed_miso",
    "mrt_waterfilling",
    "optimize_two_pa",
    "pso_zf",
    "radiation_profile",
    "rate_report",
    "sample_user_layout",
    "sum_rate",
    "tdma_single_mode",
    "wmmse_precoder",
    "zf_precoder",
]
