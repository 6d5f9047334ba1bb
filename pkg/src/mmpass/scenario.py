"""Scenario configuration, unit handling and reproducible user sampling.

All quantities are stored in SI units (metres, watts, rad/m).  Power levels
given in dBm are converted once, at construction time, through
:meth:`PowerAndQoS.from_dbm`.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .errors import InvalidConfigError

SPEED_OF_LIGHT = 2.99792458e8

DEFAULT_FREQUENCY = 28e9
DEFAULT_WAVELENGTH = SPEED_OF_LIGHT / DEFAULT_FREQUENCY

# Decay rate and peak coupling are not fixed by the physical description; the
# peak coupling keeps |Omega| * L >= pi/2 for the default 6 mm coupling length,
# so that a unit coupling coefficient is reachable at zero spacing.
DEFAULT_DECAY_RATE = 200.0
DEFAULT_PEAK_COUPLING = 300.0


def dbm_to_watt(dbm):
    w = 10.0 ** ((np.asarray(dbm, dtype=float) - 30.0) / 10.0)
    return float(w) if w.ndim == 0 else w


def watt_to_dbm(watt):
    d = 10.0 * np.log10(np.asarray(watt, dtype=float)) + 30.0
    return float(d) if d.ndim == 0 else d


def rate_to_sinr(rate):
    """Shannon inverse: minimum SINR that supports ``rate`` bps/Hz."""
    return 2.0 ** rate - 1.0


class Regime(str, Enum):
    NON_LEAKAGE = "NonLeakage"
    WEAK_LEAKAGE = "WeakLeakage"

    @classmethod
    def parse(cls, value) -> "Regime":
        if isinstance(value, cls):
            return value
        aliases = {"nl": cls.NON_LEAKAGE, "wl": cls.WEAK_LEAKAGE}
        key = str(value)
        if key.lower() in aliases:
            return aliases[key.lower()]
        try:
            return cls(key)
        except ValueError:
            raise InvalidConfigError(f"unknown regime {value!r}") from None


@dataclass(frozen=True)
class CarrierConfig:
    carrier_frequency: float = DEFAULT_FREQUENCY
    speed_of_light: float = SPEED_OF_LIGHT

    def __post_init__(self):
        if not self.carrier_frequency > 0:
            raise InvalidConfigError(f"carrier frequency must be positive, got {self.carrier_frequency}")

    @property
    def wavelength(self) -> float:
        return self.speed_of_light / self.carrier_frequency

    @property
    def free_space_wavenumber(self) -> float:
        return 2.0 * math.pi / self.wavelength


@dataclass(frozen=True)
class GuidedMode:
    """One guided mode of the multi-mode waveguide.

    ``peak_coupling_magnitude`` is the coupling strength at zero PA spacing
    under ideal field matching; ``matched_field_selectivity`` scales it for the
    PA group that is phase matched to this mode.
    """

    index: int
    effective_refractive_index: float
    evanescent_decay_rate: float = DEFAULT_DECAY_RATE
    peak_coupling_magnitude: float = DEFAULT_PEAK_COUPLING
    matched_field_selectivity: float = 1.0

    def __post_init__(self):
        if self.effective_refractive_index < 1.0:
            raise InvalidConfigError("effective refractive index must be >= 1")
        if not self.evanescent_decay_rate > 0:
            raise InvalidConfigError("evanescent decay rate must be positive")
        if not self.peak_coupling_magnitude > 0:
            raise InvalidConfigError("peak coupling magnitude must be positive")
        if not 0.0 <= self.matched_field_selectivity <= 1.0:
            raise InvalidConfigError("field selectivity must lie in [0, 1]")

    def propagation_constant(self, carrier: CarrierConfig) -> float:
        return self.effective_refractive_index * carrier.free_space_wavenumber


@dataclass(frozen=True)
class WaveguideGeometry:
    length: float = 20.0
    height: float = 2.5
    coupling_length: float = 6e-3
    min_spacing: float = DEFAULT_WAVELENGTH / 2.0
    position_bounds: tuple[float, float] = (0.0, 20.0)

    def __post_init__(self):
        lo, hi = self.position_bounds
        if not 0.0 <= lo < hi <= self.length:
            raise InvalidConfigError(f"position bounds {self.position_bounds} not inside [0, {self.length}]")
        if not self.min_spacing > 0:
            raise InvalidConfigError("min spacing must be positive")
        if not self.coupling_length > 0:
            raise InvalidConfigError("coupling length must be positive")
        if not self.height > 0:
            raise InvalidConfigError("PA height must be positive")
        object.__setattr__(self, "position_bounds", (float(lo), float(hi)))

    @property
    def x_min(self) -> float:
        return self.position_bounds[0]

    @property
    def x_max(self) -> float:
        return self.position_bounds[1]


@dataclass(frozen=True)
class UserLayout:
    along_axis: tuple[float, ...]
    lateral: tuple[float, ...]

    def __post_init__(self):
        a = tuple(float(v) for v in self.along_axis)
        y = tuple(float(v) for v in self.lateral)
        if len(a) != len(y) or not a:
            raise InvalidConfigError("along_axis and lateral must have the same nonzero length")
        if len(set(zip(a, y))) != len(a):
            raise InvalidConfigError("user positions must be distinct")
        object.__setattr__(self, "along_axis", a)
        object.__setattr__(self, "lateral", y)

    @property
    def count(self) -> int:
        return len(self.along_axis)

    def heights(self, pa_height: float) -> np.ndarray:
        """Per-user ``z_k = sqrt(y_k^2 + h_PA^2)``."""
        return np.hypot(np.asarray(self.lateral), pa_height)


@dataclass(frozen=True)
class PowerAndQoS:
    max_power: float
    noise_power: float
    min_rate: float = 1.0

    def __post_init__(self):
        if not (self.max_power > 0 and self.noise_power > 0 and self.min_rate >= 0):
            raise InvalidConfigError("powers must be positive and the rate requirement nonnegative")

    @classmethod
    def from_dbm(cls, max_power_dbm=27.0, noise_power_dbm=-94.0, min_rate=1.0) -> "PowerAndQoS":
        return cls(dbm_to_watt(max_power_dbm), dbm_to_watt(noise_power_dbm), min_rate)

    @property
    def min_sinr(self) -> float:
        return rate_to_sinr(self.min_rate)


def default_modes() -> tuple[GuidedMode, GuidedMode]:
    return (GuidedMode(1, 1.7036), GuidedMode(2, 1.0892))


@dataclass(frozen=True)
class ScenarioConfig:
    carrier: CarrierConfig = field(default_factory=CarrierConfig)
    modes: tuple[GuidedMode, ...] = field(default_factory=default_modes)
    geometry: WaveguideGeometry = field(default_factory=WaveguideGeometry)
    users: UserLayout = field(default_factory=lambda: UserLayout((6.0, 12.0), (4.0, 6.0)))
    power: PowerAndQoS = field(default_factory=PowerAndQoS.from_dbm)
    regime: Regime = Regime.NON_LEAKAGE
    unmatched_field_selectivity: float = 0.5
    pa_count: int = 2
    group_sizes: tuple[int, ...] = (1, 1)

    def __post_init__(self):
        object.__setattr__(self, "regime", Regime.parse(self.regime))
        object.__setattr__(self, "modes", tuple(self.modes))
        object.__setattr__(self, "group_sizes", tuple(int(s) for s in self.group_sizes))
        if len(self.group_sizes) != len(self.modes):
            raise InvalidConfigError("one PA group per guided mode is required")
        if any(s < 1 for s in self.group_sizes):
            raise InvalidConfigError("every PA group needs at least one PA")
        if sum(self.group_sizes) != self.pa_count:
            raise InvalidConfigError(f"group sizes {self.group_sizes} do not sum to pa_count={self.pa_count}")
        if not 0.0 <= self.unmatched_field_selectivity <= 1.0:
            raise InvalidConfigError("unmatched field selectivity must lie in [0, 1]")
        span = self.geometry.x_max - self.geometry.x_min
        if (self.pa_count - 1) * self.geometry.min_spacing > span:
            raise InvalidConfigError("PA count does not fit in the position bounds at min spacing")

    # derived quantities -------------------------------------------------
    @property
    def wavelength(self) -> float:
        return self.carrier.wavelength

    @property
    def wavenumber(self) -> float:
        return self.carrier.free_space_wavenumber

    @property
    def betas(self) -> np.ndarray:
        return np.array([m.propagation_constant(self.carrier) for m in self.modes])

    @property
    def mu_unmatch(self) -> float:
        """Unmatched selectivity actually in force (zero in the non-leakage regime)."""
        if self.regime is Regime.NON_LEAKAGE:
            return 0.0
        return self.unmatched_field_selectivity

    @property
    def user_heights(self) -> np.ndarray:
        return self.users.heights(self.geometry.height)

    @property
    def group_index(self) -> np.ndarray:
        """Mode index (0-based) of every PA, groups laid out as consecutive blocks."""
        return np.repeat(np.arange(len(self.group_sizes)), self.group_sizes)

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def with_pa_groups(self, group_sizes: Sequence[int]) -> "ScenarioConfig":
        sizes = tuple(int(s) for s in group_sizes)
        return self.replace(pa_count=sum(sizes), group_sizes=sizes)

    # serialization ------------------------------------------------------
    def to_dict(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        d["regime"] = self.regime.value
        d["modes"] = [dataclasses.asdict(m) for m in self.modes]
        d["geometry"]["position_bounds"] = list(self.geometry.position_bounds)
        d["users"] = {k: list(v) for k, v in d["users"].items()}
        d["group_sizes"] = list(self.group_sizes)
        return d

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ScenarioConfig":
        data = dict(data)
        _reject_unknown("scenario", data, cls)
        parts: dict[str, Any] = {}
        nested = {
            "carrier": CarrierConfig,
            "geometry": WaveguideGeometry,
            "users": UserLayout,
            "power": PowerAndQoS,
        }
        for key, typ in nested.items():
            if key in data:
                sub = dict(data.pop(key))
                _reject_unknown(key, sub, typ)
                if key == "geometry" and "position_bounds" in sub:
                    sub["position_bounds"] = tuple(sub["position_bounds"])
                if key == "users":
                    sub = {k: tuple(v) for k, v in sub.items()}
                parts[key] = typ(**sub)
        if "modes" in data:
            modes = []
            for m in data.pop("modes"):
                _reject_unknown("mode", m, GuidedMode)
                modes.append(GuidedMode(**m))
            parts["modes"] = tuple(modes)
        if "group_sizes" in data:
            data["group_sizes"] = tuple(data["group_sizes"])
        return cls(**parts, **data)

    @classmethod
    def load(cls, path) -> "ScenarioConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))


def _reject_unknown(where: str, data: dict, typ) -> None:
    known = {f.name for f in dataclasses.fields(typ)}
    unknown = set(data) - known
    if unknown:
        raise InvalidConfigError(f"unknown keys in {where}: {sorted(unknown)}")


def derive_wave_quantities(carrier_frequency: float, effective_indices: Sequence[float]):
    """Return ``(wavelength, wavenumber, betas)`` for the given carrier and modes."""
    if not carrier_frequency > 0:
        raise InvalidConfigError(f"carrier frequency must be positive, got {carrier_frequency}")
    n_eff = np.asarray(effective_indices, dtype=float)
    if np.any(n_eff < 1.0):
        raise InvalidConfigError("effective refractive indices must be >= 1")
    wavelength = SPEED_OF_LIGHT / carrier_frequency
    k0 = 2.0 * math.pi / wavelength
    return wavelength, k0, n_eff * k0


def sample_user_layout(
    seed,
    a_bounds: tuple[float, float] = (3.0, 20.0),
    y_bounds: tuple[float, float] = (3.0, 10.0),
    n_users: int = 2,
    ordered: bool = True,
) -> UserLayout:
    """Draw users uniformly in the given boxes.

    With ``ordered`` the users are sorted by their along-axis coordinate so
    that ``a_1 <= a_2``; the lateral coordinates travel with their user.
    """
    for lo, hi in (a_bounds, y_bounds):
        if lo > hi:
            raise InvalidConfigError(f"degenerate sampling bounds ({lo}, {hi})")
    rng = np.random.default_rng(seed)
    a = rng.uniform(a_bounds[0], a_bounds[1], n_users)
    y = rng.uniform(y_bounds[0], y_bounds[1], n_users)
    if ordered:
        order = np.argsort(a, kind="stable")
        a, y = a[order], y[order]
    return UserLayout(tuple(a), tuple(y))


def default_scenario(
    regime=Regime.NON_LEAKAGE,
    group_sizes: Sequence[int] = (1, 1),
    users: UserLayout | None = None,
    max_power_dbm: float = 27.0,
    noise_power_dbm: float = -94.0,
    min_rate: float = 1.0,
    unmatched_field_selectivity: float = 0.5,
    carrier_frequency: float = DEFAULT_FREQUENCY,
) -> ScenarioConfig:
    """Scenario with the numerical-study defaults (28 GHz, 20 m waveguide, 2.5 m height)."""
    carrier = CarrierConfig(carrier_frequency)
    geometry = WaveguideGeometry(min_spacing=carrier.wavelength / 2.0)
    sizes = tuple(int(s) for s in group_sizes)
    return ScenarioConfig(
        carrier=carrier,
        geometry=geometry,
        users=users if users is not None else UserLayout((6.0, 12.0), (4.0, 6.0)),
        power=PowerAndQoS.from_dbm(max_power_dbm, noise_power_dbm, min_rate),
        regime=Regime.parse(regime),
        unmatched_field_selectivity=unmatched_field_selectivity,
        pa_count=sum(sizes),
        group_sizes=sizes,
    )
