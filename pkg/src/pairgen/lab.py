"""Laboratory rate estimates for continuous-wave pair generation.

All quantities in SI units. Two built-in presets describe the cesium 6S-8S
vapor transition and the CuCl biexciton resonance.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from scipy.constants import c as SPEED_OF_LIGHT
from scipy.constants import e as ELEMENTARY_CHARGE
from scipy.constants import h as PLANCK
from scipy.constants import hbar as HBAR

EXTINCTION_THRESHOLD = 1e-6


class ScenarioError(ValueError):
    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key


@dataclass(frozen=True)
class LabScenario:
    beta: float  # two-photon absorption coefficient, m/W
    refraction_index: float
    cross_section: float  # m^2
    length: float  # m
    intensity: float  # W/m^2
    wavelength: float | None = None  # m
    photon_energy: float | None = None  # J

    def __post_init__(self):
        if (self.wavelength is None) == (self.photon_energy is None):
            raise ScenarioError(
                "give exactly one of wavelength or photon_energy", key="wavelength"
            )
        # beta = 0 and intensity = 0 are allowed degenerate cases (no absorption / no light)
        for name in ("beta", "intensity"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ScenarioError(f"{name} must be non-negative, got {value}", key=name)
        for name in ("refraction_index", "cross_section", "length", "wavelength", "photon_energy"):
            value = getattr(self, name)
            if value is None:
                continue
            if not (math.isfinite(value) and value > 0):
                raise ScenarioError(f"{name} must be positive, got {value}", key=name)

    @property
    def energy(self) -> float:
        """Photon energy hbar*omega0 in joules."""
        if self.photon_energy is not None:
            return self.photon_energy
        return PLANCK * SPEED_OF_LIGHT / self.wavelength

    def with_(self, **changes) -> "LabScenario":
        data = asdict(self)
        data.update(changes)
        if "photon_energy" in changes:
            data["wavelength"] = None
        if "wavelength" in changes:
            data["photon_energy"] = None
        return LabScenario(**data)


@dataclass(frozen=True)
class RateReport:
    kappa: float
    n_pair: float
    n_laser: float
    ratio_R: float
    feasible: bool
    threshold: float

    def to_dict(self) -> dict:
        return asdict(self)


def ev_to_joule(ev: float) -> float:
    return ev * ELEMENTARY_CHARGE


PRESETS: dict[str, LabScenario] = {
    "cesium-6s8s": LabScenario(
        beta=1.8e-11,
        wavelength=822e-9,
        refraction_index=1.0,
        cross_section=1e-10,
        length=2e-2,
        intensity=1e10,
    ),
    "cucl-biexciton": LabScenario(
        beta=1e-3,
        photon_energy=ev_to_joule(3.2),
        refraction_index=3.0,
        cross_section=1e-10,
        length=2e-2,
        intensity=1e4,
    ),
}


def preset(name: str) -> LabScenario:
    try:
        return PRESETS[name]
    except KeyError:
        raise ScenarioError(
            f"unknown preset {name!r}; choose from {', '.join(sorted(PRESETS))}", key="preset"
        ) from None


def normalized_rate_kappa(scenario: LabScenario) -> float:
    """kappa = beta * hbar*omega0 * c / (n^2 A L)."""
    s = scenario
    return s.beta * s.energy * SPEED_OF_LIGHT / (s.refraction_index**2 * s.cross_section * s.length)


def pair_rate(scenario: LabScenario) -> float:
    """N_pair = c beta^2 I^2 L / (8 n)."""
    s = scenario
    return SPEED_OF_LIGHT * s.beta**2 * s.intensity**2 * s.length / (8 * s.refraction_index)


def laser_photon_rate(scenario: LabScenario) -> float:
    """N_laser = A I / (hbar omega0)."""
    return scenario.cross_section * scenario.intensity / scenario.energy


def discrimination_ratio(
    scenario: LabScenario, threshold: float = EXTINCTION_THRESHOLD
) -> RateReport:
    n_pair = pair_rate(scenario)
    n_laser = laser_photon_rate(scenario)
    ratio = n_pair / n_laser if n_laser > 0 else 0.0
    return RateReport(
        kappa=normalized_rate_kappa(scenario),
        n_pair=n_pair,
        n_laser=n_laser,
        ratio_R=ratio,
        feasible=ratio >= threshold,
        threshold=threshold,
    )


@dataclass(frozen=True)
class NormalizedUnits:
    """A scenario expressed in the units of the master equation.

    ``kappa`` as defined above has dimension 1/length; the dimensionless
    interaction time is kappa times the optical path n L. With the transit
    time t = n L / c and |alpha|^2 = N_laser t photons in the interaction
    volume, |alpha|^2 T = beta I L, and the pair probability per transit
    (|alpha|^2 T)^2 / 8 divided by t gives c beta^2 I^2 L / (8 n) exactly.
    The V-mode photon number per transit is twice the pair probability.
    """

    transit_time: float
    photon_number: float  # |alpha|^2
    interaction_time: float  # T

    @property
    def strength(self) -> float:
        return self.photon_number * self.interaction_time

    @property
    def pair_probability(self) -> float:
        return self.strength**2 / 8

    @property
    def pair_rate(self) -> float:
        return self.pair_probability / self.transit_time


def normalized_units(scenario: LabScenario) -> NormalizedUnits:
    s = scenario
    optical_path = s.refraction_index * s.length
    transit = optical_path / SPEED_OF_LIGHT
    return NormalizedUnits(
        transit_time=transit,
        photon_number=laser_photon_rate(s) * transit,
        interaction_time=normalized_rate_kappa(s) * optical_path,
    )


SCENARIO_KEYS = {f.name for f in fields(LabScenario)}


def parse_scenario(text: str) -> LabScenario:
    """Parse ``key = value`` lines (SI units, '#' comments) into a scenario."""
    values: dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line:
            key, _, value = line.partition("=")
        elif ":" in line:
            key, _, value = line.partition(":")
        else:
            raise ScenarioError(f"line {lineno}: expected 'key = value'", key=line)
        key = key.strip()
        if key not in SCENARIO_KEYS:
            raise ScenarioError(f"line {lineno}: unknown key {key!r}", key=key)
        if key in values:
            raise ScenarioError(f"line {lineno}: duplicate key {key!r}", key=key)
        try:
            values[key] = float(value)
        except ValueError:
            raise ScenarioError(f"line {lineno}: {key} is not a number: {value.strip()!r}", key=key) from None
    missing = {"beta", "refraction_index", "cross_section", "length", "intensity"} - values.keys()
    if missing:
        key = sorted(missing)[0]
        raise ScenarioError(f"missing key {key!r}", key=key)
    return LabScenario(**values)


def load_scenario(path: str | Path) -> LabScenario:
    return parse_scenario(Path(path).read_text(encoding="utf-8"))
