"""TOML experiment configuration: strict parsing with path diagnostics.

Unknown keys are rejected and missing required fields are reported with
their full path (e.g. ``particle.radius_m``), so a config typo fails loudly
at load time rather than as a silent default.  The fingerprint is the
sha256 of the canonical JSON rendering of the effective config and is
stamped into every output file.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .core import (
    AIR_MOLECULAR_DIAMETER,
    AIR_MOLECULAR_MASS,
    AIR_VISCOSITY,
    Beam,
    CavityParams,
    GasEnvironment,
    Particle,
    SILICA_DENSITY,
    SILICA_INDEX,
)
from .detection import ReadoutModel
from .errors import ConfigError
from .feedback import Controller

_MISSING = object()


class _Section:
    """Tracks key consumption inside one TOML table."""

    def __init__(self, data: dict, path: str):
        if not isinstance(data, dict):
            raise ConfigError(f"section {path} must be a table")
        self._data = dict(data)
        self.path = path

    def take(self, key, kind, default=_MISSING):
        if key not in self._data:
            if default is _MISSING:
                raise ConfigError(f"missing required field {self.path}.{key}")
            return default
        value = self._data.pop(key)
        if kind is float:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"{self.path}.{key} must be a number")
            return float(value)
        if kind is int:
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(f"{self.path}.{key} must be an integer")
            return value
        if kind is bool:
            if not isinstance(value, bool):
                raise ConfigError(f"{self.path}.{key} must be a boolean")
            return value
        if kind is str:
            if not isinstance(value, str):
                raise ConfigError(f"{self.path}.{key} must be a string")
            return value
        if kind is list:
            if not isinstance(value, list):
                raise ConfigError(f"{self.path}.{key} must be a list")
            return value
        raise TypeError(f"unsupported kind {kind}")

    def subsection(self, key):
        if key not in self._data:
            return None
        value = self._data.pop(key)
        return _Section(value, f"{self.path}.{key}")

    def finish(self):
        if self._data:
            keys = ", ".join(sorted(self._data))
            raise ConfigError(f"unknown key(s) in {self.path}: {keys}")


@dataclass(frozen=True)
class SimulationSettings:
    duration: float
    dt: float | None = None
    seed: int = 0
    n_runs: int = 1
    store_every: int = 1
    include_recoil: bool = False
    duffing: bool = False


@dataclass(frozen=True)
class ScanSettings:
    kind: str          # "frequency" (strain vs trap frequency) or "pressure"
    start: float
    stop: float
    points: int = 50


@dataclass(frozen=True)
class SensingSettings:
    t_cm: float
    bandwidth: float | None = None
    measurement_time: float | None = None
    z_rms: float = 0.0
    q_eff: float = 1.0
    scan: ScanSettings | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    particle: Particle
    beam: Beam
    gas: GasEnvironment
    simulation: SimulationSettings | None
    feedback: Controller | None
    readout: ReadoutModel | None
    sensing: SensingSettings | None
    fingerprint: str
    raw: dict


def _build_particle(sec: _Section) -> Particle:
    shape = sec.take("shape", str, default="sphere")
    thickness = sec.take("thickness_m", float, default=None)
    particle = Particle(
        radius=sec.take("radius_m", float),
        density=sec.take("density_kg_m3", float, default=SILICA_DENSITY),
        refractive_index=sec.take("refractive_index", float, default=SILICA_INDEX),
        shape=shape,
        thickness=thickness,
        surface_temperature=sec.take("surface_temperature_k", float, default=None),
    )
    sec.finish()
    return particle


def _build_beam(sec: _Section) -> Beam:
    cavity = None
    cav = sec.subsection("cavity")
    if cav is not None:
        cavity = CavityParams(
            length=cav.take("length_m", float),
            finesse_disc=cav.take("finesse_disc", float),
            mode_volume=cav.take("mode_volume_m3", float),
            linewidth=cav.take("linewidth_rad_s", float),
        )
        cav.finish()
    polarization = sec.take("polarization_axis", list, default=[1.0, 0.0, 0.0])
    if len(polarization) != 3:
        raise ConfigError(f"{sec.path}.polarization_axis must have 3 entries")
    beam = Beam(
        power=sec.take("power_w", float),
        waist=sec.take("waist_m", float),
        wavelength=sec.take("wavelength_m", float),
        geometry=sec.take("geometry", str, default="single_tweezer"),
        polarization_axis=tuple(float(x) for x in polarization),
        contrast=sec.take("contrast", float, default=1.0),
        asymmetry_xy=sec.take("asymmetry_xy", float, default=1.0),
        cavity=cavity,
    )
    sec.finish()
    return beam


def _build_gas(sec: _Section) -> GasEnvironment:
    gas = GasEnvironment(
        pressure=sec.take("pressure_pa", float),
        temperature=sec.take("temperature_k", float, default=300.0),
        viscosity=sec.take("viscosity_pa_s", float, default=AIR_VISCOSITY),
        molecular_mass=sec.take("molecular_mass_kg", float, default=AIR_MOLECULAR_MASS),
        molecular_diameter=sec.take(
            "molecular_diameter_m", float, default=AIR_MOLECULAR_DIAMETER
        ),
    )
    sec.finish()
    return gas


def _build_simulation(sec: _Section) -> SimulationSettings:
    settings = SimulationSettings(
        duration=sec.take("duration_s", float),
        dt=sec.take("dt_s", float, default=None),
        seed=sec.take("seed", int, default=0),
        n_runs=sec.take("n_runs", int, default=1),
        store_every=sec.take("store_every", int, default=1),
        include_recoil=sec.take("include_recoil", bool, default=False),
        duffing=sec.take("duffing", bool, default=False),
    )
    sec.finish()
    if settings.n_runs < 1:
        raise ConfigError("simulation.n_runs must be >= 1")
    if settings.store_every < 1:
        raise ConfigError("simulation.store_every must be >= 1")
    return settings


def _build_feedback(sec: _Section) -> Controller:
    saturation = sec.take("force_saturation_n", float, default=None)
    controller = Controller(
        kind=sec.take("kind", str, default="none"),
        gain=sec.take("gain", float, default=0.0),
        measurement_delay=sec.take("delay_s", float, default=0.0),
        measurement_noise_psd=sec.take(
            "measurement_noise_psd_m2_hz", float, default=0.0
        ),
        force_saturation=saturation if saturation is not None else float("inf"),
    )
    sec.finish()
    return controller


def _build_readout(sec: _Section) -> ReadoutModel:
    readout = ReadoutModel(
        conversion=sec.take("conversion_v_per_m", float, default=1.0),
        shot_noise_floor=sec.take("shot_noise_floor_v2_hz", float, default=0.0),
        reference_phase=sec.take("reference_phase_rad", float, default=0.0),
        local_oscillator_power=sec.take(
            "local_oscillator_power_w", float, default=1e-3
        ),
        signal_power=sec.take("signal_power_w", float, default=1e-9),
        heterodyne_offset=sec.take("heterodyne_offset_rad_s", float, default=0.0),
    )
    sec.finish()
    return readout


def _build_sensing(sec: _Section) -> SensingSettings:
    scan = None
    scan_sec = sec.subsection("scan")
    if scan_sec is not None:
        scan = ScanSettings(
            kind=scan_sec.take("kind", str),
            start=scan_sec.take("start", float),
            stop=scan_sec.take("stop", float),
            points=scan_sec.take("points", int, default=50),
        )
        scan_sec.finish()
        if scan.kind not in ("frequency", "pressure"):
            raise ConfigError("sensing.scan.kind must be 'frequency' or 'pressure'")
        if scan.points < 2:
            raise ConfigError("sensing.scan.points must be >= 2")
        if not (scan.start > 0 and scan.stop > scan.start):
            raise ConfigError("sensing.scan requires 0 < start < stop")
    settings = SensingSettings(
        t_cm=sec.take("t_cm_k", float, default=300.0),
        bandwidth=sec.take("bandwidth_hz", float, default=None),
        measurement_time=sec.take("measurement_time_s", float, default=None),
        z_rms=sec.take("z_rms_m", float, default=0.0),
        q_eff=sec.take("q_eff", float, default=1.0),
        scan=scan,
    )
    sec.finish()
    if (settings.bandwidth is None) == (settings.measurement_time is None):
        raise ConfigError(
            "sensing needs exactly one of bandwidth_hz / measurement_time_s"
        )
    return settings


def config_fingerprint(raw: dict) -> str:
    canonical = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def parse_config(raw: dict, seed_override: int | None = None) -> ExperimentConfig:
    raw = json.loads(json.dumps(raw))  # deep copy via JSON round trip
    if seed_override is not None and "simulation" in raw:
        raw["simulation"]["seed"] = int(seed_override)
    root = _Section(raw, "config")
    try:
        particle = _build_particle(_require(root, "particle"))
        beam = _build_beam(_require(root, "beam"))
        gas = _build_gas(_require(root, "gas"))
        simulation = _maybe(root, "simulation", _build_simulation)
        feedback = _maybe(root, "feedback", _build_feedback)
        readout = _maybe(root, "readout", _build_readout)
        sensing = _maybe(root, "sensing", _build_sensing)
        root.finish()
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return ExperimentConfig(
        particle=particle,
        beam=beam,
        gas=gas,
        simulation=simulation,
        feedback=feedback,
        readout=readout,
        sensing=sensing,
        fingerprint=config_fingerprint(raw),
        raw=raw,
    )


def _require(root: _Section, key: str) -> _Section:
    sec = root.subsection(key)
    if sec is None:
        raise ConfigError(f"missing required section [{key}]")
    return sec


def _maybe(root: _Section, key: str, builder):
    sec = root.subsection(key)
    return None if sec is None else builder(sec)


def load_config(path, seed_override: int | None = None) -> ExperimentConfig:
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"TOML parse error in {path}: {exc}") from None
    return parse_config(raw, seed_override=seed_override)
