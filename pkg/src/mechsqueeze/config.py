"""Run configuration: JSON documents with unit-suffixed keys.

Keys ending in ``_hz`` hold ordinary frequencies (the rate ``2*pi*f`` is used
internally); ``x_zp_m`` is in metres; photon numbers and occupations are
dimensionless. Unknown keys are rejected at every level.
"""

from __future__ import annotations

import json
import os
from dataclasses import MISSING, dataclass, field, fields
from pathlib import Path

from .fitting import PARAM_NAMES, Prior
from .model import BathState, PumpConfig, SystemParams, bae_device, hz, reference_device

CONFIG_DIR_ENV = "MECHSQUEEZE_CONFIG_DIR"


class ConfigError(ValueError):
    pass


DEVICE_KEYS = {
    "omega_m_hz": "omega_m", "omega_c_hz": "omega_c", "kappa_hz": "kappa",
    "kappa_in_hz": "kappa_in", "kappa_out_hz": "kappa_out", "gamma_m_hz": "gamma_m",
    "g0_hz": "g0", "x_zp_m": "x_zp",
}
PRESETS = {"reference": reference_device, "bae": bae_device}

# prior names in files; rates carry the _hz suffix
PRIOR_KEYS = {
    "n_c_th": ("n_c_th", 1.0),
    "gamma_n_m_hz": ("gamma_n_m", hz(1.0)),
    "s0": ("s0", 1.0),
    "gain": ("gain", 1.0),
    "delta_minus_hz": ("delta_minus", hz(1.0)),
    "delta_plus_hz": ("delta_plus", hz(1.0)),
}


@dataclass(frozen=True)
class Schedule:
    kind: str = "single"
    ratios: tuple = ()
    total_photons: float = 0.0
    n_p_minus: tuple = ()
    ratio: float = 0.0
    phases_rad: tuple = ()


@dataclass(frozen=True)
class SpectrumSettings:
    s0: float = 0.5
    gain: float = 1.0
    center_offset_hz: float = 0.0
    span_hz: float = 1.2e6
    n_points: int = 400
    n_avg: int = 200
    noise: bool = True


@dataclass(frozen=True)
class FitSettings:
    priors: dict = field(default_factory=dict)
    n_walkers: int = 32
    n_steps: int = 1500
    burn_in: int = 500
    likelihood: str = "gaussian"


@dataclass(frozen=True)
class ProbeSettings:
    n_p_probe: float = 0.95e6
    probe_offset_hz: float = 300e3
    span_hz: float = 200e3
    n_points: int = 2001
    s0: float = 0.2
    n_avg: int = 0  # 0 = noiseless
    include_background: bool = True


@dataclass(frozen=True)
class CalibrationSettings:
    side: str = "red"
    transmission_minus: float = 1.0
    transmission_plus: float = 1.0
    weak_fraction: float = 0.1
    gain_plus: float = 0.0
    gain_minus: float = 0.0
    g_minus_guess_hz: float = 0.0


@dataclass(frozen=True)
class RunConfig:
    params: SystemParams
    pumps: PumpConfig
    baths: BathState
    schedule: Schedule = Schedule()
    spectrum: SpectrumSettings = SpectrumSettings()
    fit: FitSettings = FitSettings()
    probe: ProbeSettings = ProbeSettings()
    calibration: CalibrationSettings = CalibrationSettings()
    output_dir: str = "out"
    seed: int = 0


def _check_keys(section: str, data: dict, allowed) -> None:
    if not isinstance(data, dict):
        raise ConfigError(f"section {section!r} must be an object")
    unknown = set(data) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in {section!r}: {sorted(unknown)}")


def _coerce(where: str, value, default):
    """Check ``value`` against the type of the field default."""
    number = (int, float)
    if isinstance(default, bool):
        ok = isinstance(value, bool)
    elif isinstance(default, int):
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif isinstance(default, float):
        ok = isinstance(value, number) and not isinstance(value, bool)
        value = float(value) if ok else value
    elif isinstance(default, tuple):
        ok = isinstance(value, list) and all(
            isinstance(v, number) and not isinstance(v, bool) for v in value)
        value = tuple(float(v) for v in value) if ok else value
    else:
        ok = isinstance(value, type(default))
    if not ok:
        raise ConfigError(f"{where}: expected {type(default).__name__}, got {value!r}")
    return value


def _dataclass_section(name, data, cls):
    allowed = {f.name for f in fields(cls)}
    _check_keys(name, data, allowed)
    values = {}
    for f in fields(cls):
        if f.name in data:
            default = f.default_factory() if f.default is MISSING else f.default
            values[f.name] = _coerce(f"{name}.{f.name}", data[f.name], default)
    try:
        return cls(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {name!r}: {exc}") from exc


def _parse_device(data: dict) -> SystemParams:
    _check_keys("device", data, set(DEVICE_KEYS) | {"preset"})
    preset = data.get("preset", "reference" if len(data) < len(DEVICE_KEYS) else None)
    overrides = {DEVICE_KEYS[k]: (float(v) if k == "x_zp_m" else hz(float(v)))
                 for k, v in data.items() if k != "preset"}
    try:
        if preset is None:
            return SystemParams(**overrides)
        if preset not in PRESETS:
            raise ConfigError(f"unknown device preset {preset!r}")
        if "kappa" in overrides:
            overrides.setdefault("kappa_in", overrides["kappa"] / 2)
            overrides.setdefault("kappa_out", overrides["kappa"] / 2)
        return PRESETS[preset](**overrides)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid device: {exc}") from exc


def _parse_pumps(data: dict) -> PumpConfig:
    _check_keys("pumps", data, {"n_p_minus", "n_p_plus", "delta_minus_hz", "delta_plus_hz"})
    try:
        return PumpConfig(
            n_p_minus=float(data.get("n_p_minus", 0.0)),
            n_p_plus=float(data.get("n_p_plus", 0.0)),
            delta_minus=hz(float(data.get("delta_minus_hz", 0.0))),
            delta_plus=hz(float(data.get("delta_plus_hz", 0.0))),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid pumps: {exc}") from exc


def _parse_baths(data: dict) -> BathState:
    _check_keys("baths", data, {"n_m_th", "n_c_th"})
    try:
        return BathState(float(data.get("n_m_th", 0.0)), float(data.get("n_c_th", 0.0)))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid baths: {exc}") from exc


def parse_prior(name: str, spec: dict) -> tuple[str, Prior]:
    if name not in PRIOR_KEYS:
        raise ConfigError(f"unknown fit parameter {name!r}")
    internal, unit = PRIOR_KEYS[name]
    kind = spec.get("kind")
    keys = {"fixed": {"kind", "value"}, "normal": {"kind", "mean", "sd"},
            "uniform": {"kind", "lo", "hi"}, "log_uniform": {"kind", "lo", "hi"}}
    if kind not in keys:
        raise ConfigError(f"prior for {name!r} has unknown kind {kind!r}")
    _check_keys(f"fit.priors.{name}", spec, keys[kind])
    try:
        if kind == "fixed":
            return internal, Prior.fixed(float(spec["value"]) * unit)
        if kind == "normal":
            return internal, Prior.normal(float(spec["mean"]) * unit, float(spec["sd"]) * unit)
        return internal, Prior(kind, float(spec["lo"]) * unit, float(spec["hi"]) * unit)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid prior for {name!r}: {exc}") from exc


def parse_config(data: dict) -> RunConfig:
    top = {"device", "pumps", "baths", "schedule", "spectrum", "fit", "probe",
           "calibration", "output_dir", "seed", "description"}
    _check_keys("config", data, top)
    params = _parse_device(data.get("device", {"preset": "reference"}))
    pumps = _parse_pumps(data.get("pumps", {"n_p_minus": 1.26e7, "n_p_plus": 0.51e7}))
    baths = _parse_baths(data.get("baths", {"n_m_th": 50.0, "n_c_th": 0.5}))
    schedule = _dataclass_section("schedule", data.get("schedule", {}), Schedule)
    if schedule.kind not in ("single", "ratio_sweep", "power_sweep", "phase_sweep"):
        raise ConfigError(f"unknown schedule kind {schedule.kind!r}")
    if schedule.kind == "ratio_sweep" and not (schedule.ratios and schedule.total_photons > 0):
        raise ConfigError("ratio_sweep needs 'ratios' and a positive 'total_photons'")
    if schedule.kind == "power_sweep" and not schedule.n_p_minus:
        raise ConfigError("power_sweep needs 'n_p_minus'")
    fit = _dataclass_section("fit", data.get("fit", {}), FitSettings)
    for name, spec in fit.priors.items():
        parse_prior(name, spec)
    if fit.likelihood not in ("gaussian", "gamma"):
        raise ConfigError("fit.likelihood must be 'gaussian' or 'gamma'")
    seed = data.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ConfigError("seed must be an integer")
    return RunConfig(
        params=params,
        pumps=pumps,
        baths=baths,
        schedule=schedule,
        spectrum=_dataclass_section("spectrum", data.get("spectrum", {}), SpectrumSettings),
        fit=fit,
        probe=_dataclass_section("probe", data.get("probe", {}), ProbeSettings),
        calibration=_dataclass_section("calibration", data.get("calibration", {}), CalibrationSettings),
        output_dir=str(data.get("output_dir", "out")),
        seed=seed,
    )


def resolve_config_path(path) -> Path | None:
    """Locate a config file, falling back to ``$MECHSQUEEZE_CONFIG_DIR``."""
    env_dir = os.environ.get(CONFIG_DIR_ENV)
    if path is None:
        if env_dir and (Path(env_dir) / "default.json").is_file():
            return Path(env_dir) / "default.json"
        return None
    p = Path(path)
    if p.is_file():
        return p
    if env_dir and (Path(env_dir) / p).is_file():
        return Path(env_dir) / p
    raise ConfigError(f"config file not found: {path}")


def load_config(path=None) -> RunConfig:
    resolved = resolve_config_path(path)
    if resolved is None:
        return parse_config({})
    try:
        data = json.loads(resolved.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{resolved}: {exc}") from exc
    return parse_config(data)
