"""TOML configuration: plant, vehicle (controller + guidance) and scenario files.

Every file carries ``schema_version``. Unknown keys are errors, and every
error names the file and the offending field so a typo never silently falls
back to a default.
"""

from __future__ import annotations

import dataclasses
import math
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .controller import ControllerConfig
from .effectiveness import DEFAULT_SCHEDULE, SCHEDULE_FIELDS, schedule_from_mapping
from .errors import ConfigError
from .guidance import FlightPlan, FollowLine, GotoWaypoint, GuidanceGains, Hover
from .sim.plant import PLANT_FIELDS, plant_from_mapping
from .sim.sensors import SensorConfig
from .sim.wind import WindConfig

SCHEMA_VERSION = 1


def data_path(*parts: str) -> Path:
    return Path(str(resources.files("tailsitter_indi").joinpath("data", *parts)))


def preset_names() -> list[str]:
    return sorted(p.stem for p in data_path("scenarios").glob("*.toml"))


def resolve_scenario(name_or_path: str) -> Path:
    """A path to an existing file, or the name of a bundled preset."""
    p = Path(name_or_path)
    if p.is_file():
        return p
    preset = data_path("scenarios", f"{name_or_path}.toml")
    if preset.is_file():
        return preset
    raise ConfigError(f"{name_or_path}: no such file or preset (presets: {', '.join(preset_names())})")


def load_toml(path) -> dict:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"{path}: file not found") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"{path}: schema_version must be {SCHEMA_VERSION}, got {version!r}")
    return doc


def _check_keys(where: str, table: dict, allowed) -> None:
    unknown = sorted(set(table) - set(allowed))
    if unknown:
        raise ConfigError(f"{where}: unknown field(s) {', '.join(unknown)}")


def _number(where: str, value, positive: bool = False, nonneg: bool = False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    v = float(value)
    if not math.isfinite(v):
        raise ConfigError(f"{where}: must be finite")
    if positive and v <= 0.0:
        raise ConfigError(f"{where}: must be positive, got {v}")
    if nonneg and v < 0.0:
        raise ConfigError(f"{where}: must be non-negative, got {v}")
    return v


def _vector(where: str, value, n: int) -> tuple:
    if not isinstance(value, list) or len(value) != n:
        raise ConfigError(f"{where}: expected a list of {n} numbers, got {value!r}")
    return tuple(_number(f"{where}[{i}]", v) for i, v in enumerate(value))


def _apply_dataclass(where: str, obj, table: dict):
    fields = {f.name: f for f in dataclasses.fields(obj)}
    _check_keys(where, table, [k for k in fields if k != "schedule"])
    updates = {}
    for key, value in table.items():
        current = getattr(obj, key)
        loc = f"{where}.{key}"
        if isinstance(current, bool):
            if not isinstance(value, bool):
                raise ConfigError(f"{loc}: expected true/false, got {value!r}")
            updates[key] = value
        elif isinstance(current, int) and not isinstance(current, bool):
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(f"{loc}: expected an integer, got {value!r}")
            updates[key] = value
        elif isinstance(current, float):
            updates[key] = _number(loc, value)
        elif isinstance(current, tuple):
            updates[key] = _vector(loc, value, len(current))
        else:
            updates[key] = value
    return dataclasses.replace(obj, **updates)


# ---------------------------------------------------------------- plant


@dataclass
class PlantConfig:
    params: np.ndarray
    sensors: SensorConfig
    source: str = ""


def parse_plant(doc: dict, where: str = "plant config") -> PlantConfig:
    _check_keys(where, doc, ("schema_version", "plant", "sensors"))
    table = doc.get("plant", {})
    _check_keys(f"{where}: [plant]", table, PLANT_FIELDS)
    for k, v in table.items():
        _number(f"{where}: plant.{k}", v)
    for k in ("mass", "Ixx", "Iyy", "Izz", "dt"):
        if k in table:
            _number(f"{where}: plant.{k}", table[k], positive=True)
    params = plant_from_mapping(table)
    sensors = _check_sensors(where, _apply_dataclass(f"{where}: sensors", SensorConfig(), doc.get("sensors", {})))
    return PlantConfig(params, sensors, where)


def _check_sensors(where: str, sensors: SensorConfig) -> SensorConfig:
    for f in dataclasses.fields(sensors):
        _number(f"{where}: sensors.{f.name}", getattr(sensors, f.name), nonneg=True)
    _number(f"{where}: sensors.gnss_rate_hz", sensors.gnss_rate_hz, positive=True)
    return sensors


def load_plant(path) -> PlantConfig:
    return parse_plant(load_toml(path), str(path))


# ---------------------------------------------------------------- vehicle


@dataclass
class VehicleConfig:
    controller: ControllerConfig
    gains: GuidanceGains
    source: str = ""


def parse_vehicle(doc: dict, where: str = "vehicle config") -> VehicleConfig:
    _check_keys(where, doc, ("schema_version", "controller", "schedule", "guidance"))
    ctrl = _apply_dataclass(f"{where}: controller", ControllerConfig(), doc.get("controller", {}))
    sched = doc.get("schedule", {})
    _check_keys(f"{where}: [schedule]", sched, SCHEDULE_FIELDS)
    for k, v in sched.items():
        _number(f"{where}: schedule.{k}", v)
    ctrl = dataclasses.replace(ctrl, schedule=schedule_from_mapping(sched) if sched else DEFAULT_SCHEDULE.copy())
    gains = _check_gains(where, _apply_dataclass(f"{where}: guidance", GuidanceGains(), doc.get("guidance", {})))
    if ctrl.outer_divider < 1:
        raise ConfigError(f"{where}: controller.outer_divider must be >= 1")
    return VehicleConfig(ctrl, gains, where)


def _check_gains(where: str, gains: GuidanceGains) -> GuidanceGains:
    for f in dataclasses.fields(gains):
        v = getattr(gains, f.name)
        if isinstance(v, float):
            _number(f"{where}: guidance.{f.name}", v, positive=True)
    return gains


def load_vehicle(path) -> VehicleConfig:
    return parse_vehicle(load_toml(path), str(path))


# ---------------------------------------------------------------- scenario


@dataclass
class ExcitationConfig:
    """Piecewise-constant random steps added to the commands (identification flights)."""

    amplitude: float = 0.0
    hold: float = 0.2  # s
    start: float = 0.0
    stop: float = math.inf
    channels: tuple = (1.0, -1.0, 0.0, 0.0)  # per-actuator weights of the step signal
    seed: int = 0

    def signal(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        out = np.zeros((len(t), 4))
        if self.amplitude == 0.0:
            return out
        idx = np.floor(t / self.hold).astype(np.int64)
        # a counter-based draw keeps the value of a hold interval independent of chunking
        keys, inv = np.unique(idx, return_inverse=True)
        draws = np.array([np.random.default_rng([self.seed, int(i)]).uniform(-1.0, 1.0) for i in keys])
        vals = draws[inv]
        on = (t >= self.start) & (t < self.stop)
        out[:] = (self.amplitude * vals * on)[:, None] * np.asarray(self.channels)[None, :]
        return out


@dataclass
class ScenarioConfig:
    name: str
    plant: PlantConfig
    vehicle: VehicleConfig
    wind: WindConfig
    plan: FlightPlan
    duration: float
    seed: int
    excitation: ExcitationConfig = field(default_factory=ExcitationConfig)
    source: str = ""


def _parse_wind(where: str, value) -> WindConfig:
    if isinstance(value, str):
        try:
            return WindConfig.preset(value)
        except KeyError as exc:
            raise ConfigError(f"{where}: {exc.args[0]}") from None
    if isinstance(value, dict):
        return _apply_dataclass(where, WindConfig(), value)
    raise ConfigError(f"{where}: expected a preset name or a table")


def _parse_plan(where: str, items) -> FlightPlan:
    if not isinstance(items, list) or not items:
        raise ConfigError(f"{where}: expected a non-empty array of tables [[plan]]")
    elements = []
    for i, it in enumerate(items):
        loc = f"{where}[{i}]"
        if not isinstance(it, dict) or "type" not in it:
            raise ConfigError(f"{loc}: each element needs a 'type'")
        kind = it["type"]
        if kind == "hover":
            _check_keys(loc, it, ("type", "point", "heading_deg", "duration"))
            heading = it.get("heading_deg")
            elements.append(Hover(
                _vector(f"{loc}.point", it.get("point"), 3),
                None if heading is None else math.radians(_number(f"{loc}.heading_deg", heading)),
                _number(f"{loc}.duration", it.get("duration", math.inf), positive=True)
                if "duration" in it else math.inf,
            ))
        elif kind == "goto":
            _check_keys(loc, it, ("type", "point", "speed"))
            elements.append(GotoWaypoint(_vector(f"{loc}.point", it.get("point"), 3),
                                         _number(f"{loc}.speed", it.get("speed", 16.0), positive=True)))
        elif kind == "line":
            _check_keys(loc, it, ("type", "start", "end", "speed"))
            try:
                elements.append(FollowLine(_vector(f"{loc}.start", it.get("start"), 3),
                                           _vector(f"{loc}.end", it.get("end"), 3),
                                           _number(f"{loc}.speed", it.get("speed", 16.0), positive=True)))
            except ValueError as exc:
                raise ConfigError(f"{loc}: {exc}") from None
        else:
            raise ConfigError(f"{loc}.type: unknown element {kind!r} (hover, goto, line)")
    return FlightPlan(elements)


def parse_scenario(doc: dict, base: Path, where: str = "scenario") -> ScenarioConfig:
    _check_keys(where, doc, ("schema_version", "name", "plant", "vehicle", "wind", "duration", "seed", "plan",
                             "overrides", "excitation"))
    base = Path(base)

    def ref(key):
        val = doc.get(key, f"{key}.toml")
        if not isinstance(val, str):
            raise ConfigError(f"{where}: {key} must be a file name")
        p = Path(val)
        for cand in (p if p.is_absolute() else base / p, data_path(val)):
            if cand.is_file():
                return cand
        raise ConfigError(f"{where}: {key} file {val!r} not found")

    plant = load_plant(ref("plant"))
    vehicle = load_vehicle(ref("vehicle"))
    over = doc.get("overrides", {})
    _check_keys(f"{where}: [overrides]", over, ("controller", "guidance", "plant", "sensors"))
    if "controller" in over:
        vehicle.controller = _apply_dataclass(f"{where}: overrides.controller", vehicle.controller, over["controller"])
    if "guidance" in over:
        vehicle.gains = _check_gains(f"{where}: overrides",
                                     _apply_dataclass(f"{where}: overrides.guidance", vehicle.gains, over["guidance"]))
    if "plant" in over:
        _check_keys(f"{where}: [overrides.plant]", over["plant"], PLANT_FIELDS)
        for k, v in over["plant"].items():
            plant.params[PLANT_FIELDS.index(k)] = _number(f"{where}: overrides.plant.{k}", v)
    if "sensors" in over:
        plant.sensors = _check_sensors(f"{where}: overrides",
                                       _apply_dataclass(f"{where}: overrides.sensors", plant.sensors, over["sensors"]))
    seed = doc.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigError(f"{where}: seed must be a non-negative integer")
    exc = _apply_dataclass(f"{where}: excitation", ExcitationConfig(), doc.get("excitation", {}))
    if exc.hold <= 0.0:
        raise ConfigError(f"{where}: excitation.hold must be positive")
    return ScenarioConfig(
        name=str(doc.get("name", Path(where).stem)),
        plant=plant,
        vehicle=vehicle,
        wind=_parse_wind(f"{where}: wind", doc.get("wind", "calm")),
        plan=_parse_plan(f"{where}: plan", doc.get("plan")),
        duration=_number(f"{where}: duration", doc.get("duration", 30.0), positive=True),
        seed=seed,
        excitation=exc,
        source=where,
    )


def load_scenario(name_or_path: str) -> ScenarioConfig:
    path = resolve_scenario(name_or_path)
    return parse_scenario(load_toml(path), path.parent, str(path))


def validate_file(path) -> str:
    """Parse any of the three config kinds; returns the detected kind."""
    doc = load_toml(path)
    p = Path(path)
    if "plan" in doc:
        parse_scenario(doc, p.parent, str(p))
        return "scenario"
    if "plant" in doc or "sensors" in doc:
        parse_plant(doc, str(p))
        return "plant"
    parse_vehicle(doc, str(p))
    return "vehicle"
