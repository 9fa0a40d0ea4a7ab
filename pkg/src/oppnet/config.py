"""Scenario files: flat ``key=value`` lines with dotted prefixes.

Example::

    # comment
    router.strategy=prophet
    group.walkers.count=20
    group.walkers.speed=0.5,1.5
    group.walkers.pois=shops:0.4,west:0.1

Scalar keys default to the shipped 100-node city scenario; POI groups and node
groups must be declared by the file.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Optional, Union

KINDS = ("pedestrian", "car", "tram")
STRATEGY_NAMES = ("epidemic", "prophet", "integrated")
TRAM_COUNTS = (0, 2, 4, 6)
# "parallel": one transfer per directed link; "single": one per node
TRANSFER_MODES = ("parallel", "single")
KNOWLEDGE_RULES = ("threshold", "nonzero")
KB = 1024
MB = 1024 * 1024


class ConfigError(ValueError):
    def __init__(self, message: str, key: Optional[str] = None, line: Optional[int] = None):
        where = []
        if key is not None:
            where.append(f"key '{key}'")
        if line is not None:
            where.append(f"line {line}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
        self.key = key
        self.line = line


@dataclass(frozen=True)
class RadioConfig:
    name: str
    range_m: float
    bandwidth_bps: float


@dataclass(frozen=True)
class PoiConfig:
    name: str
    count: int
    area: tuple[float, float, float, float]  # x0, y0, x1, y1


@dataclass(frozen=True)
class GroupConfig:
    name: str
    count: int = 0
    kind: str = "pedestrian"
    speed: tuple[float, float] = (0.5, 1.5)
    pause: tuple[float, float] = (0.0, 120.0)
    radios: tuple[str, ...] = ("bluetooth",)
    pois: tuple[tuple[str, float], ...] = ()
    generates: Optional[bool] = None

    @property
    def is_generator(self) -> bool:
        if self.generates is None:
            return self.kind != "tram"
        return self.generates


DEFAULT_RADIOS = (
    RadioConfig("bluetooth", 10.0, 2_000_000.0),
    RadioConfig("wlan", 30.0, 4_500_000.0),
)


@dataclass(frozen=True)
class ScenarioConfig:
    name: str = "scenario"
    world_width: float = 4500.0
    world_height: float = 3400.0
    nodes: int = 100
    sim_time: float = 43200.0
    tick: float = 1.0
    seed: int = 1
    timeseries_interval: float = 600.0
    traffic_interval: float = 3600.0
    size_min: int = 100 * KB
    size_max: int = 2 * MB
    ttls: tuple[float, ...] = (10800.0, 21600.0, 43200.0)
    hop_limit: Optional[int] = None
    buffer_bytes: int = 20 * MB
    transfers: str = "parallel"
    strategy: str = "epidemic"
    seen_window: float = 300.0
    p_init: float = 0.75
    alpha: float = 0.98
    beta: float = 0.25
    time_unit: float = 30.0
    threshold: float = 0.1
    wait_time: float = 1800.0
    max_copies: Optional[int] = 8
    learn: bool = True
    knowledge: str = "threshold"
    poi_seed: int = 2012
    radios: tuple[RadioConfig, ...] = DEFAULT_RADIOS
    pois: tuple[PoiConfig, ...] = ()
    groups: tuple[GroupConfig, ...] = ()

    def radio(self, name: str) -> RadioConfig:
        for r in self.radios:
            if r.name == name:
                return r
        raise KeyError(name)

    def with_strategy(self, strategy: str) -> "ScenarioConfig":
        cfg = replace(self, strategy=strategy)
        validate(cfg)
        return cfg


# key -> (field name, kind)
SCALAR_KEYS = {
    "scenario.name": ("name", "str"),
    "world.width": ("world_width", "float"),
    "world.height": ("world_height", "float"),
    "world.nodes": ("nodes", "int"),
    "sim.time": ("sim_time", "float"),
    "sim.tick": ("tick", "float"),
    "sim.seed": ("seed", "int"),
    "sim.timeseries_interval": ("timeseries_interval", "float"),
    "traffic.interval": ("traffic_interval", "float"),
    "traffic.size": (("size_min", "size_max"), "intpair"),
    "traffic.ttl": ("ttls", "floatlist"),
    "traffic.hop_limit": ("hop_limit", "optint"),
    "node.buffer": ("buffer_bytes", "int"),
    "node.transfers": ("transfers", "str"),
    "router.strategy": ("strategy", "str"),
    "router.seen_window": ("seen_window", "float"),
    "prophet.p_init": ("p_init", "float"),
    "prophet.alpha": ("alpha", "float"),
    "prophet.beta": ("beta", "float"),
    "prophet.time_unit": ("time_unit", "float"),
    "integrated.threshold": ("threshold", "float"),
    "integrated.wait_time": ("wait_time", "float"),
    "integrated.max_copies": ("max_copies", "optint"),
    "integrated.learn": ("learn", "bool"),
    "integrated.knowledge": ("knowledge", "str"),
    "poi.seed": ("poi_seed", "int"),
}
REQUIRED_KEYS = ("router.strategy", "world.nodes", "group.<name>.count")

GROUP_KEYS = ("count", "kind", "speed", "pause", "radios", "pois", "generates")
POI_KEYS = ("count", "area")
RADIO_KEYS = ("range", "bandwidth")
_NAME = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


def _convert(kind: str, raw: str, key: str, line: Optional[int]):
    try:
        if kind == "str":
            return raw
        if kind == "float":
            return float(raw)
        if kind == "int":
            return int(raw)
        if kind == "optint":
            return None if raw.lower() in ("none", "inf", "unlimited") else int(raw)
        if kind == "bool":
            low = raw.lower()
            if low in ("true", "yes", "1"):
                return True
            if low in ("false", "no", "0"):
                return False
            raise ValueError(raw)
        if kind == "floatlist":
            return tuple(float(v) for v in raw.split(","))
        if kind in ("floatpair", "intpair"):
            parts = raw.split(",")
            if len(parts) != 2:
                raise ValueError(raw)
            cast = int if kind == "intpair" else float
            return cast(parts[0]), cast(parts[1])
        if kind == "area":
            parts = tuple(float(v) for v in raw.split(","))
            if len(parts) != 4:
                raise ValueError(raw)
            return parts
        if kind == "names":
            return tuple(v.strip() for v in raw.split(",") if v.strip())
        if kind == "selection":
            out = []
            for item in raw.split(","):
                item = item.strip()
                if not item:
                    continue
                name, _, p = item.partition(":")
                out.append((name.strip(), float(p)))
            return tuple(out)
    except ValueError:
        raise ConfigError(f"cannot parse {raw!r} as {kind}", key, line) from None
    raise AssertionError(kind)


_GROUP_KINDS = {"count": "int", "kind": "str", "speed": "floatpair", "pause": "floatpair",
                "radios": "names", "pois": "selection", "generates": "bool"}


def parse_text(text: str) -> ScenarioConfig:
    values: dict[str, object] = {}
    groups: dict[str, dict] = {}
    pois: dict[str, dict] = {}
    radios: dict[str, dict] = {r.name: {"range": r.range_m, "bandwidth": r.bandwidth_bps}
                               for r in DEFAULT_RADIOS}
    seen: dict[str, int] = {}
    lines: dict[str, int] = {}

    for lineno, raw in enumerate(text.splitlines(), 1):
        stripped = raw.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"expected key=value, got {stripped!r}", line=lineno)
        key, value = (s.strip() for s in stripped.split("=", 1))
        if key in seen:
            raise ConfigError(f"duplicate key (first on line {seen[key]})", key, lineno)
        seen[key] = lineno
        parts = key.split(".")
        if key in SCALAR_KEYS:
            target, kind = SCALAR_KEYS[key]
            values[key] = _convert(kind, value, key, lineno)
            lines[key] = lineno
        elif len(parts) == 3 and parts[0] == "group" and parts[2] in GROUP_KEYS:
            _check_name(parts[1], key, lineno)
            groups.setdefault(parts[1], {})[parts[2]] = _convert(
                _GROUP_KINDS[parts[2]], value, key, lineno)
            lines[key] = lineno
        elif len(parts) == 3 and parts[0] == "poi" and parts[2] in POI_KEYS:
            _check_name(parts[1], key, lineno)
            pois.setdefault(parts[1], {})[parts[2]] = _convert(
                "int" if parts[2] == "count" else "area", value, key, lineno)
            lines[key] = lineno
        elif len(parts) == 3 and parts[0] == "radio" and parts[2] in RADIO_KEYS:
            _check_name(parts[1], key, lineno)
            radios.setdefault(parts[1], {})[parts[2]] = _convert("float", value, key, lineno)
            lines[key] = lineno
        else:
            raise ConfigError("unknown key", key, lineno)

    missing = [k for k in REQUIRED_KEYS[:2] if k not in values]
    if not groups:
        missing.append(REQUIRED_KEYS[2])
    if missing:
        raise ConfigError("missing required keys: " + ", ".join(missing))

    kwargs = {}
    for key, value in values.items():
        target, _ = SCALAR_KEYS[key]
        if isinstance(target, tuple):
            kwargs.update(zip(target, value))
        else:
            kwargs[target] = value

    radio_cfgs = []
    for name, spec in radios.items():
        if set(spec) != set(RADIO_KEYS):
            raise ConfigError("radio needs both range and bandwidth", f"radio.{name}")
        radio_cfgs.append(RadioConfig(name, spec["range"], spec["bandwidth"]))
    poi_cfgs = []
    for name, spec in pois.items():
        if set(spec) != set(POI_KEYS):
            raise ConfigError("POI group needs count and area", f"poi.{name}")
        poi_cfgs.append(PoiConfig(name, spec["count"], spec["area"]))
    group_cfgs = []
    for name, spec in groups.items():
        if "count" not in spec:
            raise ConfigError("missing required key", f"group.{name}.count")
        group_cfgs.append(GroupConfig(name=name, **spec))

    cfg = ScenarioConfig(radios=tuple(radio_cfgs), pois=tuple(poi_cfgs),
                         groups=tuple(group_cfgs), **kwargs)
    validate(cfg, lines)
    return cfg


def _check_name(name: str, key: str, line: int) -> None:
    if not _NAME.match(name):
        raise ConfigError(f"invalid name {name!r}", key, line)


def parse_scenario(path: Union[str, Path]) -> ScenarioConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"scenario file not found: {path}")
    return parse_text(path.read_text())


def validate(cfg: ScenarioConfig, lines: Optional[dict[str, int]] = None) -> None:
    lines = lines or {}

    def fail(msg, key):
        raise ConfigError(msg, key, lines.get(key))

    def positive(value, key):
        if not value > 0 or not math.isfinite(value):
            fail(f"must be positive, got {value}", key)

    def probability(value, key):
        if not 0.0 <= value <= 1.0:
            fail(f"probability must be in [0, 1], got {value}", key)

    def ordered(pair, key, low=0.0):
        if pair[0] < low or pair[0] > pair[1]:
            fail(f"range must satisfy {low} <= min <= max, got {pair}", key)

    positive(cfg.world_width, "world.width")
    positive(cfg.world_height, "world.height")
    if cfg.nodes < 0:
        fail("must be >= 0", "world.nodes")
    if cfg.sim_time < 0:
        fail("must be >= 0", "sim.time")
    positive(cfg.tick, "sim.tick")
    positive(cfg.timeseries_interval, "sim.timeseries_interval")
    positive(cfg.traffic_interval, "traffic.interval")
    ordered((cfg.size_min, cfg.size_max), "traffic.size")
    if not cfg.ttls or any(t <= 0 for t in cfg.ttls):
        fail("needs one or more positive lifetimes", "traffic.ttl")
    if cfg.hop_limit is not None and cfg.hop_limit < 0:
        fail("must be >= 0 or none", "traffic.hop_limit")
    positive(cfg.buffer_bytes, "node.buffer")
    if cfg.transfers not in TRANSFER_MODES:
        fail(f"must be one of {', '.join(TRANSFER_MODES)}", "node.transfers")
    if cfg.strategy not in STRATEGY_NAMES:
        fail(f"must be one of {', '.join(STRATEGY_NAMES)}", "router.strategy")
    if cfg.seen_window < 0:
        fail("must be >= 0", "router.seen_window")
    probability(cfg.p_init, "prophet.p_init")
    probability(cfg.beta, "prophet.beta")
    if not 0.0 < cfg.alpha < 1.0:
        fail("aging factor must be in (0, 1)", "prophet.alpha")
    positive(cfg.time_unit, "prophet.time_unit")
    probability(cfg.threshold, "integrated.threshold")
    if cfg.wait_time < 0:
        fail("must be >= 0", "integrated.wait_time")
    if cfg.knowledge not in KNOWLEDGE_RULES:
        fail(f"must be one of {', '.join(KNOWLEDGE_RULES)}", "integrated.knowledge")
    if cfg.max_copies is not None and cfg.max_copies < 0:
        fail("must be >= 0 or none", "integrated.max_copies")

    radio_names = set()
    for r in cfg.radios:
        positive(r.range_m, f"radio.{r.name}.range")
        positive(r.bandwidth_bps, f"radio.{r.name}.bandwidth")
        radio_names.add(r.name)

    poi_names = set()
    for p in cfg.pois:
        key = f"poi.{p.name}"
        if p.count < 0:
            fail("must be >= 0", key + ".count")
        x0, y0, x1, y1 = p.area
        if not (0 <= x0 <= x1 <= cfg.world_width and 0 <= y0 <= y1 <= cfg.world_height):
            fail("area must lie inside the world rectangle", key + ".area")
        poi_names.add(p.name)

    total = trams = 0
    for g in cfg.groups:
        key = f"group.{g.name}"
        if g.count < 0:
            fail("must be >= 0", key + ".count")
        if g.kind not in KINDS:
            fail(f"must be one of {', '.join(KINDS)}", key + ".kind")
        ordered(g.speed, key + ".speed")
        if g.speed[0] <= 0:
            fail("speed must be positive", key + ".speed")
        ordered(g.pause, key + ".pause")
        if not g.radios:
            fail("needs at least one radio", key + ".radios")
        for r in g.radios:
            if r not in radio_names:
                fail(f"unknown radio {r!r}", key + ".radios")
        for name, p in g.pois:
            if name not in poi_names:
                fail(f"unknown POI group {name!r}", key + ".pois")
            probability(p, key + ".pois")
        if sum(p for _, p in g.pois) > 1.0 + 1e-9:
            fail("POI probabilities sum above 1", key + ".pois")
        total += g.count
        if g.kind == "tram":
            trams += g.count
    if total != cfg.nodes:
        fail(f"group counts sum to {total}, expected {cfg.nodes}", "world.nodes")
    if trams not in TRAM_COUNTS:
        fail(f"tram count must be one of {TRAM_COUNTS}, got {trams}", "group")


def _fmt(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ",".join(_fmt(v) for v in value)
    return str(value)


def format_scenario(cfg: ScenarioConfig) -> str:
    """Serialize a config back to the key=value format."""
    out = []
    for key, (target, _) in SCALAR_KEYS.items():
        if isinstance(target, tuple):
            value = tuple(getattr(cfg, t) for t in target)
        else:
            value = getattr(cfg, target)
        out.append(f"{key}={_fmt(value)}")
    for r in cfg.radios:
        out.append(f"radio.{r.name}.range={_fmt(r.range_m)}")
        out.append(f"radio.{r.name}.bandwidth={_fmt(r.bandwidth_bps)}")
    for p in cfg.pois:
        out.append(f"poi.{p.name}.count={p.count}")
        out.append(f"poi.{p.name}.area={_fmt(p.area)}")
    for g in cfg.groups:
        for f in fields(g):
            if f.name == "name":
                continue
            value = getattr(g, f.name)
            if f.name == "generates" and value is None:
                continue
            if f.name == "pois":
                text = ",".join(f"{n}:{_fmt(p)}" for n, p in value)
            else:
                text = _fmt(value)
            out.append(f"group.{g.name}.{f.name}={text}")
    return "\n".join(out) + "\n"
