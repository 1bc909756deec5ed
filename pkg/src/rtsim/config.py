"""Scenario configuration: a line-based ``key = value`` format with ``[section]`` headers.

Example::

    name = paper_grid
    deployment = grid
    deadline = 0.5,1.0,1.5,2.0
    seeds = 1..5

    [sched]
    policy = SRTS, DRTS, SVM, DVM

    [routing]
    protocol = gf

    fail node G at 10

Keys inside a section may also be written with a dotted prefix at top level
(``sched.alpha = 0.5``). Omitted keys take the Table-1 style defaults below.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

from rtsim.mac import MacParams
from rtsim.scheduling import PolicyVariant
from rtsim.topology import EnergyParams


class ConfigError(ValueError):
    def __init__(self, message: str, line: int = 0):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


@dataclass(frozen=True)
class FailureDirective:
    node: str
    time: float


@dataclass
class ScenarioConfig:
    name: str = "scenario"
    deployment: str = "grid"
    node_count: int = 100
    area: float = 1000.0
    radio_range: float = 250.0
    bandwidth: float = 2_000_000.0
    packet_bytes: int = 32
    data_rate: float = 2.0
    sim_time: float = 120.0
    sink_corner: str = "nw"
    deadlines: list[float] = field(default_factory=lambda: [1.0])
    seeds: list[int] = field(default_factory=lambda: [1])
    traffic: str = "steady"
    burst_on: float = 5.0
    burst_off: float = 5.0
    phase_spread: Optional[float] = None
    sources: Optional[list[str]] = None
    policies: list[PolicyVariant] = field(default_factory=lambda: [PolicyVariant.DRTS])
    alphas: list[float] = field(default_factory=lambda: [0.7])
    metric: str = "auto"
    queue_capacity: int = 64
    etd_smoothing: float = 0.2
    ohd: Optional[float] = None
    protocols: list[str] = field(default_factory=lambda: ["gf"])
    power_aware: bool = True
    vn: bool = True
    mac: MacParams = field(default_factory=MacParams)
    energy: EnergyParams = field(default_factory=EnergyParams)
    failures: list[FailureDirective] = field(default_factory=list)

    def with_mac_radio(self) -> MacParams:
        """MAC parameters with bandwidth and packet size taken from the scenario."""
        return dataclasses.replace(self.mac, bandwidth_bps=self.bandwidth,
                                   packet_bytes=self.packet_bytes)

    def one_hop_distance(self) -> float:
        return self.radio_range if self.ohd is None else self.ohd


def _float(text: str) -> float:
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(f"not a finite number: {text}")
    return value


def _positive(conv: Callable[[str], float]) -> Callable[[str], float]:
    def parse(text: str):
        value = conv(text)
        if value <= 0:
            raise ValueError(f"must be positive, got {text}")
        return value
    return parse


def _nonneg(conv):
    def parse(text: str):
        value = conv(text)
        if value < 0:
            raise ValueError(f"must be nonnegative, got {text}")
        return value
    return parse


def _unit_interval(text: str) -> float:
    value = _float(text)
    if not 0 < value <= 1:
        raise ValueError(f"must lie in (0, 1], got {text}")
    return value


def _fraction(text: str) -> float:
    value = _float(text)
    if not 0 <= value <= 1:
        raise ValueError(f"must lie in [0, 1], got {text}")
    return value


def _listof(conv):
    def parse(text: str):
        items = [s.strip() for s in text.split(",") if s.strip()]
        if not items:
            raise ValueError("empty list")
        return [conv(s) for s in items]
    return parse


def _seeds(text: str) -> list[int]:
    out: list[int] = []
    for part in (s.strip() for s in text.split(",")):
        if not part:
            continue
        if ".." in part:
            lo, hi = (int(s) for s in part.split(".."))
            if hi < lo:
                raise ValueError(f"empty seed range {part}")
            out.extend(range(lo, hi + 1))
        else:
            out.append(int(part))
    if not out:
        raise ValueError("empty seed list")
    return out


def _onoff(text: str) -> bool:
    t = text.strip().lower()
    if t in ("on", "true", "yes", "1"):
        return True
    if t in ("off", "false", "no", "0"):
        return False
    raise ValueError(f"expected on/off, got {text}")


def _choice(*options: str):
    def parse(text: str) -> str:
        t = text.strip().lower()
        if t not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {text}")
        return t
    return parse


def _protocols(text: str) -> list[str]:
    return _listof(_choice("sp", "gf"))(text)


def _policies(text: str) -> list[PolicyVariant]:
    return _listof(PolicyVariant.parse)(text)


def _bounds(text: str) -> tuple[float, ...]:
    return tuple(_listof(_positive(_float))(text))


_pos_int = _positive(int)
_pos_float = _positive(_float)

# config key -> (target, attribute, parser); target None: ScenarioConfig itself
_KEYS: dict[str, tuple[Optional[str], str, Callable]] = {
    "name": (None, "name", str.strip),
    "deployment": (None, "deployment", _choice("grid", "random", "fig2")),
    "nodecount": (None, "node_count", _pos_int),
    "area": (None, "area", _pos_float),
    "radiorange": (None, "radio_range", _pos_float),
    "bandwidth": (None, "bandwidth", _pos_float),
    "packetbytes": (None, "packet_bytes", _pos_int),
    "datarate": (None, "data_rate", _pos_float),
    "simtime": (None, "sim_time", _pos_float),
    "sinkcorner": (None, "sink_corner", _choice("nw", "ne", "sw", "se")),
    "deadline": (None, "deadlines", _listof(_pos_float)),
    "seeds": (None, "seeds", _seeds),
    "traffic": (None, "traffic", _choice("steady", "bursty")),
    "burston": (None, "burst_on", _pos_float),
    "burstoff": (None, "burst_off", _nonneg(_float)),
    "phasespread": (None, "phase_spread", _nonneg(_float)),
    "sources": (None, "sources", _listof(str)),
    "sched.policy": (None, "policies", _policies),
    "sched.alpha": (None, "alphas", _listof(_unit_interval)),
    "sched.metric": (None, "metric", _choice("auto", "hops", "euclidean")),
    "sched.queue_capacity": (None, "queue_capacity", _pos_int),
    "sched.etd_smoothing": (None, "etd_smoothing", _unit_interval),
    "sched.ohd": (None, "ohd", _pos_float),
    "routing.protocol": (None, "protocols", _protocols),
    "routing.power_aware": (None, "power_aware", _onoff),
    "routing.vn": (None, "vn", _onoff),
    "mac.slot_us": ("mac", "slot_us", _pos_float),
    "mac.w0": ("mac", "w0", _pos_int),
    "mac.max_retries": ("mac", "max_retries", _nonneg(int)),
    "mac.interference_range_m": ("mac", "interference_range_m", _pos_float),
    "mac.overhead_us": ("mac", "overhead_us", _nonneg(_float)),
    "mac.carrier_sense": ("mac", "carrier_sense", _onoff),
    "mac.vms_class_bounds": ("mac", "vms_class_bounds", _bounds),
    "energy.capacity": ("energy", "capacity", _pos_float),
    "energy.tx_cost": ("energy", "tx_cost", _nonneg(_float)),
    "energy.rx_cost": ("energy", "rx_cost", _nonneg(_float)),
    "energy.active_threshold": ("energy", "active_threshold", _fraction),
    "energy.danger_threshold": ("energy", "danger_threshold", _fraction),
}

_ALIASES = {"deadlines": "deadline", "policy": "sched.policy", "alpha": "sched.alpha",
            "routing": "routing.protocol"}


def _canonical(key: str, section: Optional[str]) -> str:
    key = key.strip().lower()
    if section and "." not in key:
        key = f"{section}.{key}"
    if "." not in key:
        key = key.replace("_", "")
    return _ALIASES.get(key, key)


def parse_config(text: str) -> ScenarioConfig:
    cfg = ScenarioConfig()
    sub: dict[str, dict[str, object]] = {"mac": {}, "energy": {}}
    lines_of: dict[str, int] = {}
    section: Optional[str] = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower() or None
            if section not in (None, "general", "sched", "routing", "mac", "energy"):
                raise ConfigError(f"unknown section [{section}]", lineno)
            if section == "general":
                section = None
            continue
        words = line.split()
        if words[0].lower() == "fail":
            cfg.failures.append(_failure(words, lineno))
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if not key or not value:
            raise ConfigError(f"malformed line {line!r}", lineno)
        canon = _canonical(key, section)
        if canon not in _KEYS:
            raise ConfigError(f"unknown key {key!r}", lineno)
        target, attr, conv = _KEYS[canon]
        try:
            parsed = conv(value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}", lineno) from None
        lines_of[attr] = lineno
        if target is None:
            setattr(cfg, attr, parsed)
        else:
            sub[target][attr] = parsed
    try:
        cfg.mac = dataclasses.replace(cfg.mac, **sub["mac"])
    except ValueError as exc:
        raise ConfigError(f"mac: {exc}") from None
    try:
        cfg.energy = dataclasses.replace(cfg.energy, **sub["energy"])
    except ValueError as exc:
        raise ConfigError(f"energy: {exc}") from None
    _validate(cfg, lines_of)
    return cfg


def _failure(words: list[str], lineno: int) -> FailureDirective:
    # fail node <id> at <t>
    if len(words) != 5 or words[1].lower() != "node" or words[3].lower() != "at":
        raise ConfigError("expected 'fail node <id> at <time>'", lineno)
    try:
        t = _nonneg(_float)(words[4])
    except ValueError as exc:
        raise ConfigError(f"bad failure time: {exc}", lineno) from None
    return FailureDirective(words[2], t)


def _validate(cfg: ScenarioConfig, lines_of: dict[str, int]) -> None:
    if cfg.deployment == "grid" and math.isqrt(cfg.node_count) ** 2 != cfg.node_count:
        raise ConfigError(f"grid deployment needs a perfect-square nodeCount, got "
                          f"{cfg.node_count}", lines_of.get("node_count", 0))
    if cfg.burst_off == 0 and cfg.traffic == "bursty":
        raise ConfigError("bursty traffic needs a positive burstOff",
                          lines_of.get("burst_off", 0))


def load_config(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    cfg = parse_config(path.read_text())
    if cfg.name == "scenario":
        cfg.name = path.stem
    return cfg


def bundled_config_path(name: str) -> Path:
    """Path of a config shipped with the package (``paper_grid`` or ``paper_grid.cfg``)."""
    here = Path(__file__).parent / "configs"
    stem = name[:-4] if name.endswith(".cfg") else name
    return here / f"{stem}.cfg"


def resolve_config(ref: str | Path) -> ScenarioConfig:
    path = Path(ref)
    if not path.exists():
        bundled = bundled_config_path(str(ref))
        if bundled.exists():
            path = bundled
        else:
            raise FileNotFoundError(f"no config file {ref}")
    return load_config(path)


def bundled_configs() -> list[str]:
    return sorted(p.stem for p in (Path(__file__).parent / "configs").glob("*.cfg"))
