"""Configuration: section dataclasses, the key = value file format, overrides.

The file format is flat text sectioned by module name::

    [scenario]
    protocol = P-GRAB
    p_f = 0.4

Unknown sections or keys are an error (catches typos). Overrides take the
dotted form ``section.key=value``; a bare ``key=value`` works when the key is
unique across sections.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields, replace

from .costfield import CostfieldParams
from .mac import MacParams
from .phys import RadioParams
from .policies import PolicyParams

PROTOCOLS = ("BGB", "GRAB", "P-GRAB", "U-GRAB", "UP-GRAB")


class ConfigError(Exception):
    pass


@dataclass
class ScenarioParams:
    protocol: str = "BGB"
    node_count: int = 200
    area_width_m: float = 250.0
    area_height_m: float = 250.0
    sink_placement: str = "corner"   # corner (0,0) or center
    event_count: int = 30
    event_spread: int = 5            # total messages uniform in count +/- spread
    p_f: float = 0.0
    failure_side: str = "rx"         # where the failure lottery is drawn: rx | tx
    require_connected: bool = False  # resample topology until all nodes reach the sink
    replications: int = 30
    base_seed: int = 1
    data_start_ms: float = 5500.0
    data_window_ms: float = 15000.0
    max_sim_time_ms: float = 26500.0


@dataclass
class MetricsParams:
    include_sink: bool = False   # count the sink in energy / dead statistics
    energy_audit: bool = False   # keep a per-debit log and re-check the ledger


@dataclass
class SimConfig:
    phys: RadioParams
    mac: MacParams
    costfield: CostfieldParams
    policies: PolicyParams
    scenario: ScenarioParams
    metrics: MetricsParams

    def copy(self) -> "SimConfig":
        return SimConfig(**{f.name: replace(getattr(self, f.name)) for f in fields(self)})


_SECTIONS = {
    "phys": RadioParams,
    "mac": MacParams,
    "costfield": CostfieldParams,
    "policies": PolicyParams,
    "scenario": ScenarioParams,
    "metrics": MetricsParams,
}


def default_config() -> SimConfig:
    return SimConfig(**{name: cls() for name, cls in _SECTIONS.items()})


def _coerce(section: str, key: str, ftype, raw: str):
    raw = raw.strip()
    try:
        if ftype is bool:
            low = raw.lower()
            if low in ("true", "yes", "on", "1"):
                return True
            if low in ("false", "no", "off", "0"):
                return False
            raise ValueError(raw)
        if ftype is int:
            return int(raw)
        if ftype is float:
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"bad value for {section}.{key}: {raw!r}") from None


def _field_types(cls) -> dict[str, type]:
    out = {}
    for f in fields(cls):
        t = f.type
        if isinstance(t, str):   # evaluated lazily under postponed annotations
            t = {"bool": bool, "int": int, "float": float, "str": str}.get(t, str)
        out[f.name] = t
    return out


def set_value(cfg: SimConfig, dotted: str, raw: str) -> None:
    """Apply one ``section.key`` (or unique bare ``key``) assignment in place."""
    if "." in dotted:
        section, key = dotted.split(".", 1)
        if section not in _SECTIONS:
            raise ConfigError(f"unknown config section: {section}")
        types = _field_types(_SECTIONS[section])
        if key not in types:
            raise ConfigError(f"unknown config key: {section}.{key}")
    else:
        key = dotted
        hits = [name for name, cls in _SECTIONS.items() if key in _field_types(cls)]
        if not hits:
            raise ConfigError(f"unknown config key: {key}")
        if len(hits) > 1:
            raise ConfigError(f"ambiguous config key {key}: sections {', '.join(hits)}")
        section = hits[0]
        types = _field_types(_SECTIONS[section])
    setattr(getattr(cfg, section), key, _coerce(section, key, types[key], raw))


def apply_overrides(cfg: SimConfig, pairs) -> SimConfig:
    out = cfg.copy()
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"override must look like key=value: {pair!r}")
        dotted, raw = pair.split("=", 1)
        set_value(out, dotted.strip(), raw)
    validate(out)
    return out


def parse_text(text: str, source: str = "<config>") -> SimConfig:
    cfg = default_config()
    section = None
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if stripped.startswith("[") and stripped.endswith("]"):
            section = stripped[1:-1].strip()
            if section not in _SECTIONS:
                raise ConfigError(f"{source}:{lineno}: unknown section [{section}]")
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source}:{lineno}: expected key = value, got {stripped!r}")
        if section is None:
            raise ConfigError(f"{source}:{lineno}: key outside any section")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        types = _field_types(_SECTIONS[section])
        if key not in types:
            raise ConfigError(f"{source}:{lineno}: unknown config key: {section}.{key}")
        setattr(getattr(cfg, section), key, _coerce(section, key, types[key], raw))
    validate(cfg)
    return cfg


def load_config(path: str) -> SimConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    return parse_text(text, source=path)


def config_text(cfg: SimConfig) -> str:
    """Render every key with its current value (the defaults file generator)."""
    lines = []
    for name in _SECTIONS:
        lines.append(f"[{name}]")
        section = getattr(cfg, name)
        for f in fields(section):
            lines.append(f"{f.name} = {getattr(section, f.name)}")
        lines.append("")
    return "\n".join(lines)


def validate(cfg: SimConfig) -> None:
    p, m, c, pol, sc = cfg.phys, cfg.mac, cfg.costfield, cfg.policies, cfg.scenario
    if p.alpha_exp < 2.0:
        raise ConfigError("phys.alpha_exp must be >= 2")
    if p.sensitivity_dbm <= p.noise_floor_dbm:
        raise ConfigError("phys.sensitivity_dbm must exceed phys.noise_floor_dbm")
    if p.bitrate_bps <= 0 or p.d_min_m <= 0:
        raise ConfigError("phys.bitrate_bps and phys.d_min_m must be positive")
    if not (0 <= m.backoff_min_ms <= m.backoff_max_ms):
        raise ConfigError("mac backoff window must satisfy 0 <= min <= max")
    if m.congestion_limit < 1:
        raise ConfigError("mac.congestion_limit must be >= 1")
    if c.bounds_mode not in ("computed", "fixed"):
        raise ConfigError("costfield.bounds_mode must be computed or fixed")
    if c.fixed_bounds_lo >= c.fixed_bounds_hi:
        raise ConfigError("costfield fixed bounds must be ordered lo < hi")
    if pol.spread_factor < 1.0 or pol.spread_factor_max < 1.0:
        raise ConfigError("policies spread factors must be >= 1")
    if not (0.0 < pol.ladder_ratio < 1.0) or not (0.0 < pol.ladder_scale <= 1.0):
        raise ConfigError("policies ladder parameters out of range")
    if pol.credit_factor < 0 or pol.wide_neighbor_count < 1:
        raise ConfigError("policies credit parameters out of range")
    if sc.protocol not in PROTOCOLS:
        raise ConfigError(f"unknown protocol {sc.protocol!r}; pick one of {', '.join(PROTOCOLS)}")
    if sc.node_count < 2:
        raise ConfigError("scenario.node_count must be >= 2")
    if not (0.0 <= sc.p_f <= 1.0):
        raise ConfigError("scenario.p_f must lie in [0, 1]")
    if sc.failure_side not in ("rx", "tx"):
        raise ConfigError("scenario.failure_side must be rx or tx")
    if sc.sink_placement not in ("corner", "center"):
        raise ConfigError("scenario.sink_placement must be corner or center")
    if sc.replications < 1:
        raise ConfigError("scenario.replications must be >= 1")
    if sc.event_count < 0 or sc.event_spread < 0:
        raise ConfigError("scenario event counts must be non-negative")
