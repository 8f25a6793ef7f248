"""Flat ``key = value`` configuration files (area calibration, card overrides).

Syntax: one ``key = value`` per line, ``#`` starts a comment, keys may be
dotted (``pixel_3tm.photodiode_area_um2``) and a ``[section]`` line prefixes
the keys that follow it.  Values are numbers (engineering suffixes allowed),
``true``/``false`` or quoted strings.  The format is a subset of TOML.
"""

from __future__ import annotations

import dataclasses
import re
from pathlib import Path

from .analysis import AreaConfig
from .devices import MemristorCard, MosfetCard, PhotodiodeCard
from .netlist import Circuit, parse_value


class ConfigError(ValueError):
    pass


_KEY = re.compile(r"^[A-Za-z_][\w.\-]*$")


def parse_config(text: str, source: str = "<config>") -> dict:
    out: dict = {}
    section = ""
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]") or not _KEY.match(line[1:-1].strip()):
                raise ConfigError(f"{source}:{lineno}: malformed section header {raw.strip()!r}")
            section = line[1:-1].strip() + "."
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not _KEY.match(key) or not value:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        full = (section + key).lower()
        if full in out:
            raise ConfigError(f"{source}:{lineno}: duplicate key {full!r}")
        out[full] = _value(value, source, lineno)
    return out


def _value(text: str, source: str, lineno: int):
    if text[0] in "\"'":
        if len(text) < 2 or text[-1] != text[0]:
            raise ConfigError(f"{source}:{lineno}: unterminated string")
        return text[1:-1]
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    try:
        return parse_value(text)
    except ValueError:
        raise ConfigError(f"{source}:{lineno}: bad value {text!r}") from None


def load_config(path) -> dict:
    p = Path(path)
    return parse_config(p.read_text(encoding="utf-8"), str(p))


AREA_KEYS = {
    "mosfet_overhead": "mosfet",
    "capacitor_density_ff_per_um2": "capacitor",
    "photodiode_area_um2": "photodiode",
    "vsource_area_um2": "vsource",
    "isource_area_um2": "isource",
    "resistor_area_um2": "resistor",
    "memristor_area_um2": "memristor",
}


def area_config(cfg: dict, pixel: str) -> AreaConfig:
    """Area rules for ``pixel``: ``<pixel>.<key>`` overrides a bare ``<key>``.

    Rules absent from ``cfg`` stay unset, so the area report names the
    missing kind instead of silently using a default.
    """
    known = set(AREA_KEYS) | {"calibrated"}
    for key in cfg:
        base = key.rsplit(".", 1)[-1]
        if base not in known:
            raise ConfigError(f"unknown area key {key!r}")
    values = {}
    for key in AREA_KEYS:
        v = cfg.get(f"{pixel}.{key}", cfg.get(key))
        if v is not None and (isinstance(v, (bool, str)) or v < 0):
            raise ConfigError(f"{key} must be a non-negative number")
        values[key] = v
    return AreaConfig(**values, calibrated=bool(cfg.get("calibrated", True)))


_CARD_FIELDS = {
    "nmos": {f.name for f in dataclasses.fields(MosfetCard)} - {"polarity"},
    "pmos": {f.name for f in dataclasses.fields(MosfetCard)} - {"polarity"},
    "memristor": {f.name for f in dataclasses.fields(MemristorCard)},
    "photodiode": {"c_pd", "i_s", "clamp"},
}


def apply_card_overrides(c: Circuit, cfg: dict) -> Circuit:
    """Replace card fields by kind: ``nmos.vth = 0.3``, ``memristor.r_off = 100k``."""
    groups: dict = {}
    for key, value in cfg.items():
        group, _, name = key.partition(".")
        if group not in _CARD_FIELDS or name not in _CARD_FIELDS[group]:
            raise ConfigError(f"unknown card override {key!r}")
        if name == "p":
            value = int(value)
        groups.setdefault(group, {})[name] = value
    devices = []
    for d in c.devices:
        card = d.card
        if d.kind == "M":
            group = "nmos" if card.polarity == "N" else "pmos"
        else:
            group = {"YMEM": "memristor", "YPD": "photodiode"}.get(d.kind)
        if group in groups:
            try:
                card = dataclasses.replace(card, **groups[group])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{group} override rejected for {d.name}: {exc}") from None
        devices.append(dataclasses.replace(d, card=card))
    return Circuit(c.name, devices, dict(c.params), dict(c.analyses))
