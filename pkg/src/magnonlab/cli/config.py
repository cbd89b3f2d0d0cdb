"""
Scenario files: sectioned ``key = value unit`` text.

Grammar
-------
::

    # comment (also allowed after a value)
    [cavity]
    f_c       = 10.1003 GHz
    kappa1    = 0.70 MHz
    kappa2    = 0.70 MHz
    kappa_int = 1.47 MHz

    [mode kittel]
    f_m     = 9.5503 GHz
    gamma_m = 24.3 MHz
    g       = 42 MHz
    kerr_K  = 1e-8 Hz
    drive_c = 4.7e24 hz3/w          # (2 pi)^3 applied; or the SI value in kg^-1m^-2
    gyro    = 28 GHz/T              # optional, enables bias sweeps
    bias_offset = 0 Hz              # optional, f_m(B) = gyro B - bias_offset

    [material]                      # optional
    K_an = -610 J/m3
    M_sat = 1.4e5 A/m
    diameter = 1 mm                 # or V_m = ... m3
    S_total = 1e19                  # dimensionless
    gyro = 28 GHz/T

    [drive]
    mode = kittel
    f_d = 9.56 GHz
    power = 11 dBm
    attenuation = 0 dB

    [probe]
    f_p = 10.1035 GHz
    power = -129 dBm

    [sweep power]
    start = 0 mW
    stop = 15 mW
    points = 151
    spacing = linear                # or log

Section headers, keys and units are case-insensitive.  Every dimensional
value must carry a unit; unknown sections and keys are rejected.  Errors
name the offending line.  :func:`emit` writes the canonical form (SI units,
``repr`` floats), which parses back to an identical scenario.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..errors import MagnonLabError
from ..params import (
    TWO_PI,
    CavityParams,
    DriveParams,
    MagnonModeParams,
    MaterialParams,
    ProbeParams,
    dbm_to_watts,
    sphere_volume,
)
from ..spectra import SystemConfig


class ConfigError(MagnonLabError, ValueError):
    def __init__(self, msg: str, line: Optional[int] = None, source: str = "<config>"):
        self.line = line
        where = f"{source}:{line}: " if line is not None else f"{source}: "
        super().__init__(where + msg)


UNITS = {
    "freq": {"hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9},
    "power": {"w": 1.0, "mw": 1e-3, "uw": 1e-6, "nw": 1e-9},
    "field": {"t": 1.0, "mt": 1e-3},
    "db": {"db": 1.0},
    "length": {"m": 1.0, "mm": 1e-3, "um": 1e-6},
    "volume": {"m3": 1.0, "mm3": 1e-9},
    "energy_density": {"j/m3": 1.0},
    "magnetization": {"a/m": 1.0},
    "gyro": {"hz/t": 1.0, "ghz/t": 1e9, "mhz/mt": 1e9},
    "drive_c": {"kg^-1m^-2": 1.0, "hz3/w": TWO_PI**3},
}
CANONICAL_UNIT = {
    "freq": "Hz", "power": "W", "field": "T", "db": "dB", "length": "m", "volume": "m3",
    "energy_density": "J/m3", "magnetization": "A/m", "gyro": "Hz/T", "drive_c": "kg^-1m^-2",
}

# key -> kind; "number" is dimensionless, "int" a count, "word" free text
SCHEMA = {
    "cavity": {"f_c": "freq", "kappa1": "freq", "kappa2": "freq", "kappa_int": "freq"},
    "mode": {
        "f_m": "freq", "gamma_m": "freq", "g": "freq", "kerr_k": "freq",
        "drive_c": "drive_c", "gyro": "gyro", "bias_offset": "freq",
    },
    "material": {
        "k_an": "energy_density", "m_sat": "magnetization", "diameter": "length",
        "v_m": "volume", "s_total": "number", "gyro": "gyro",
    },
    "drive": {"mode": "word", "f_d": "freq", "power": "power", "attenuation": "db"},
    "probe": {"f_p": "freq", "power": "power"},
    "sweep": {"start": "any", "stop": "any", "points": "int", "spacing": "word"},
}
REQUIRED = {
    "cavity": ("f_c", "kappa1", "kappa2", "kappa_int"),
    "mode": ("f_m", "gamma_m", "g"),
    "material": ("k_an", "m_sat", "s_total"),
    "drive": ("f_d", "power"),
    "probe": ("f_p", "power"),
    "sweep": ("start", "stop", "points"),
}
# what each named sweep varies
SWEEP_KINDS = {"power": "power", "bias": "field", "probe": "freq", "drive": "freq"}

_NUMBER = re.compile(r"^([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(.*)$")


@dataclass(frozen=True)
class Quantity:
    value: float  # canonical SI
    kind: str
    unit: str  # as written, lower case


@dataclass(frozen=True)
class SweepSpec:
    name: str
    start: float
    stop: float
    points: int
    spacing: str = "linear"

    def grid(self) -> np.ndarray:
        if self.spacing == "log":
            return np.geomspace(self.start, self.stop, self.points)
        return np.linspace(self.start, self.stop, self.points)


@dataclass(frozen=True)
class ModeEntry:
    params: MagnonModeParams
    gyro: Optional[float] = None
    bias_offset: float = 0.0


@dataclass(frozen=True)
class Scenario:
    cavity: CavityParams
    modes: tuple[ModeEntry, ...]
    material: Optional[MaterialParams] = None
    drive: Optional[DriveParams] = None
    drive_mode: Optional[str] = None
    probe: Optional[ProbeParams] = None
    sweeps: dict = field(default_factory=dict)
    source: str = "<config>"

    def system(self) -> SystemConfig:
        bias = {m.params.label: (m.gyro, -m.bias_offset) for m in self.modes if m.gyro is not None}
        return SystemConfig(
            self.cavity, tuple(m.params for m in self.modes), self.material, bias
        )

    def mode(self, label: Optional[str] = None) -> MagnonModeParams:
        label = label or self.drive_mode or self.modes[0].params.label
        for m in self.modes:
            if m.params.label == label:
                return m.params
        raise ConfigError(f"no mode labelled {label!r}", source=self.source)

    def sweep(self, name: str) -> SweepSpec:
        if name not in self.sweeps:
            raise ConfigError(f"command needs a [sweep {name}] block or --sweep {name}=...", source=self.source)
        return self.sweeps[name]

    def with_sweep(self, spec: SweepSpec) -> "Scenario":
        sweeps = dict(self.sweeps)
        sweeps[spec.name] = spec
        return Scenario(
            self.cavity, self.modes, self.material, self.drive, self.drive_mode,
            self.probe, sweeps, self.source,
        )


def parse_quantity(text: str, kind: str) -> Quantity:
    """``"10.1 GHz"`` -> Quantity in Hz.  Raises ``ValueError`` with a short reason."""
    text = text.strip()
    if kind == "word":
        if not text or " " in text:
            raise ValueError(f"expected a single word, got {text!r}")
        return Quantity(math.nan, kind, text)
    m = _NUMBER.match(text)
    if not m:
        raise ValueError(f"not a number: {text!r}")
    number, unit = float(m.group(1)), m.group(2).strip().lower().replace(" ", "")
    if not math.isfinite(number):
        raise ValueError("value must be finite")
    if kind == "int":
        if unit or number != int(number):
            raise ValueError(f"expected an integer count, got {text!r}")
        return Quantity(number, kind, "")
    if kind == "number":
        if unit:
            raise ValueError(f"dimensionless value takes no unit, got {unit!r}")
        return Quantity(number, kind, "")
    if not unit:
        raise ValueError("missing unit")
    if kind == "power" and unit == "dbm":
        return Quantity(dbm_to_watts(number), kind, unit)
    table = UNITS[kind]
    if unit not in table:
        raise ValueError(f"unit {unit!r} is not a {kind.replace('_', ' ')} unit ({', '.join(table)})")
    return Quantity(number * table[unit], kind, unit)


def _any_quantity(text: str) -> Quantity:
    """Sweep bounds: infer the kind from the unit."""
    for kind in ("freq", "power", "field"):
        try:
            return parse_quantity(text, kind)
        except ValueError:
            continue
    raise ValueError(f"sweep bound must be a frequency, power or field: {text!r}")


def _read_sections(text: str, source: str):
    sections = []  # (kind, label, header line, {key: (raw, line)})
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header {raw.strip()!r}", lineno, source)
            words = line[1:-1].split()
            if not words:
                raise ConfigError("empty section header", lineno, source)
            kind = words[0].lower()
            if kind not in SCHEMA:
                raise ConfigError(f"unknown section [{kind}]", lineno, source)
            needs_label = kind in ("mode", "sweep")
            if needs_label and len(words) != 2:
                raise ConfigError(f"[{kind}] needs exactly one name, e.g. [{kind} name]", lineno, source)
            if not needs_label and len(words) != 1:
                raise ConfigError(f"[{kind}] takes no name", lineno, source)
            label = words[1] if needs_label else None
            if kind == "sweep":
                label = label.lower()
            if any(s[0] == kind and s[1] == label for s in sections):
                raise ConfigError(f"duplicate section [{line[1:-1]}]", lineno, source)
            current = (kind, label, lineno, {})
            sections.append(current)
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value unit', got {raw.strip()!r}", lineno, source)
        if current is None:
            raise ConfigError("key outside of any section", lineno, source)
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lower()
        if key not in SCHEMA[current[0]]:
            raise ConfigError(f"unknown key {key!r} in [{current[0]}]", lineno, source)
        if key in current[3]:
            raise ConfigError(f"duplicate key {key!r}", lineno, source)
        current[3][key] = (value, lineno)
    return sections


def _values(kind, entries, header_line, source):
    out, lines = {}, {}
    for key, (raw, lineno) in entries.items():
        k = SCHEMA[kind][key]
        try:
            q = _any_quantity(raw) if k == "any" else parse_quantity(raw, k)
        except ValueError as exc:
            raise ConfigError(f"{key}: {exc}", lineno, source) from None
        out[key] = q
        lines[key] = lineno
    for key in REQUIRED[kind]:
        if key not in out:
            raise ConfigError(f"[{kind}] is missing required key {key!r}", header_line, source)
    return out, lines


def _build(factory, line, source, **kwargs):
    try:
        return factory(**kwargs)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc), line, source) from None


def parse(text: str, source: str = "<config>") -> Scenario:
    sections = _read_sections(text, source)
    cavity = material = drive = probe = None
    drive_mode = None
    modes, sweeps = [], {}
    for kind, label, hline, entries in sections:
        v, lines = _values(kind, entries, hline, source)
        if kind == "cavity":
            cavity = _build(
                CavityParams, hline, source, f_c_bare=v["f_c"].value, kappa1=v["kappa1"].value,
                kappa2=v["kappa2"].value, kappa_int=v["kappa_int"].value,
            )
        elif kind == "mode":
            params = _build(
                MagnonModeParams, hline, source, f_m=v["f_m"].value, gamma_m=v["gamma_m"].value,
                g=v["g"].value, kerr_K=v["kerr_k"].value if "kerr_k" in v else 0.0,
                drive_c=v["drive_c"].value if "drive_c" in v else 0.0, label=label,
            )
            if "bias_offset" in v and "gyro" not in v:
                raise ConfigError("bias_offset needs gyro", lines["bias_offset"], source)
            modes.append(ModeEntry(
                params,
                gyro=v["gyro"].value if "gyro" in v else None,
                bias_offset=v["bias_offset"].value if "bias_offset" in v else 0.0,
            ))
        elif kind == "material":
            if ("diameter" in v) == ("v_m" in v):
                raise ConfigError("[material] needs exactly one of diameter or V_m", hline, source)
            extra = {"gyro": v["gyro"].value} if "gyro" in v else {}
            if "diameter" in v:
                extra["diameter"] = v["diameter"].value
                extra["V_m"] = sphere_volume(v["diameter"].value)
            else:
                extra["V_m"] = v["v_m"].value
            material = _build(
                MaterialParams, hline, source, K_an=v["k_an"].value, M_sat=v["m_sat"].value,
                S_total=v["s_total"].value, **extra,
            )
        elif kind == "drive":
            drive_mode = v["mode"].unit if "mode" in v else None
            drive = _build(
                DriveParams, hline, source, f_d=v["f_d"].value, power_source=v["power"].value,
                attenuation_db=v["attenuation"].value if "attenuation" in v else 0.0,
            )
        elif kind == "probe":
            probe = _build(ProbeParams, hline, source, f_p=v["f_p"].value, power=v["power"].value)
        else:
            sweeps[label] = _sweep(label, v, lines, hline, source)
    if cavity is None:
        raise ConfigError("missing [cavity] section", None, source)
    if not modes:
        raise ConfigError("at least one [mode <label>] section is required", None, source)
    labels = [m.params.label for m in modes]
    if drive_mode is not None and drive_mode not in labels:
        raise ConfigError(f"drive mode {drive_mode!r} is not a configured mode", None, source)
    return Scenario(cavity, tuple(modes), material, drive, drive_mode, probe, sweeps, source)


def _sweep(name, v, lines, hline, source) -> SweepSpec:
    if name not in SWEEP_KINDS:
        raise ConfigError(f"unknown sweep {name!r} (known: {', '.join(SWEEP_KINDS)})", hline, source)
    want = SWEEP_KINDS[name]
    for key in ("start", "stop"):
        if v[key].kind != want:
            raise ConfigError(f"{key}: sweep {name!r} needs a {want} value", lines[key], source)
    spacing = v["spacing"].unit.lower() if "spacing" in v else "linear"
    return _checked_sweep(
        name, v["start"].value, v["stop"].value, int(v["points"].value), spacing,
        lines.get("points", hline), source,
    )


def _checked_sweep(name, start, stop, points, spacing, line, source) -> SweepSpec:
    if points < 1:
        raise ConfigError(f"sweep {name!r} needs at least one point", line, source)
    if spacing not in ("linear", "log"):
        raise ConfigError(f"spacing must be linear or log, got {spacing!r}", line, source)
    if points > 1 and not stop > start:
        raise ConfigError(f"sweep {name!r} needs stop > start", line, source)
    if spacing == "log" and start <= 0:
        raise ConfigError(f"log sweep {name!r} needs a positive start", line, source)
    return SweepSpec(name, float(start), float(stop), points, spacing)


def parse_sweep_override(text: str) -> SweepSpec:
    """``NAME=START:STOP:N[:log]`` from the command line, units required on the bounds."""
    name, sep, rest = text.partition("=")
    name = name.strip().lower()
    parts = rest.split(":")
    if not sep or len(parts) not in (3, 4):
        raise ConfigError(f"--sweep expects NAME=START:STOP:N[:log], got {text!r}", source="--sweep")
    if name not in SWEEP_KINDS:
        raise ConfigError(f"unknown sweep {name!r} (known: {', '.join(SWEEP_KINDS)})", source="--sweep")
    want = SWEEP_KINDS[name]
    try:
        start = parse_quantity(parts[0], want).value
        stop = parse_quantity(parts[1], want).value
        points = int(parse_quantity(parts[2], "int").value)
    except ValueError as exc:
        raise ConfigError(f"{name}: {exc}", source="--sweep") from None
    spacing = parts[3].strip().lower() if len(parts) == 4 else "linear"
    return _checked_sweep(name, start, stop, points, spacing, None, "--sweep")


def _fmt(value: float, kind: str) -> str:
    return f"{value!r} {CANONICAL_UNIT[kind]}"


def emit(scenario: Scenario) -> str:
    """Canonical text of ``scenario``: fixed section and key order, SI units."""
    out = []
    c = scenario.cavity
    out += ["[cavity]", f"f_c = {_fmt(c.f_c_bare, 'freq')}", f"kappa1 = {_fmt(c.kappa1, 'freq')}",
            f"kappa2 = {_fmt(c.kappa2, 'freq')}", f"kappa_int = {_fmt(c.kappa_int, 'freq')}", ""]
    for entry in scenario.modes:
        m = entry.params
        out += [f"[mode {m.label}]", f"f_m = {_fmt(m.f_m, 'freq')}", f"gamma_m = {_fmt(m.gamma_m, 'freq')}",
                f"g = {_fmt(m.g, 'freq')}", f"kerr_K = {_fmt(m.kerr_K, 'freq')}",
                f"drive_c = {_fmt(m.drive_c, 'drive_c')}"]
        if entry.gyro is not None:
            out += [f"gyro = {_fmt(entry.gyro, 'gyro')}", f"bias_offset = {_fmt(entry.bias_offset, 'freq')}"]
        out.append("")
    if scenario.material is not None:
        mat = scenario.material
        out += ["[material]", f"K_an = {_fmt(mat.K_an, 'energy_density')}",
                f"M_sat = {_fmt(mat.M_sat, 'magnetization')}"]
        if mat.diameter is not None:
            out.append(f"diameter = {_fmt(mat.diameter, 'length')}")
        else:
            out.append(f"V_m = {_fmt(mat.V_m, 'volume')}")
        out += [f"S_total = {mat.S_total!r}", f"gyro = {_fmt(mat.gyro, 'gyro')}", ""]
    if scenario.drive is not None:
        d = scenario.drive
        out.append("[drive]")
        if scenario.drive_mode is not None:
            out.append(f"mode = {scenario.drive_mode}")
        out += [f"f_d = {_fmt(d.f_d, 'freq')}", f"power = {_fmt(d.power_source, 'power')}",
                f"attenuation = {_fmt(d.attenuation_db, 'db')}", ""]
    if scenario.probe is not None:
        p = scenario.probe
        out += ["[probe]", f"f_p = {_fmt(p.f_p, 'freq')}", f"power = {_fmt(p.power, 'power')}", ""]
    for name in sorted(scenario.sweeps):
        s = scenario.sweeps[name]
        kind = SWEEP_KINDS[name]
        out += [f"[sweep {name}]", f"start = {_fmt(s.start, kind)}", f"stop = {_fmt(s.stop, kind)}",
                f"points = {s.points}", f"spacing = {s.spacing}", ""]
    return "\n".join(out).rstrip() + "\n"


def load(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read(), source=str(path))
