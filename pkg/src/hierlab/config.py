"""Scenario configuration: sectioned key=value files (UTF-8) read with configparser.

Every key is declared in ``SCHEMA`` with a converter and a default.  Unknown
sections or keys are rejected, and errors carry the line and column of the
offending text.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import re
from dataclasses import dataclass

from .errors import ConfigError
from .rng import DEFAULT_SEED

KINDS = ("duality", "uniqueness", "existence", "chaos", "counterexample", "definetti", "regimes")


def _int(s: str) -> int:
    return int(s.strip(), 0)


def _float(s: str) -> float:
    return float(s.strip())


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _floats(s: str) -> tuple[float, ...]:
    return tuple(float(p) for p in s.split(",") if p.strip())


def _ints(s: str) -> tuple[int, ...]:
    return tuple(int(p, 0) for p in s.split(",") if p.strip())


def _complexes(s: str) -> tuple[complex, ...]:
    return tuple(complex(p.strip().replace(" ", "")) for p in s.split(",") if p.strip())


def _kind(s: str) -> str:
    v = s.strip()
    if v not in KINDS:
        raise ValueError(f"unknown experiment kind {v!r}; expected one of {', '.join(KINDS)}")
    return v


def _nl_kind(s: str) -> str:
    v = s.strip()
    if v not in ("cubic", "hartree", "zero"):
        raise ValueError(f"unknown nonlinearity {v!r}")
    return v


def _name(s: str) -> str:
    v = s.strip()
    if not re.fullmatch(r"[A-Za-z0-9_.-]+", v):
        raise ValueError(f"scenario name {v!r} must match [A-Za-z0-9_.-]+")
    return v


SCHEMA = {
    "scenario": {"name": (_name, None), "kind": (_kind, None), "seed": (_int, DEFAULT_SEED)},
    "model": {"K": (_int, 2), "s": (_float, 1.0), "sigma": (_float, 1.0), "labels": (_ints, None), "k_cap": (_int, 4)},
    "dynamics": {"kind": (_nl_kind, "cubic"), "lambda": (_float, 1.0), "Vhat": (_floats, ())},
    "time": {"t0": (_float, 0.0), "t1": (_float, 1.0), "dt": (_float, 1e-3)},
    "measure": {"file": (str.strip, None), "weights": (_floats, None), "norms": (_floats, None)},
    "hierarchy": {"K_max": (_int, 3)},
    "tolerances": {"residual": (_float, 1e-6), "negative": (_float, 1e-2), "equal": (_float, 1e-10),
                   "order_slack": (_float, 0.3), "slack": (_float, 1e-9)},
    "duality": {"refine": (_bool, True), "negative_control": (_bool, True)},
    "chaos": {"n_list": (_ints, (2, 3, 4, 5, 6)), "t1": (_float, 0.5), "phi0": (_complexes, None), "k": (_int, 1),
              "cap": (_int, 500), "slack": (_float, 0.10)},
    "counterexample": {"L": (_float, 8.0), "h": (_float, 1e-5), "t_list": (_floats, None), "centers": (_floats, (0.0, 0.5, 1.0))},
    "definetti": {"k": (_int, 1), "n_list": (_ints, None)},
    "regimes": {"d": (_int, 1), "s": (str.strip, "0"), "alpha": (str.strip, "1")},
}


@dataclass
class Scenario:
    values: dict  # section -> key -> value
    source: str | None = None

    def __getitem__(self, section: str) -> dict:
        return self.values[section]

    @property
    def name(self) -> str:
        return self.values["scenario"]["name"]

    @property
    def kind(self) -> str:
        return self.values["scenario"]["kind"]

    @property
    def seed(self) -> int:
        return self.values["scenario"]["seed"]

    def canonical(self) -> str:
        return json.dumps(self.values, sort_keys=True, default=_jsonable)

    def digest(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:12]


def _jsonable(v):
    if isinstance(v, complex):
        return [v.real, v.imag]
    raise TypeError(type(v))


def defaults(kind: str, name: str | None = None) -> Scenario:
    vals = {sec: {k: d for k, (_, d) in keys.items()} for sec, keys in SCHEMA.items()}
    vals["scenario"]["kind"] = kind
    vals["scenario"]["name"] = name or kind
    return Scenario(vals)


def _locate(lines: list[str], section: str | None, key: str | None):
    """1-based (line, column) of a section header or of a key inside a section."""
    current = None
    for i, raw in enumerate(lines, start=1):
        stripped = raw.strip()
        m = re.match(r"\s*\[([^\]]*)\]", raw)
        if m:
            current = m.group(1).strip()
            if key is None and current == section:
                return i, raw.index("[") + 1
            continue
        if key is not None and current == section and stripped and not stripped.startswith(("#", ";")):
            km = re.match(r"\s*([^=:]+?)\s*[=:]", raw)
            if km and km.group(1).strip() == key:
                return i, km.start(1) + 1
    return None, None


def _value_column(lines, line, key):
    if line is None:
        return None
    raw = lines[line - 1]
    m = re.match(r"\s*[^=:]+?\s*[=:]\s*", raw)
    return m.end() + 1 if m else 1


def parse_text(text: str, source: str | None = None, kind: str | None = None) -> Scenario:
    """Parse scenario text; ``kind`` fills scenario.kind when the file omits it."""
    lines = text.splitlines()
    cp = configparser.ConfigParser(interpolation=None, delimiters=("=",), comment_prefixes=("#", ";"),
                                   inline_comment_prefixes=None, empty_lines_in_values=False, strict=True)
    cp.optionxform = str
    try:
        cp.read_string(text, source=source or "<config>")
    except configparser.MissingSectionHeaderError as e:
        raise ConfigError("key outside any [section]", e.lineno, 1) from None
    except configparser.DuplicateSectionError as e:
        raise ConfigError(f"duplicate section [{e.section}]", e.lineno, 1) from None
    except configparser.DuplicateOptionError as e:
        line, col = e.lineno, _locate(lines[: e.lineno], e.section, e.option)[1]
        raise ConfigError(f"duplicate key {e.option!r} in [{e.section}]", line, col or 1) from None
    except configparser.ParsingError as e:
        lineno = e.errors[0][0]
        raw = lines[lineno - 1] if 0 < lineno <= len(lines) else ""
        raise ConfigError(f"malformed line {raw.strip()!r} (expected key = value)", lineno, 1) from None
    vals = {sec: {k: d for k, (_, d) in keys.items()} for sec, keys in SCHEMA.items()}
    for sec in cp.sections():
        if sec not in SCHEMA:
            line, col = _locate(lines, sec, None)
            raise ConfigError(f"unknown section [{sec}]", line, col)
        for key, raw in cp.items(sec):
            if key not in SCHEMA[sec]:
                line, col = _locate(lines, sec, key)
                raise ConfigError(f"unknown key {key!r} in [{sec}]", line, col)
            conv, _ = SCHEMA[sec][key]
            try:
                vals[sec][key] = conv(raw)
            except (ValueError, TypeError) as e:
                line, _ = _locate(lines, sec, key)
                raise ConfigError(f"bad value for {sec}.{key}: {e}", line, _value_column(lines, line, key)) from None
    sc = vals["scenario"]
    if sc["kind"] is None:
        if kind is None:
            raise ConfigError("missing scenario.kind", *_locate(lines, "scenario", None))
        sc["kind"] = kind
    elif kind is not None and sc["kind"] != kind:
        line, col = _locate(lines, "scenario", "kind")
        raise ConfigError(f"config is a {sc['kind']!r} scenario, not {kind!r}", line, col)
    if sc["name"] is None:
        sc["name"] = sc["kind"]
    _validate(vals, lines)
    return Scenario(vals, source)


def _validate(vals: dict, lines: list[str]):
    def fail(sec, key, msg):
        line, col = _locate(lines, sec, key)
        raise ConfigError(f"{sec}.{key}: {msg}", line, col)

    if vals["model"]["K"] < 0:
        fail("model", "K", "must be >= 0")
    t = vals["time"]
    if t["dt"] <= 0:
        fail("time", "dt", "must be positive")
    if t["t1"] <= t["t0"]:
        fail("time", "t1", "must exceed t0")
    if t["dt"] > t["t1"] - t["t0"]:
        fail("time", "dt", "exceeds the time interval")
    if vals["hierarchy"]["K_max"] < 1:
        fail("hierarchy", "K_max", "must be >= 1")
    if not 0 <= vals["scenario"]["seed"] < 2**64:
        fail("scenario", "seed", "must be an unsigned 64-bit integer")
    if vals["counterexample"]["h"] <= 0:
        fail("counterexample", "h", "must be positive")


def load(path: str, kind: str | None = None) -> Scenario:
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e.strerror}") from None
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as e:
        before = data[: e.start]
        line = before.count(b"\n") + 1
        col = e.start - (before.rfind(b"\n") + 1) + 1
        raise ConfigError("config is not valid UTF-8", line, col) from None
    return parse_text(text, path, kind)
