"""Line-oriented experiment configs: one ``[command]`` header then ``key = value`` lines."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Optional

from ..errors import ConfigError

COMMANDS = ("dini", "classify", "barrier-verify", "iterate-corner", "iterate-flat",
            "solve", "probe", "sharpness")

REQUIRED = object()


def _float(text: str) -> float:
    v = float(text)
    if math.isnan(v):
        raise ValueError("nan is not allowed")
    return v


def _int(text: str) -> int:
    return int(text)


def _bool(text: str) -> bool:
    t = text.lower()
    if t in ("true", "yes", "1", "on"):
        return True
    if t in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _floats(text: str) -> tuple:
    items = [s.strip() for s in text.split(",")]
    if not items or any(not s for s in items):
        raise ValueError("empty list item")
    return tuple(_float(s) for s in items)


def _point(text: str) -> tuple:
    v = _floats(text)
    if len(v) != 2:
        raise ValueError("expected two comma-separated numbers")
    return v


def _choice(*options: str) -> Callable[[str], str]:
    def parse(text: str) -> str:
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return text
    parse.options = options  # type: ignore[attr-defined]
    return parse


_DOMAINS = _choice("disk", "half-disk", "square", "flat", "wedge", "parabola", "reflex",
                   "power-cusp", "log-cusp")
_GRAPHS = _choice("flat", "wedge", "parabola", "reflex", "power-cusp", "log-cusp")
_PROFILE = _choice("zero", "power", "constant")

_COMMON = {"output": (str, None)}

_PROFILE_KEYS = {
    "n": (_int, 2), "lam": (_float, 1.0), "delta": (_float, None), "mu": (_float, 0.5),
    "M": (_float, None), "A1": (_float, 4.0), "A2": (_float, None),
    "sigma": (_PROFILE, "power"), "sigma_c": (_float, None), "sigma_beta": (_float, 1.0),
    "f": (_PROFILE, "power"), "f_c": (_float, None), "f_beta": (_float, 1.0),
    "m_max": (_int, 200),
}

_COEF_KEYS = {"a11": (_float, 1.0), "a12": (_float, 0.0), "a22": (_float, 1.0), "lam": (_float, 1.0)}

SCHEMAS: Dict[str, Dict[str, tuple]] = {
    "dini": {"kind": (_choice("zero", "power", "logpower"), REQUIRED), "c": (_float, 1.0),
             "p": (_float, None), "q": (_float, None), "R0": (_float, 1.0), "tol": (_float, 1e-8)},
    "classify": {"domain": (_GRAPHS, REQUIRED), "alpha": (_float, 0.5), "q": (_float, 2.0),
                 "x0": (_float, 0.0), "angle_tol": (_float, 1e-4), "residual_tol": (_float, 1e-6),
                 "probes": (_int, 100)},
    "barrier-verify": {"n": (_int, 2), "lam": (_float, 1.0), "M": (_float, None),
                       "delta": (_float, None), "epsilon": (_float, None), "g": (_float, 0.0),
                       "strict": (_bool, True), "samples": (_int, 10_000)},
    "iterate-corner": dict(_PROFILE_KEYS),
    "iterate-flat": dict(_PROFILE_KEYS, oracle=(_choice("random", "adversarial", "A", "B"), "random"),
                         tol=(_float, 1e-6)),
    "solve": dict(_COEF_KEYS, domain=(_DOMAINS, "disk"), h=(_float, 1 / 64), rhs=(_float, 1.0),
                  alpha=(_float, 0.5), q=(_float, 2.0), tol=(_float, 1e-10),
                  sandwich=(_bool, False), delta=(_float, 1 / 16), m_max=(_int, 3), cells=(_int, 512),
                  corrupt=(_float, 0.0), corrupt_at=(_point, (0.0, 0.5)), write_field=(_bool, True)),
    "probe": dict(_COEF_KEYS, domain=(_DOMAINS, "half-disk"), rhs=(_float, 1.0),
                  alpha=(_float, 0.5), q=(_float, 2.0), x0=(_point, (0.0, 0.0)),
                  l=(_point, (0.0, 1.0)), k_min=(_int, 3), k_max=(_int, 10), cells=(_int, 256),
                  h=(_float, None)),
    "sharpness": {"alpha_grid": (_floats, (0.5, 0.75, 1.0)), "q_grid": (_floats, (0.5, 1.0, 1.5, 2.0)),
                  "wedge": (_bool, True), "k_min": (_int, 3), "k_max": (_int, 10),
                  "cells": (_int, 256), "h": (_float, None)},
}


@dataclass
class ExperimentConfig:
    command: str
    params: Dict[str, Any] = field(default_factory=dict)
    explicit: tuple = ()
    output: Optional[str] = None

    def __getitem__(self, key: str):
        return self.params[key]

    def get(self, key: str, default=None):
        v = self.params.get(key)
        return default if v is None else v

    def semantic(self) -> tuple:
        return (self.command, tuple(sorted((k, self.params[k]) for k in self.explicit)), self.output)


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a config; errors carry the 1-based line and the key."""
    command = None
    raw: Dict[str, tuple] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if body.startswith("["):
            if not body.endswith("]"):
                raise ConfigError("unterminated section header", lineno, None)
            if command is not None:
                raise ConfigError("only one section is allowed", lineno, None)
            command = body[1:-1].strip()
            if command not in COMMANDS:
                raise ConfigError(f"unknown command {command!r}", lineno, command)
            continue
        if command is None:
            raise ConfigError("key before section header", lineno, None)
        if "=" not in body:
            raise ConfigError("expected 'key = value'", lineno, None)
        key, value = (s.strip() for s in body.split("=", 1))
        schema = SCHEMAS[command]
        if key not in schema and key not in _COMMON:
            raise ConfigError(f"unknown key {key!r} for [{command}]", lineno, key)
        if key in raw:
            raise ConfigError(f"duplicate key {key!r}", lineno, key)
        raw[key] = (value, lineno)
    if command is None:
        raise ConfigError("missing section header", None, None)

    schema = SCHEMAS[command]
    params: Dict[str, Any] = {}
    for key, (conv, default) in schema.items():
        if key in raw:
            value, lineno = raw[key]
            try:
                params[key] = conv(value)
            except ValueError as exc:
                raise ConfigError(f"bad value for {key!r}: {exc}", lineno, key) from None
        elif default is REQUIRED:
            raise ConfigError(f"missing required key {key!r}", None, key)
        else:
            params[key] = default
    output = raw["output"][0] if "output" in raw else None
    explicit = tuple(k for k in raw if k != "output")
    return ExperimentConfig(command, params, explicit, output)


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ",".join(_format(float(v)) for v in value)
    return str(value)


def serialize(config: ExperimentConfig) -> str:
    """Text that parses back to the same command, explicit keys and output."""
    lines = [f"[{config.command}]"]
    for k in config.explicit:
        lines.append(f"{k} = {_format(config.params[k])}")
    if config.output is not None:
        lines.append(f"output = {config.output}")
    return "\n".join(lines) + "\n"
