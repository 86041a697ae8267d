"""Experiment configuration: flat key=value files with dotted keys.

Example::

    # sphere classification run
    metric.name   = sphere
    metric.radius = 1.0
    p.list        = -1,0.5,2
    grid.N        = 200
    curve.x0      = 1.5707963267948966,0
    curve.x1      = 1.5707963267948966,4.71238898038469
    seed          = 0
    output.path   = out/classify.json
    output.format = json

Lines starting with '#' are comments; values are parsed on demand by the
typed accessors.  The format needs no third-party parser in any language.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

KNOWN_METRICS = ("euclidean", "sphere", "randers")


def parse_config_text(text: str) -> dict:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.split("#", 1)[0].strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        values[key] = value
    return values


@dataclass
class ExperimentConfig:
    """Typed view over the flat key map, validated on construction."""

    values: dict = field(default_factory=dict)

    # -- typed accessors ------------------------------------------------------

    def has(self, key: str) -> bool:
        return key in self.values

    def get_str(self, key: str, default=None) -> str:
        if key not in self.values:
            if default is None:
                raise ConfigError(f"missing required config key '{key}'")
            return default
        return self.values[key]

    def get_int(self, key: str, default=None) -> int:
        raw = self.get_str(key, None if default is None else str(default))
        try:
            return int(raw)
        except ValueError as exc:
            raise ConfigError(f"config key '{key}': expected integer, got {raw!r}") from exc

    def get_float(self, key: str, default=None) -> float:
        raw = self.get_str(key, None if default is None else repr(default))
        try:
            return float(raw)
        except ValueError as exc:
            raise ConfigError(f"config key '{key}': expected number, got {raw!r}") from exc

    def get_bool(self, key: str, default: bool = False) -> bool:
        raw = self.get_str(key, str(default)).lower()
        if raw in ("1", "true", "yes", "on"):
            return True
        if raw in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"config key '{key}': expected boolean, got {raw!r}")

    def get_floats(self, key: str, default=None) -> list:
        if key not in self.values and default is not None:
            return list(default)
        raw = self.get_str(key)
        try:
            return [float(v) for v in raw.split(",") if v.strip() != ""]
        except ValueError as exc:
            raise ConfigError(f"config key '{key}': expected comma-separated "
                              f"numbers, got {raw!r}") from exc

    def get_matrix(self, key: str) -> np.ndarray:
        raw = self.get_str(key)
        try:
            rows = [[float(v) for v in row.split(",")] for row in raw.split(";")]
            return np.asarray(rows, dtype=float)
        except ValueError as exc:
            raise ConfigError(f"config key '{key}': expected ';'-separated "
                              f"rows of numbers, got {raw!r}") from exc

    # -- derived views ----------------------------------------------------------

    @property
    def metric_name(self) -> str:
        return self.get_str("metric.name").lower()

    def metric_params(self) -> dict:
        params = {}
        if self.has("metric.dim"):
            params["dim"] = self.get_int("metric.dim")
        if self.has("metric.radius"):
            params["radius"] = self.get_float("metric.radius")
        if self.has("metric.a"):
            params["a"] = self.get_matrix("metric.a")
        if self.has("metric.b"):
            params["b"] = np.asarray(self.get_floats("metric.b"), dtype=float)
        return params

    @property
    def p_list(self) -> list:
        return self.get_floats("p.list", [2.0])

    @property
    def grid_n(self) -> int:
        return self.get_int("grid.N", 200)

    @property
    def seed(self) -> int:
        return self.get_int("seed", 0)

    def tol(self, name: str, default: float) -> float:
        return self.get_float(f"tol.{name}", default)

    def validate(self) -> None:
        if self.metric_name not in KNOWN_METRICS:
            raise ConfigError(
                f"metric.name '{self.metric_name}' not in catalog {KNOWN_METRICS}")
        for p in self.p_list:
            if p == 0.0:
                raise ConfigError("p.list entries must be nonzero")
        n = self.grid_n
        if n < 20 or n % 2:
            raise ConfigError(f"grid.N must be even and >= 20, got {n}")
        fmt = self.get_str("output.format", "json")
        if fmt not in ("json", "csv"):
            raise ConfigError(f"output.format must be json or csv, got {fmt!r}")


def load_config(path, overrides: dict | None = None) -> ExperimentConfig:
    """Read, override (CLI flags win) and validate a config file."""
    try:
        with open(path) as fh:
            values = parse_config_text(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for key, val in (overrides or {}).items():
        if val is not None:
            values[key] = str(val)
    cfg = ExperimentConfig(values)
    cfg.validate()
    return cfg
