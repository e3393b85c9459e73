"""Run configuration and its key-value file format.

A config file holds one ``key = value`` pair per line. Values are Python
literals (numbers, quoted strings, tuples); bare words are read as strings.
Initial-condition parameters use dotted keys, e.g. ``ic_params.seed = 7``.
Lines starting with ``#`` are ignored.
"""

from __future__ import annotations

import ast
import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .errors import ConfigError

VARIANTS = ("viscous", "ideal")


@dataclass
class SimConfig:
    epsilon: float = 1e-2
    zeta: float = 0.5
    # magnetic slip coefficient; None means "same as zeta"
    zeta_h: float | None = None
    dt: float = 5e-4
    t_end: float = 1.0
    dim: int = 2
    n_tangential: int = 128
    n_normal: int = 129
    ic_name: str = "random-smooth"
    ic_params: dict[str, Any] = field(default_factory=dict)
    variant: str = "viscous"
    diag_every: int = 1
    # N_m sampling cadence in steps; 0 disables it
    nm_every: int = 0
    nm_order: int = 2
    checkpoint_times: tuple[float, ...] = ()
    output_dir: str | None = None
    check_cfl: bool = True

    def __post_init__(self):
        self.checkpoint_times = tuple(float(t) for t in self.checkpoint_times)
        self.ic_params = dict(self.ic_params)
        self.validate()

    @property
    def zeta_v(self) -> float:
        return self.zeta

    @property
    def zeta_magnetic(self) -> float:
        return self.zeta if self.zeta_h is None else self.zeta_h

    def validate(self) -> None:
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}, got {self.variant!r}", "variant")
        if not (math.isfinite(self.epsilon) and 0.0 <= self.epsilon <= 1.0):
            raise ConfigError(f"epsilon must lie in [0, 1], got {self.epsilon}", "epsilon")
        if self.variant == "viscous" and self.epsilon == 0.0:
            raise ConfigError("viscous variant needs epsilon > 0", "epsilon")
        if self.variant == "ideal" and self.epsilon != 0.0:
            raise ConfigError("ideal variant needs epsilon = 0", "epsilon")
        for name in ("zeta", "zeta_h"):
            z = getattr(self, name)
            if z is not None and not (math.isfinite(z) and abs(z) <= 1.0):
                raise ConfigError(f"|{name}| must be <= 1, got {z}", name)
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ConfigError(f"dt must be positive, got {self.dt}", "dt")
        if not (math.isfinite(self.t_end) and self.t_end >= 0):
            raise ConfigError(f"t_end must be non-negative, got {self.t_end}", "t_end")
        if self.dim not in (2, 3):
            raise ConfigError(f"dim must be 2 or 3, got {self.dim}", "dim")
        if self.n_tangential < 4 or self.n_tangential % 2:
            raise ConfigError(
                f"n_tangential must be even and >= 4, got {self.n_tangential}", "n_tangential"
            )
        if self.n_normal < 5:
            raise ConfigError(f"n_normal must be >= 5, got {self.n_normal}", "n_normal")
        if self.diag_every < 1:
            raise ConfigError("diag_every must be >= 1", "diag_every")
        if self.nm_every < 0:
            raise ConfigError("nm_every must be >= 0", "nm_every")
        if self.nm_order < 1:
            raise ConfigError("nm_order must be >= 1", "nm_order")

    def replace(self, **changes) -> SimConfig:
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        d["checkpoint_times"] = list(self.checkpoint_times)
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> SimConfig:
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            name = sorted(unknown)[0]
            raise ConfigError(f"unknown config key {name!r}", name)
        return cls(**d)


def _parse_value(text: str) -> Any:
    text = text.strip()
    if text.lower() in ("none", "null"):
        return None
    if text.lower() in ("true", "false"):
        return text.lower() == "true"
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text


def parse_config(text: str) -> SimConfig:
    values: dict[str, Any] = {}
    ic_params: dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}", None)
        key, value = (s.strip() for s in line.split("=", 1))
        if key.startswith("ic_params."):
            ic_params[key.split(".", 1)[1]] = _parse_value(value)
        else:
            values[key] = _parse_value(value)
    if ic_params:
        values.setdefault("ic_params", {})
        values["ic_params"] = {**values["ic_params"], **ic_params}
    for key in ("dim", "n_tangential", "n_normal", "diag_every", "nm_every", "nm_order"):
        if key in values and isinstance(values[key], float) and values[key].is_integer():
            values[key] = int(values[key])
    if "checkpoint_times" in values and not isinstance(values["checkpoint_times"], (list, tuple)):
        values["checkpoint_times"] = (values["checkpoint_times"],)
    return SimConfig.from_dict(values)


def load_config(path: str | Path) -> SimConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}", None) from exc
    return parse_config(text)


def format_config(cfg: SimConfig) -> str:
    lines = []
    for key, value in cfg.to_dict().items():
        if key == "ic_params":
            for k, v in value.items():
                lines.append(f"ic_params.{k} = {v!r}")
        elif key == "checkpoint_times":
            lines.append(f"{key} = {tuple(value)!r}")
        else:
            lines.append(f"{key} = {value!r}")
    return "\n".join(lines) + "\n"
