"""RunRecord: per-run time series and checkpoint references, with a JSON form.

JSON layout (``format = "mhdslip-run"``, ``version = 1``)::

    config        SimConfig as a flat dict
    status        "complete", or "failed: <message>"
    times         sample times, strictly increasing
    series        name -> list of floats, one per sample time
    nm_times      N_m sample times
    nm_series     name -> list of floats, one per N_m sample time
    checkpoints   list of {"t": float, "path": str}

Series names: energy, energy_v, energy_h, strain_v, strain_h, wall_v,
wall_h, energy_rate, div_v, div_h, wall_vorticity_v, wall_vorticity_h,
cross_helicity. ``strain_*`` are ||S u||^2, ``wall_*`` are oint |u_t|^2 over
both walls and ``energy_rate`` is <v, dv/dt> + <H, dH/dt> from the
semi-discrete right-hand side. Floats are written with ``repr`` precision so
a write/read cycle is bit-exact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .errors import RecordError

FORMAT = "mhdslip-run"
VERSION = 1


@dataclass
class RunRecord:
    config: dict[str, Any]
    times: list[float] = field(default_factory=list)
    series: dict[str, list[float]] = field(default_factory=dict)
    nm_times: list[float] = field(default_factory=list)
    nm_series: dict[str, list[float]] = field(default_factory=dict)
    checkpoints: list[dict[str, Any]] = field(default_factory=list)
    status: str = "complete"

    def append(self, t: float, values: dict[str, float]) -> None:
        if self.times and not t > self.times[-1]:
            raise RecordError(f"sample time {t} not after {self.times[-1]}")
        if self.times and set(values) != set(self.series):
            raise RecordError("series names changed between samples")
        self.times.append(float(t))
        for k, val in values.items():
            self.series.setdefault(k, []).append(float(val))

    def append_nm(self, t: float, values: dict[str, float]) -> None:
        self.nm_times.append(float(t))
        for k, val in values.items():
            self.nm_series.setdefault(k, []).append(float(val))

    def array(self, name: str) -> np.ndarray:
        try:
            return np.asarray(self.series[name])
        except KeyError:
            raise RecordError(f"record has no series {name!r}") from None

    @property
    def t(self) -> np.ndarray:
        return np.asarray(self.times)

    def validate(self) -> None:
        t = self.t
        if np.any(np.diff(t) <= 0):
            raise RecordError("time stamps are not strictly increasing")
        for k, v in self.series.items():
            if len(v) != len(t):
                raise RecordError(f"series {k!r} has {len(v)} samples, expected {len(t)}")
        for k, v in self.nm_series.items():
            if len(v) != len(self.nm_times):
                raise RecordError(f"N_m series {k!r} length mismatch")

    # -- persistence ----------------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        return {
            "format": FORMAT,
            "version": VERSION,
            "config": self.config,
            "status": self.status,
            "times": self.times,
            "series": self.series,
            "nm_times": self.nm_times,
            "nm_series": self.nm_series,
            "checkpoints": self.checkpoints,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> RunRecord:
        if d.get("format") != FORMAT:
            raise RecordError(f"not a run record (format={d.get('format')!r})")
        if d.get("version") != VERSION:
            raise RecordError(f"unsupported run record version {d.get('version')!r}")
        rec = cls(
            config=d["config"],
            times=[float(x) for x in d["times"]],
            series={k: [float(x) for x in v] for k, v in d["series"].items()},
            nm_times=[float(x) for x in d.get("nm_times", [])],
            nm_series={k: [float(x) for x in v] for k, v in d.get("nm_series", {}).items()},
            checkpoints=list(d.get("checkpoints", [])),
            status=d.get("status", "complete"),
        )
        rec.validate()
        return rec

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=1))
        return path

    @classmethod
    def load(cls, path: str | Path) -> RunRecord:
        try:
            d = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise RecordError(f"cannot read run record {path}: {exc}") from exc
        return cls.from_dict(d)
