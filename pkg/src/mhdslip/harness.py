"""Energy audits, epsilon sweeps against the ideal run, and rate fitting.

Sweep tables are written as CSV with a header row:

    errors.csv   eps, time, norm, field, value
    runs.csv     eps, quantity, value
    fits.csv     time, norm, field, slope, intercept, r_squared, n_points, target

``norm`` is one of L2, H1, Linf, W1,<p>, eps_int_H1sq, eps_int_H2sq; the last
two are eps * int_0^t ||e||^2 over the sample lattice (trapezoid rule).
``field`` is v or H. The column-by-column description lives in
docs/formats.md.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .config import SimConfig
from .elliptic import pressure_decompose
from .errors import ConfigError, MHDError, RecordError, UsageError
from .field_ops import gradient_array
from .geometry import build_grid
from .mhd_solver import FieldState, initial_state, n_steps, run, save_checkpoint
from .norms import (
    boundary_layer_profile,
    conormal_norm_sq,
    error_norms,
    n_m_diagnostic,
    second_derivative_sq,
)
from .records import RunRecord

log = logging.getLogger(__name__)

WORKERS_ENV = "MHDSLIP_WORKERS"
DEFAULT_LADDER = (1e-2, 5e-3, 2.5e-3, 1.25e-3, 6.25e-4)

# exponents of the unsquared error norms as eps -> 0
TARGET_EXPONENTS = {"L2": 0.75, "H1": 0.25, "Linf": 0.3}


def target_exponent(norm: str) -> float | None:
    if norm.startswith("W1,"):
        return 1.0 / (2.0 * float(norm[3:]))
    return TARGET_EXPONENTS.get(norm)


# -- energy identity ---------------------------------------------------------


@dataclass
class EnergyAudit:
    times: np.ndarray
    # per interior sample: centred dE/dt + dissipation
    residual: np.ndarray
    # split: time-discretization part and semi-discrete (spatial) part
    time_part: np.ndarray
    space_part: np.ndarray
    scale: float
    max_rel: float
    rms_rel: float
    max_time_rel: float
    max_space_rel: float
    energy_drift: float
    wall_term_min: float

    @property
    def dissipative_wall_sign(self) -> bool:
        return self.wall_term_min >= 0.0

    def summary(self) -> dict[str, float]:
        return {
            "max_rel": self.max_rel,
            "rms_rel": self.rms_rel,
            "max_time_rel": self.max_time_rel,
            "max_space_rel": self.max_space_rel,
            "energy_drift": self.energy_drift,
            "wall_term_min": self.wall_term_min,
        }


def energy_audit(
    record: RunRecord,
    epsilon: float | None = None,
    zeta: float | None = None,
    zeta_h: float | None = None,
) -> EnergyAudit:
    """Residual of dE/dt + 2 eps (|Sv|^2 + |SH|^2) + 2 eps zeta oint |u_t|^2 = 0.

    dE/dt is the centred difference of the sampled energy. Residuals are
    relative to max |dissipation| when eps > 0 and to the initial energy for
    an ideal run. Parameters default to the ones echoed in the record.
    """
    cfg = record.config
    eps = float(cfg["epsilon"] if epsilon is None else epsilon)
    zv = float(cfg["zeta"] if zeta is None else zeta)
    if zeta_h is None:
        zeta_h = cfg.get("zeta_h")
    zh = zv if zeta_h is None else float(zeta_h)
    t = record.t
    if len(t) < 3:
        raise RecordError(f"energy audit needs at least 3 samples, record has {len(t)}")
    E = record.array("energy")
    rate = record.array("energy_rate")
    wall = 2.0 * eps * (zv * record.array("wall_v") + zh * record.array("wall_h"))
    diss = 2.0 * eps * (record.array("strain_v") + record.array("strain_h")) + wall

    dE = (E[2:] - E[:-2]) / (t[2:] - t[:-2])
    time_part = dE - rate[1:-1]
    space_part = rate[1:-1] + diss[1:-1]
    resid = dE + diss[1:-1]
    scale = float(np.max(np.abs(diss)))
    if not scale > 0:
        scale = max(float(E[0]), 1e-300)
    drift = float(np.max(np.abs(E - E[0])) / max(E[0], 1e-300))
    return EnergyAudit(
        times=t[1:-1],
        residual=resid,
        time_part=time_part,
        space_part=space_part,
        scale=scale,
        max_rel=float(np.max(np.abs(resid))) / scale,
        rms_rel=float(np.sqrt(np.mean(resid**2))) / scale,
        max_time_rel=float(np.max(np.abs(time_part))) / scale,
        max_space_rel=float(np.max(np.abs(space_part))) / scale,
        energy_drift=drift,
        wall_term_min=float(np.min(wall)),
    )


# -- rate fitting ------------------------------------------------------------


@dataclass
class RateFit:
    slope: float
    intercept: float
    r_squared: float
    n_points: int


def fit_rate(points: Iterable[tuple[float, float]]) -> RateFit:
    """Least-squares line through (log eps, log error)."""
    pts = list(points)
    if len(pts) < 3:
        raise UsageError(f"rate fit needs at least 3 points, got {len(pts)}")
    eps = np.array([p[0] for p in pts], float)
    err = np.array([p[1] for p in pts], float)
    if np.any(eps <= 0):
        raise UsageError("rate fit needs positive epsilon values")
    if np.any(~(err > 0)):
        raise UsageError("rate fit needs positive errors; raise the resolution if an error underflows")
    x, y = np.log(eps), np.log(err)
    slope, intercept = np.polyfit(x, y, 1)
    ss_res = float(np.sum((y - (slope * x + intercept)) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return RateFit(float(slope), float(intercept), min(max(r2, 0.0), 1.0), len(pts))


# -- sweep -------------------------------------------------------------------


def worker_count(default: int = 1) -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw is None or raw.strip() == "":
        return default
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}", WORKERS_ENV) from None
    if n < 1:
        raise ConfigError(f"{WORKERS_ENV} must be >= 1, got {n}", WORKERS_ENV)
    return n


@dataclass
class SweepRow:
    eps: float
    time: float
    norm: str
    field: str
    value: float


@dataclass
class SweepResult:
    eps_list: list[float]
    compare_times: list[float]
    rows: list[SweepRow] = field(default_factory=list)
    # per eps: sup_nm, eps_int_grad2_v, and per compare time p2_ratio@t,
    # layer_amplitude@t, layer_width@t
    runs: dict[float, dict[str, float]] = field(default_factory=dict)
    status: str = "complete"
    failures: dict[float, str] = field(default_factory=dict)

    def value(self, eps: float, time: float, norm: str, fld: str) -> float:
        for r in self.rows:
            if r.eps == eps and r.time == time and r.norm == norm and r.field == fld:
                return r.value
        raise KeyError((eps, time, norm, fld))

    def norms(self) -> list[str]:
        out = []
        for r in self.rows:
            if r.norm not in out:
                out.append(r.norm)
        return out

    def column(self, time: float, norm: str, fld: str) -> list[tuple[float, float]]:
        return [(e, self.value(e, time, norm, fld)) for e in self.eps_list if e in self.runs]

    def fit(self, time: float, norm: str, fld: str) -> RateFit:
        return fit_rate(self.column(time, norm, fld))

    def monotone(self, time: float, norm: str, fld: str) -> bool:
        """Errors non-increasing as eps decreases."""
        col = sorted(self.column(time, norm, fld), reverse=True)
        vals = [v for _, v in col]
        return all(b <= a for a, b in zip(vals, vals[1:]))

    def fits(self) -> list[dict[str, Any]]:
        out = []
        for t in self.compare_times:
            for norm in self.norms():
                for fld in ("v", "H"):
                    try:
                        f = self.fit(t, norm, fld)
                    except UsageError as exc:
                        log.warning("no fit for %s/%s at t=%g: %s", norm, fld, t, exc)
                        continue
                    out.append({"time": t, "norm": norm, "field": fld, **asdict(f), "target": target_exponent(norm)})
        return out

    def write(self, out_dir: str | Path) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "errors.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["eps", "time", "norm", "field", "value"])
            for r in self.rows:
                w.writerow([repr(r.eps), repr(r.time), r.norm, r.field, repr(r.value)])
        with open(out / "runs.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["eps", "quantity", "value"])
            for e in self.eps_list:
                for k, v in self.runs.get(e, {}).items():
                    w.writerow([repr(e), k, repr(v)])
        fits = self.fits() if len(self.runs) >= 3 else []
        with open(out / "fits.csv", "w", newline="") as fh:
            cols = ["time", "norm", "field", "slope", "intercept", "r_squared", "n_points", "target"]
            w = csv.DictWriter(fh, fieldnames=cols)
            w.writeheader()
            for f in fits:
                w.writerow(f)
        summary = {
            "status": self.status,
            "eps_list": self.eps_list,
            "compare_times": self.compare_times,
            "completed": [e for e in self.eps_list if e in self.runs],
            "failures": {repr(k): v for k, v in self.failures.items()},
        }
        (out / "sweep.json").write_text(json.dumps(summary, indent=1))


class SweepAborted(MHDError):
    category = "sweep"
    exit_code = 7

    def __init__(self, message: str, result: SweepResult):
        super().__init__(message)
        self.result = result


def _h2_sq(grid, e) -> float:
    g = gradient_array(grid, e)
    return (
        float(np.sum(grid.integrate(e * e)))
        + float(np.sum(grid.integrate(g * g)))
        + second_derivative_sq(grid, e)
    )


def _h1_sq(grid, e) -> float:
    g = gradient_array(grid, e)
    return float(np.sum(grid.integrate(e * e))) + float(np.sum(grid.integrate(g * g)))


def _on_lattice(t: float, step: float) -> bool:
    k = round(t / step)
    return abs(t - k * step) <= 1e-9 * max(1.0, t)


def _sample_plan(cfg: SimConfig, compare_times: Sequence[float], sample_dt: float) -> int:
    every = int(round(sample_dt / cfg.dt))
    if every < 1 or not _on_lattice(sample_dt, cfg.dt):
        raise ConfigError(f"sample_dt = {sample_dt} must be a positive multiple of dt = {cfg.dt}", "sample_dt")
    if not _on_lattice(cfg.t_end, sample_dt):
        raise ConfigError(f"t_end = {cfg.t_end} must be a multiple of sample_dt = {sample_dt}", "t_end")
    for t in compare_times:
        if not (0 <= t <= cfg.t_end + 1e-12) or not _on_lattice(t, sample_dt):
            raise ConfigError(f"compare time {t} must lie on the sample lattice in [0, t_end]", "compare_times")
    return every


def _ideal_member(cfg_dict: dict, every: int) -> dict[float, np.ndarray]:
    cfg = SimConfig.from_dict(cfg_dict).replace(diag_every=every, nm_every=0, checkpoint_times=(), output_dir=None)
    snaps: dict[float, np.ndarray] = {}
    run(cfg, on_sample=lambda st: snaps.__setitem__(_key(st.t), st.data.copy()))
    return snaps


def _key(t: float) -> float:
    return round(float(t), 9)


def _sweep_member(
    cfg_dict: dict,
    ideal: dict[float, np.ndarray],
    compare_times: Sequence[float],
    p_list: Sequence[float],
    every: int,
    nm_order: int,
) -> dict[str, Any]:
    """One viscous run of the ladder, measured against the ideal snapshots."""
    cfg = SimConfig.from_dict(cfg_dict).replace(diag_every=every, nm_every=0, checkpoint_times=(), output_dir=None)
    grid = build_grid(cfg)
    eps = cfg.epsilon
    want = {_key(t) for t in compare_times}
    times: list[float] = []
    h1: dict[str, list[float]] = {"v": [], "H": []}
    h2: dict[str, list[float]] = {"v": [], "H": []}
    grad2_v: list[float] = []
    nm_sup = 0.0
    at: dict[float, dict[str, Any]] = {}

    def on_sample(st: FieldState) -> None:
        nonlocal nm_sup
        k = _key(st.t)
        ref = FieldState.from_array(grid, st.t, ideal[k])
        times.append(st.t)
        for i, name in enumerate(("v", "H")):
            e = st.data[i] - ref.data[i]
            h1[name].append(_h1_sq(grid, e))
            h2[name].append(_h2_sq(grid, e))
        grad2_v.append(second_derivative_sq(grid, st.v.data))
        nm_sup = max(nm_sup, n_m_diagnostic(st, nm_order)["total"])
        if k in want:
            norms = error_norms(st, ref, p_list)
            _, p2 = pressure_decompose(st.v, st.H, eps, cfg.zeta_v)
            gp2 = gradient_array(grid, p2.data)
            denom = eps * (
                math.sqrt(conormal_norm_sq(grid, st.v.data, 2))
                + math.sqrt(conormal_norm_sq(grid, gradient_array(grid, st.v.data), 1))
            )
            layer = boundary_layer_profile(st.v, ref.v, eps)
            at[k] = {
                "norms": norms,
                "integrals": {},
                "p2_ratio": math.sqrt(float(np.sum(grid.integrate(gp2 * gp2)))) / denom,
                "layer_amplitude": layer.amplitude,
                "layer_width": layer.width,
                "state": st.data.copy(),
            }
            n = len(times)
            tt = np.array(times)
            for name in ("v", "H"):
                at[k]["integrals"][("eps_int_H1sq", name)] = eps * float(np.trapezoid(h1[name][:n], tt)) if n > 1 else 0.0
                at[k]["integrals"][("eps_int_H2sq", name)] = eps * float(np.trapezoid(h2[name][:n], tt)) if n > 1 else 0.0

    record = run(cfg, initial_state(cfg, grid), on_sample=on_sample)
    tt = np.array(times)
    return {
        "eps": eps,
        "at": at,
        "sup_nm": nm_sup,
        "eps_int_grad2_v": eps * float(np.trapezoid(grad2_v, tt)) if len(tt) > 1 else 0.0,
        "record": record.to_dict(),
    }


def epsilon_sweep(
    base_cfg: SimConfig,
    eps_list: Sequence[float] = DEFAULT_LADDER,
    compare_times: Sequence[float] = (0.5,),
    out_dir: str | Path | None = None,
    p_list: Sequence[float] = (4,),
    sample_dt: float = 0.05,
    nm_order: int = 2,
    workers: int | None = None,
) -> SweepResult:
    """Viscous runs over ``eps_list`` compared with the eps = 0 run from the same data.

    The reference is the ideal run of the same scheme on the same grid with
    the same dt. Results are assembled in ladder order whatever the
    completion order. If a run fails, completed rows are persisted with
    status "aborted" and SweepAborted is raised.
    """
    eps_list = [float(e) for e in eps_list]
    if len(eps_list) < 3:
        raise ConfigError("a sweep needs at least 3 epsilon values", "eps_list")
    if any(not e > 0 for e in eps_list):
        raise ConfigError("sweep epsilon values must be positive", "eps_list")
    if max(eps_list) / min(eps_list) < 10.0 * (1 - 1e-12):
        raise ConfigError("sweep epsilon values must span at least one decade", "eps_list")
    compare_times = [float(t) for t in compare_times]
    n_steps(base_cfg)
    every = _sample_plan(base_cfg, compare_times, sample_dt)
    workers = worker_count() if workers is None else workers
    result = SweepResult(eps_list=eps_list, compare_times=compare_times)

    ideal_cfg = base_cfg.replace(epsilon=0.0, variant="ideal")
    ideal = _ideal_member(ideal_cfg.to_dict(), every)
    members = [base_cfg.replace(epsilon=e, variant="viscous").to_dict() for e in eps_list]
    outputs: dict[float, dict] = {}

    args = (compare_times, p_list, every, nm_order)
    if workers <= 1:
        for e, m in zip(eps_list, members):
            try:
                outputs[e] = _sweep_member(m, ideal, *args)
            except MHDError as exc:
                result.failures[e] = f"{type(exc).__name__}: {exc}"
                break
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futs = {e: pool.submit(_sweep_member, m, ideal, *args) for e, m in zip(eps_list, members)}
            for e in eps_list:
                try:
                    outputs[e] = futs[e].result()
                except MHDError as exc:
                    result.failures[e] = f"{type(exc).__name__}: {exc}"
                    for f in futs.values():
                        f.cancel()
                    break

    for e in eps_list:
        out = outputs.get(e)
        if out is None:
            continue
        summary = {"sup_nm": out["sup_nm"], "eps_int_grad2_v": out["eps_int_grad2_v"]}
        for t in compare_times:
            snap = out["at"][_key(t)]
            for norm, vals in snap["norms"].items():
                for fld in ("v", "H"):
                    result.rows.append(SweepRow(e, t, norm, fld, vals[fld]))
            for (norm, fld), val in snap["integrals"].items():
                result.rows.append(SweepRow(e, t, norm, fld, val))
            summary[f"p2_ratio@{t:g}"] = snap["p2_ratio"]
            summary[f"layer_amplitude@{t:g}"] = snap["layer_amplitude"]
            summary[f"layer_width@{t:g}"] = snap["layer_width"]
        result.runs[e] = summary

    if out_dir is not None:
        out = Path(out_dir)
        grid = build_grid(base_cfg)
        for e in eps_list:
            if e in outputs:
                RunRecord.from_dict(outputs[e]["record"]).save(out / "records" / f"eps_{e:g}.json")
                for t in compare_times:
                    st = FieldState.from_array(grid, t, outputs[e]["at"][_key(t)]["state"])
                    save_checkpoint(out / "checkpoints" / f"eps_{e:g}_t{t:g}.npz", st, base_cfg.replace(epsilon=e))
        for t in compare_times:
            st = FieldState.from_array(grid, t, ideal[_key(t)])
            save_checkpoint(out / "checkpoints" / f"ideal_t{t:g}.npz", st, ideal_cfg)

    if result.failures:
        result.status = "aborted"
        if out_dir is not None:
            result.write(out_dir)
        failed = ", ".join(f"eps={k:g}" for k in result.failures)
        raise SweepAborted(f"sweep aborted after failure at {failed}", result)
    if out_dir is not None:
        result.write(out_dir)
    return result


__all__ = [
    "DEFAULT_LADDER",
    "EnergyAudit",
    "RateFit",
    "RunRecord",
    "SweepAborted",
    "SweepResult",
    "SweepRow",
    "energy_audit",
    "epsilon_sweep",
    "fit_rate",
    "target_exponent",
    "worker_count",
]
