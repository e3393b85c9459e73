"""Time integration of viscous and ideal incompressible MHD in the channel.

Both variants share one integrator: classical RK4 with the Leray projection
applied to every stage right-hand side,

    dv/dt = P[ -A(v)v + A(H)H + eps Lap_h v ]
    dH/dt = P[ -A(v)H + A(H)v + eps Lap_h H ]

where ``A(a)b`` is the skew-symmetric advection of field_ops and ``Lap_h``
closes the wall ghosts with the Navier rule (slip coefficient zeta for v,
zeta_h for H). The pressure never appears explicitly. The skew form makes
the nonlinear terms exactly energy- and cross-helicity-neutral on the grid,
and the v <-> H symmetry exact, so v = H stays v = H bit for bit.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .boundary import WallClosure, close_ghosts_array, wall_vorticity_residual
from .config import SimConfig
from .errors import BlowUpError, ConfigError, MHDError, RecordError, StepSizeError
from .field_ops import (
    VectorField,
    divergence_array,
    gradient_array,
    laplacian_tangential,
    normal_second_difference,
    project_array,
    projector,
    skew_advect_pair,
    tangential_fft,
    tangential_ifft,
    tangential_wavenumbers,
)
from .geometry import ChannelGrid, build_grid, make_grid
from .records import RunRecord

log = logging.getLogger(__name__)

DIV_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class FieldState:
    t: float
    v: VectorField
    H: VectorField

    @property
    def grid(self) -> ChannelGrid:
        return self.v.grid

    @property
    def data(self) -> np.ndarray:
        """v and H stacked, shape (2, dim, *grid.shape)."""
        return np.stack([self.v.data, self.H.data])

    @classmethod
    def from_array(cls, grid: ChannelGrid, t: float, u: np.ndarray) -> FieldState:
        return cls(float(t), VectorField(grid, u[0]), VectorField(grid, u[1]))

    def energy(self) -> float:
        g = self.grid
        return 0.5 * float(np.sum(g.integrate(self.v.data**2 + self.H.data**2)))

    def div_residuals(self) -> tuple[float, float]:
        return _rel_div(self.grid, self.v.data), _rel_div(self.grid, self.H.data)

    def check(self, tol: float = DIV_TOL) -> None:
        """Raise if the state violates the solenoidal / impermeable invariants."""
        d = self.grid.dim
        for name, u in (("v", self.v.data), ("H", self.H.data)):
            if np.any(u[d - 1][..., 0] != 0.0) or np.any(u[d - 1][..., -1] != 0.0):
                raise MHDError(f"{name} has a non-zero normal trace")
            r = _rel_div(self.grid, u)
            if r > tol:
                raise MHDError(f"{name} divergence residual {r:.3e} exceeds {tol:.0e}")


def _rel_div(grid: ChannelGrid, u: np.ndarray) -> float:
    div = divergence_array(grid, u)
    num = math.sqrt(float(grid.integrate(div * div)))
    g = gradient_array(grid, u)
    den = math.sqrt(float(np.sum(grid.integrate(g * g))))
    return num / den if den > 0 else num


# -- initial conditions ------------------------------------------------------


def _zeros(grid):
    return np.zeros((grid.dim,) + grid.shape)


def _stream_pair(grid, psi_amp, kx, m, phase=0.0):
    """Field from the stream function amp sin(kx x + phase) sin(m pi z), in the x-z plane."""
    mesh = grid.mesh()
    X, Z = mesh[0], mesh[-1]
    u = _zeros(grid)
    s = np.sin(kx * X + phase)
    c = np.cos(kx * X + phase)
    u[0] = psi_amp * m * np.pi * s * np.cos(m * np.pi * Z)
    u[-1] = -psi_amp * kx * c * np.sin(m * np.pi * Z)
    return u


def ic_taylor_green(grid, amp_v=1.0, amp_h=0.5):
    v = _stream_pair(grid, amp_v, 1, 1)
    H = _stream_pair(grid, amp_h, 2, 1, phase=0.5)
    return v, H


def ic_parallel_shear(grid, k=1, amp=1.0):
    Z = grid.mesh()[-1]
    v = _zeros(grid)
    v[0] = amp * np.cos(k * np.pi * Z)
    return v, _zeros(grid)


def ic_elsasser(grid, amp=1.0, profile="shear", seed=0):
    if profile == "shear":
        v, _ = ic_parallel_shear(grid, 1, amp)
    elif profile == "random":
        v, _ = ic_random_smooth(grid, seed=seed, amp_v=amp, amp_h=0.0)
    else:
        raise ConfigError(f"elsasser profile must be 'shear' or 'random', got {profile!r}", "ic_params.profile")
    return v, v.copy()


def _random_field(grid, rng, modes, amp):
    mesh = grid.mesh()
    Z = mesh[-1]
    tang = mesh[:-1]
    u = _zeros(grid)
    ks = range(0, modes + 1)
    combos = [(kx,) for kx in ks] if grid.dim == 2 else [(kx, ky) for kx in ks for ky in range(-modes, modes + 1)]
    for kv in combos:
        arg = sum(k * x for k, x in zip(kv, tang))
        kk = math.sqrt(sum(k * k for k in kv))
        for m in range(1, modes + 1):
            decay = 1.0 / (1.0 + kk**2 + m**2)
            for i in range(grid.dim - 1):
                a, ph = rng.standard_normal(), rng.uniform(0, 2 * np.pi)
                u[i] += a * decay * np.cos(arg + ph) * np.cos((m - 1) * np.pi * Z)
            a, ph = rng.standard_normal(), rng.uniform(0, 2 * np.pi)
            u[-1] += a * decay * np.cos(arg + ph) * np.sin(m * np.pi * Z)
    peak = np.max(np.abs(u))
    return amp * u / peak if peak > 0 else u


def ic_random_smooth(grid, seed=0, modes=3, amp_v=1.0, amp_h=0.5):
    rng = np.random.default_rng(seed)
    v = _random_field(grid, rng, int(modes), amp_v)
    H = _random_field(grid, rng, int(modes), amp_h)
    return v, H


def ic_zero(grid):
    return _zeros(grid), _zeros(grid)


INITIAL_CONDITIONS: dict[str, Callable] = {
    "taylor-green-channel": ic_taylor_green,
    "parallel-shear": ic_parallel_shear,
    "elsasser": ic_elsasser,
    "random-smooth": ic_random_smooth,
    "zero": ic_zero,
}


def initial_condition(name: str, grid: ChannelGrid, params: dict | None = None) -> FieldState:
    """Leray-projected initial state from the named profile."""
    try:
        fn = INITIAL_CONDITIONS[name]
    except KeyError:
        raise ConfigError(
            f"unknown initial condition {name!r}; available: {sorted(INITIAL_CONDITIONS)}",
            "ic_name",
        ) from None
    try:
        v, H = fn(grid, **(params or {}))
    except TypeError as exc:
        raise ConfigError(f"bad parameters for {name!r}: {exc}", "ic_params") from exc
    u = project_array(grid, np.stack([v, H]), passes=2)
    if name == "elsasser":
        u[1] = u[0]
    state = FieldState.from_array(grid, 0.0, u)
    state.check()
    return state


def initial_state(cfg: SimConfig, grid: ChannelGrid | None = None) -> FieldState:
    grid = grid or build_grid(cfg)
    return initial_condition(cfg.ic_name, grid, cfg.ic_params)


# -- right-hand side ---------------------------------------------------------


class Dynamics:
    """Semi-discrete right-hand side for one configuration."""

    def __init__(self, grid: ChannelGrid, epsilon: float, zeta_v: float = 0.0, zeta_h: float = 0.0):
        self.grid = grid
        self.epsilon = float(epsilon)
        self.closures = (WallClosure(zeta_v), WallClosure(zeta_h))
        self._ks = tangential_wavenumbers(grid)
        self._k2 = sum(k**2 for k in self._ks)
        self._proj = projector(grid)

    @classmethod
    def from_config(cls, cfg: SimConfig, grid: ChannelGrid) -> Dynamics:
        return cls(grid, cfg.epsilon, cfg.zeta_v, cfg.zeta_magnetic)

    def viscous(self, u: np.ndarray) -> np.ndarray:
        g = self.grid
        out = np.empty_like(u)
        for f in range(2):
            padded = close_ghosts_array(g, u[f], self.closures[f])
            out[f] = laplacian_tangential(g, u[f]) + normal_second_difference(g, padded)
        return out

    def unprojected(self, u: np.ndarray) -> np.ndarray:
        g = self.grid
        vv, hh, vh, hv = skew_advect_pair(g, u[0], u[1])
        out = np.stack([hh - vv, hv - vh])
        if self.epsilon > 0.0:
            out += self.epsilon * self.viscous(u)
        return out

    def __call__(self, u: np.ndarray) -> np.ndarray:
        """Projected right-hand side for the stacked state ``u = (v, H)``.

        Same operator as ``project_array(grid, self.unprojected(u))`` but
        assembled with tangential derivatives in Fourier space, which halves
        the number of transforms.
        """
        g = self.grid
        d = g.dim
        ks = self._ks
        v, H = u[0], u[1]
        uh = tangential_fft(g, u)
        grads = [tangential_ifft(g, (1j * ks[a]) * uh) for a in range(d - 1)]
        grads.append(g.d_normal(u))
        conv = np.zeros_like(u)
        flux = np.empty((d, 2, d) + g.shape)
        for j in range(d):
            gv, gh = grads[j][0], grads[j][1]
            conv[0] += H[j] * gh - v[j] * gv
            conv[1] += H[j] * gv - v[j] * gh
            flux[j, 0] = H[j] * H - v[j] * v
            flux[j, 1] = H[j] * v - v[j] * H
        phys = 0.5 * (conv + g.d_normal(flux[d - 1]))
        if self.epsilon > 0.0:
            for f in range(2):
                padded = close_ghosts_array(g, u[f], self.closures[f])
                phys[f] += self.epsilon * normal_second_difference(g, padded)
        stacked = tangential_fft(g, np.concatenate([phys[None], flux[: d - 1]]))
        out = stacked[0]
        for a in range(d - 1):
            out += (0.5j * ks[a]) * stacked[a + 1]
        if self.epsilon > 0.0:
            out -= self.epsilon * self._k2 * uh
        self._proj.project_hat(out)
        return tangential_ifft(g, out)


def rk4_step(f: Callable, u: np.ndarray, dt: float, k1: np.ndarray | None = None) -> np.ndarray:
    if k1 is None:
        k1 = f(u)
    k2 = f(u + 0.5 * dt * k1)
    k3 = f(u + 0.5 * dt * k2)
    k4 = f(u + dt * k3)
    return u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def max_stable_dt(state: FieldState, epsilon: float) -> float:
    """0.5 min(min(dx, h) / max|v|+|H|, h^2 / (2 dim eps))."""
    g = state.grid
    speed = np.sqrt(np.sum(state.v.data**2, axis=0)) + np.sqrt(np.sum(state.H.data**2, axis=0))
    umax = float(np.max(speed))
    bounds = []
    if umax > 0:
        bounds.append(min(g.spacing, g.h) / umax)
    if epsilon > 0:
        bounds.append(g.h**2 / (2 * g.dim * epsilon))
    return 0.5 * min(bounds) if bounds else math.inf


def check_cfl(state: FieldState, dt: float, epsilon: float) -> None:
    dt_max = max_stable_dt(state, epsilon)
    if dt > dt_max:
        raise StepSizeError(f"dt = {dt:g} exceeds the stability bound {dt_max:.4g}", dt, dt_max)


def _check_variant(cfg: SimConfig, variant: str) -> None:
    if cfg.variant != variant:
        raise ConfigError(f"step_{variant} called with variant {cfg.variant!r}", "variant")


def _advance(state: FieldState, cfg: SimConfig, dyn: Dynamics | None, dt: float | None) -> FieldState:
    dyn = dyn or Dynamics.from_config(cfg, state.grid)
    dt = cfg.dt if dt is None else dt
    u = rk4_step(dyn, state.data, dt)
    if not np.all(np.isfinite(u)):
        raise BlowUpError(f"non-finite values after step to t = {state.t + dt:g}", t=state.t + dt)
    return FieldState.from_array(state.grid, state.t + dt, u)


def step_viscous(state: FieldState, cfg: SimConfig, dyn: Dynamics | None = None, dt: float | None = None) -> FieldState:
    """One RK4 step of the viscous system (eps > 0, Navier walls)."""
    _check_variant(cfg, "viscous")
    return _advance(state, cfg, dyn, dt)


def step_ideal(state: FieldState, cfg: SimConfig, dyn: Dynamics | None = None, dt: float | None = None) -> FieldState:
    """One RK4 step of the ideal system (eps = 0, impermeable walls)."""
    _check_variant(cfg, "ideal")
    return _advance(state, cfg, dyn, dt)


# -- diagnostics -------------------------------------------------------------


def _strain_sq(grid: ChannelGrid, u: np.ndarray) -> float:
    g = gradient_array(grid, u)
    s = 0.5 * (g + np.swapaxes(g, 0, 1))
    return float(np.sum(grid.integrate(s * s)))


def _wall_tangential_sq(grid: ChannelGrid, u: np.ndarray) -> float:
    tang = u[: grid.dim - 1]
    lo = np.sum(tang[..., 0] ** 2, axis=0)
    hi = np.sum(tang[..., -1] ** 2, axis=0)
    return float(grid.integrate_wall(lo) + grid.integrate_wall(hi))


def diagnostics(state: FieldState, rate_field: np.ndarray, zeta_v: float, zeta_h: float) -> dict[str, float]:
    """Per-sample scalars of a RunRecord; ``rate_field`` is the projected RHS at ``state``."""
    g = state.grid
    v, H = state.v.data, state.H.data
    ev = 0.5 * float(np.sum(g.integrate(v * v)))
    eh = 0.5 * float(np.sum(g.integrate(H * H)))
    rate = float(np.sum(g.integrate(v * rate_field[0] + H * rate_field[1])))
    dv, dh = state.div_residuals()
    return {
        "energy": ev + eh,
        "energy_v": ev,
        "energy_h": eh,
        "strain_v": _strain_sq(g, v),
        "strain_h": _strain_sq(g, H),
        "wall_v": _wall_tangential_sq(g, v),
        "wall_h": _wall_tangential_sq(g, H),
        "energy_rate": rate,
        "div_v": dv,
        "div_h": dh,
        "wall_vorticity_v": wall_vorticity_residual(state.v, zeta_v),
        "wall_vorticity_h": wall_vorticity_residual(state.H, zeta_h),
        "cross_helicity": float(np.sum(g.integrate(v * H))),
    }


# -- checkpoints -------------------------------------------------------------

CHECKPOINT_FORMAT = "mhdslip-checkpoint"
CHECKPOINT_VERSION = 1


def save_checkpoint(path: str | Path, state: FieldState, cfg: SimConfig | None = None) -> Path:
    """Write ``state`` as an uncompressed .npz archive.

    Members: ``meta`` (JSON text, see docs/formats.md), ``v`` and ``H``
    (float64 arrays of shape (dim, n_tangential[, n_tangential], n_normal),
    C order, component axis first, z last).
    """
    g = state.grid
    meta = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "dim": g.dim,
        "n_tangential": g.n_tangential,
        "n_normal": g.n_normal,
        "t": state.t,
        "layout": "component, x, [y,] z; row-major",
        "dtype": "float64",
    }
    if cfg is not None:
        meta.update(
            epsilon=cfg.epsilon,
            zeta=cfg.zeta,
            zeta_h=cfg.zeta_magnetic,
            variant=cfg.variant,
            ic_name=cfg.ic_name,
            ic_params=cfg.ic_params,
        )
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        np.savez(
            fh,
            meta=np.array(json.dumps(meta)),
            v=np.ascontiguousarray(state.v.data, dtype="<f8"),
            H=np.ascontiguousarray(state.H.data, dtype="<f8"),
        )
    return path


def load_checkpoint(path: str | Path) -> tuple[FieldState, dict]:
    try:
        with np.load(path, allow_pickle=False) as z:
            meta = json.loads(str(z["meta"]))
            v, H = z["v"], z["H"]
    except (OSError, ValueError, KeyError) as exc:
        raise RecordError(f"cannot read checkpoint {path}: {exc}") from exc
    if meta.get("format") != CHECKPOINT_FORMAT:
        raise RecordError(f"{path} is not a checkpoint")
    if meta.get("version") != CHECKPOINT_VERSION:
        raise RecordError(f"unsupported checkpoint version {meta.get('version')!r}")
    grid = make_grid(meta["dim"], meta["n_tangential"], meta["n_normal"])
    state = FieldState(float(meta["t"]), VectorField(grid, np.array(v)), VectorField(grid, np.array(H)))
    return state, meta


# -- driver ------------------------------------------------------------------


def n_steps(cfg: SimConfig) -> int:
    n = cfg.t_end / cfg.dt
    k = int(round(n))
    if abs(n - k) > 1e-9 * max(1.0, n):
        raise ConfigError(f"t_end = {cfg.t_end} is not a multiple of dt = {cfg.dt}", "dt")
    return k


def run(
    cfg: SimConfig,
    state: FieldState | None = None,
    on_sample: Callable[[FieldState], None] | None = None,
) -> RunRecord:
    """Integrate to ``cfg.t_end`` and return the diagnostics record.

    ``on_sample`` is called with the state at every diagnostic sample (the
    sweep uses it to pick up comparison snapshots).
    """
    cfg.validate()
    grid = state.grid if state is not None else build_grid(cfg)
    state = state or initial_state(cfg, grid)
    dyn = Dynamics.from_config(cfg, grid)
    steps = n_steps(cfg)
    if cfg.check_cfl:
        check_cfl(state, cfg.dt, cfg.epsilon)
    record = RunRecord(config=cfg.to_dict())
    zv, zh = cfg.zeta_v, cfg.zeta_magnetic
    if cfg.variant == "ideal":
        zv = zh = 0.0

    nm = None
    if cfg.nm_every > 0:
        from .norms import n_m_diagnostic

        nm = n_m_diagnostic

    pending = sorted(cfg.checkpoint_times)
    e0 = state.energy()
    u = state.data
    k1 = dyn(u)

    def sample(st, k, step):
        record.append(st.t, diagnostics(st, k, zv, zh))
        if nm is not None and step % cfg.nm_every == 0:
            record.append_nm(st.t, nm(st, cfg.nm_order))
        while pending and pending[0] <= st.t + 0.5 * cfg.dt:
            tc = pending.pop(0)
            if cfg.output_dir is None:
                continue
            p = Path(cfg.output_dir) / f"checkpoint_t{tc:.6f}.npz"
            save_checkpoint(p, st, cfg)
            record.checkpoints.append({"t": st.t, "path": str(p)})
        if on_sample is not None:
            on_sample(st)

    sample(state, k1, 0)
    t0 = state.t
    for n in range(1, steps + 1):
        try:
            u = rk4_step(dyn, u, cfg.dt, k1)
            t = t0 + n * cfg.dt
            if not np.all(np.isfinite(u)):
                raise BlowUpError(f"non-finite values at t = {t:g}", t=t, step=n)
            k1 = dyn(u)
            st = FieldState.from_array(grid, t, u)
            if n % cfg.diag_every == 0 or n == steps:
                e = st.energy()
                if e > 1e6 * max(e0, 1e-300):
                    raise BlowUpError(f"energy grew from {e0:.3e} to {e:.3e} by t = {t:g}", t=t, step=n)
                sample(st, k1, n)
        except MHDError as exc:
            exc.args = (f"step {n}: {exc.args[0]}",) + exc.args[1:]
            if hasattr(exc, "step") and exc.step is None:
                exc.step = n
            raise
    return record


def final_state(cfg: SimConfig, state: FieldState | None = None) -> tuple[FieldState, RunRecord]:
    """Run and also return the state at t_end."""
    box = {}

    def keep(st):
        box["s"] = st

    rec = run(cfg, state, on_sample=keep)
    return box["s"], rec
