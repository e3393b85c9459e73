"""Neumann Poisson problems on the channel and the split of the pressure.

The z-operator is the compact three-point Laplacian; a Neumann datum g on a
wall (outward derivative d_n phi = g) enters through the ghost node
phi_-1 = phi_1 + 2 h g, which turns the wall row into

    (2 phi_1 - 2 phi_0) / h^2 - k^2 phi_0 = r_0 - 2 g / h.

Weighted by the trapezoid rule this matrix is symmetric and annihilates
constants, so the discrete solvability condition is exactly
sum_j w_j r_j = g_lo + g_hi per tangential mode, i.e. int rhs = oint g.
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .boundary import WallClosure, close_ghosts_array
from .errors import IncompatibleDataError, NumericalError
from .field_ops import (
    ScalarField,
    divergence_array,
    VectorField,
    laplacian_tangential,
    normal_second_difference,
    skew_advect_pair,
)
from .geometry import ChannelGrid

log = logging.getLogger(__name__)

COMPAT_TOL = 1e-8
RESIDUAL_TOL = 1e-9


@dataclass
class PoissonProblem:
    rhs: ScalarField
    # outward normal derivative on z = 0 and z = 1, arrays of tangential shape
    neumann_lo: np.ndarray | None = None
    neumann_hi: np.ndarray | None = None
    gauge: bool = True
    name: str = field(default="poisson")

    def __post_init__(self):
        tshape = self.rhs.grid.shape[:-1]
        for attr in ("neumann_lo", "neumann_hi"):
            g = getattr(self, attr)
            g = np.zeros(tshape) if g is None else np.broadcast_to(np.asarray(g, float), tshape)
            setattr(self, attr, np.array(g))

    def compatibility_defect(self) -> tuple[float, float]:
        """(int rhs - oint g, scale used to judge it)."""
        grid = self.rhs.grid
        vol = float(grid.integrate(self.rhs.values))
        flux = float(grid.integrate_wall(self.neumann_lo) + grid.integrate_wall(self.neumann_hi))
        scale = float(grid.integrate(np.abs(self.rhs.values))) + float(
            grid.integrate_wall(np.abs(self.neumann_lo)) + grid.integrate_wall(np.abs(self.neumann_hi))
        )
        return vol - flux, scale


class _ModeSolver:
    """LU factors of the z-operator for every tangential wavenumber magnitude."""

    def __init__(self, grid: ChannelGrid):
        n, h = grid.n_normal, grid.h
        nt = grid.n_tangential
        base = np.zeros((n, n))
        idx = np.arange(1, n - 1)
        base[idx, idx - 1] = base[idx, idx + 1] = 1.0 / h**2
        base[idx, idx] = -2.0 / h**2
        base[0, 0], base[0, 1] = -2.0 / h**2, 2.0 / h**2
        base[-1, -1], base[-1, -2] = -2.0 / h**2, 2.0 / h**2
        kfull = np.fft.fftfreq(nt, d=1.0 / nt)
        kfull[nt // 2] = 0.0
        if grid.dim == 2:
            k2 = grid.wavenumbers**2
        else:
            kx, ky = np.meshgrid(kfull, grid.wavenumbers, indexing="ij")
            k2 = (kx**2 + ky**2).ravel()
        self.k2 = k2
        self.factors = {}
        for val in np.unique(k2):
            if val == 0.0:
                continue
            self.factors[val] = lu_factor(base - val * np.eye(n))
        # mean mode: border with the quadrature weights to pin the gauge
        wz = grid.z_weights
        bordered = np.zeros((n + 1, n + 1))
        bordered[:n, :n] = base
        bordered[:n, n] = 1.0
        bordered[n, :n] = wz
        self.zero = lu_factor(bordered)
        self.n = n

    def solve(self, rhs_hat: np.ndarray) -> np.ndarray:
        """rhs_hat: (modes, n) complex; returns solution of the same shape."""
        out = np.empty_like(rhs_hat)
        n = self.n
        for m, val in enumerate(self.k2):
            r = rhs_hat[m]
            rr = np.stack([r.real, r.imag], axis=-1)
            if val == 0.0:
                rr = np.vstack([rr, np.zeros((1, 2))])
                s = lu_solve(self.zero, rr)[:n]
            else:
                s = lu_solve(self.factors[val], rr)
            out[m] = s[:, 0] + 1j * s[:, 1]
        return out


_SOLVERS: dict[tuple[int, int, int], _ModeSolver] = {}
_SOLVER_LOCK = threading.Lock()


def _mode_solver(grid: ChannelGrid) -> _ModeSolver:
    with _SOLVER_LOCK:
        s = _SOLVERS.get(grid.key)
        if s is None:
            s = _SOLVERS[grid.key] = _ModeSolver(grid)
    return s


def neumann_laplacian(grid: ChannelGrid, phi: np.ndarray, g_lo, g_hi) -> np.ndarray:
    """Discrete Laplacian with the Neumann ghost rows, data moved to the left side."""
    h = grid.h
    padded = np.empty(phi.shape[:-1] + (phi.shape[-1] + 2,))
    padded[..., 1:-1] = phi
    padded[..., 0] = phi[..., 1] + 2.0 * h * g_lo
    padded[..., -1] = phi[..., -2] + 2.0 * h * g_hi
    return laplacian_tangential(grid, phi) + normal_second_difference(grid, padded)


def solve_poisson_neumann(p: PoissonProblem) -> ScalarField:
    """Mean-zero solution of lap phi = rhs, d_n phi = g on the walls."""
    grid = p.rhs.grid
    h = grid.h
    defect, scale = p.compatibility_defect()
    rhs = p.rhs.values
    if scale > 0 and abs(defect) > COMPAT_TOL * scale:
        raise IncompatibleDataError(
            f"{p.name}: compatibility defect {defect:.3e} (scale {scale:.3e})",
            defect=defect,
            subproblem=p.name,
        )
    if defect != 0.0:
        log.info("%s: subtracting compatibility defect %.3e", p.name, defect)
        rhs = rhs - defect / grid.volume

    r = np.array(rhs, dtype=float)
    r[..., 0] -= 2.0 * p.neumann_lo / h
    r[..., -1] -= 2.0 * p.neumann_hi / h
    tang_axes = tuple(range(grid.dim - 1))
    rh = np.fft.rfftn(r, axes=tang_axes)
    mode_shape = rh.shape[:-1]
    sol = _mode_solver(grid).solve(rh.reshape(-1, grid.n_normal))
    sol = sol.reshape(mode_shape + (grid.n_normal,))
    phi = np.fft.irfftn(sol, s=(grid.n_tangential,) * (grid.dim - 1), axes=tang_axes)
    if p.gauge:
        phi -= grid.integrate(phi) / grid.volume

    resid = neumann_laplacian(grid, phi, p.neumann_lo, p.neumann_hi) - rhs
    rnorm = float(np.sqrt(grid.integrate(resid**2)))
    # the wall data acts as a source of size 2 g / h in the wall rows
    ref = float(np.sqrt(grid.integrate(r**2)))
    if not np.isfinite(rnorm) or rnorm > max(RESIDUAL_TOL * ref, 1e-12):
        raise NumericalError(f"{p.name}: Poisson residual {rnorm:.3e}", residual=rnorm)
    return ScalarField(grid, phi)


def wall_normal_trace(grid: ChannelGrid, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Outward normal component on each wall given the z-component array."""
    return -w[..., 0], w[..., -1]


def nonlinear_term(grid: ChannelGrid, v: np.ndarray, H: np.ndarray) -> np.ndarray:
    """A(v)v - A(H)H in the skew-symmetric form used by the solver."""
    vv, hh, _, _ = skew_advect_pair(grid, v, H)
    return vv - hh


def viscous_term(grid: ChannelGrid, v: np.ndarray, closure: WallClosure) -> np.ndarray:
    """Delta_h v with the wall ghosts from ``closure``."""
    padded = close_ghosts_array(grid, v, closure)
    return laplacian_tangential(grid, v) + normal_second_difference(grid, padded)


def pressure_decompose(
    v: VectorField, H: VectorField, epsilon: float, zeta: float = 0.0
) -> tuple[ScalarField, ScalarField]:
    """Euler pressure P1 and harmonic viscous pressure P2.

    lap P1 = -div N,  d_n P1 = -N.n    with N the discrete nonlinear term
    lap P2 = 0,       d_n P2 = eps (Delta_h v).n

    Both are mean-zero. Their sum matches the pressure removed by the Leray
    projection of -N + eps Delta_h v up to discretization error.
    """
    grid = v.grid
    d = grid.dim
    nl = nonlinear_term(grid, v.data, H.data)
    # (v.grad v - H.grad H).n vanishes on a flat wall when v.n = H.n = 0; the
    # discrete wall value is an O(h) artefact of the one-sided rows, so the
    # trace is taken as exact zero (the projection never sees it either)
    nl[d - 1][..., 0] = 0.0
    nl[d - 1][..., -1] = 0.0
    p1 = solve_poisson_neumann(
        PoissonProblem(ScalarField(grid, -divergence_array(grid, nl)), name="P1")
    )
    if epsilon == 0.0:
        p2 = ScalarField(grid, np.zeros(grid.shape))
    else:
        lap = viscous_term(grid, v.data, WallClosure(zeta))
        lo, hi = wall_normal_trace(grid, lap[d - 1])
        p2 = solve_poisson_neumann(
            PoissonProblem(
                ScalarField(grid, np.zeros(grid.shape)), epsilon * lo, epsilon * hi, name="P2"
            )
        )
    return p1, p2


def interior_gradient(grid: ChannelGrid, p: np.ndarray) -> np.ndarray:
    """Gradient with spectral tangential and centred normal differences.

    The normal component is only meaningful away from the walls; wall rows
    are set to zero.
    """
    d = grid.dim
    out = np.zeros((d,) + p.shape)
    for a in range(d - 1):
        out[a] = grid.d_tangential(p, a)
    out[d - 1, ..., 1:-1] = (p[..., 2:] - p[..., :-2]) / (2.0 * grid.h)
    return out
