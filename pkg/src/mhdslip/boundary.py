"""Wall closures and wall diagnostics for the flat channel.

Ghost rules, per wall (outward normal n = -e_z on z = 0, +e_z on z = 1):

    tangential, navier:  d_n f_t = -2 zeta f_t    (centred difference through the ghost)
    tangential, slip:    even reflection, f(-h) = f(h)
    normal component:    f_n = 0 on the wall node, ghost by cubic
                         extrapolation through (0, f_1, f_2, f_3)

With zeta = 0 the navier rule is the even reflection, so both variants agree.
On a flat wall with f_n = 0 the tangential derivative of f_n vanishes, and
the Robin rule is the same statement as (S f n)_t = -zeta f_t.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .field_ops import ScalarField, VectorField
from .geometry import NORMAL_SIGN, ChannelGrid

VARIANTS = ("navier", "slip")


@dataclass(frozen=True)
class WallClosure:
    zeta: float = 0.0
    variant: str = "navier"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown wall variant {self.variant!r}", "variant")
        if not abs(self.zeta) <= 1.0:
            raise ConfigError(f"|zeta| must be <= 1, got {self.zeta}", "zeta")

    @property
    def robin(self) -> float:
        """Coefficient a in d_n f_t = -a f_t."""
        return 2.0 * self.zeta if self.variant == "navier" else 0.0


def pad_tangential(grid: ChannelGrid, f: np.ndarray, robin: float) -> np.ndarray:
    """One ghost node per wall for tangential components (z is the last axis)."""
    h = grid.h
    out = np.empty(f.shape[:-1] + (f.shape[-1] + 2,))
    out[..., 1:-1] = f
    # lower wall: d_n = -d_z, so (f_1 - f_-1)/2h = robin * f_0
    out[..., 0] = f[..., 1] - 2.0 * h * robin * f[..., 0]
    out[..., -1] = f[..., -2] - 2.0 * h * robin * f[..., -1]
    return out


def pad_normal(grid: ChannelGrid, f: np.ndarray) -> np.ndarray:
    """Ghosts for the wall-normal component; wall values forced to zero.

    Cubic extrapolation makes the three-point Laplacian on the wall node a
    second-order value of d_zz f_n there (it feeds the viscous pressure).
    """
    out = np.empty(f.shape[:-1] + (f.shape[-1] + 2,))
    out[..., 1:-1] = f
    out[..., 1] = 0.0
    out[..., -2] = 0.0
    out[..., 0] = -6.0 * f[..., 1] + 4.0 * f[..., 2] - f[..., 3]
    out[..., -1] = -6.0 * f[..., -2] + 4.0 * f[..., -3] - f[..., -4]
    return out


def close_ghosts_array(grid: ChannelGrid, u: np.ndarray, closure: WallClosure) -> np.ndarray:
    """Array version of close_ghosts; leading batch axes are allowed."""
    d = grid.dim
    ax = u.ndim - d - 1
    tang = np.take(u, np.arange(d - 1), axis=ax)
    normal = np.take(u, [d - 1], axis=ax)
    return np.concatenate(
        [pad_tangential(grid, tang, closure.robin), pad_normal(grid, normal)], axis=ax
    )


def close_ghosts(f: VectorField, closure: WallClosure) -> np.ndarray:
    """Components of ``f`` padded with one ghost node on each wall.

    The result has shape ``(dim, ..., n_normal + 2)``; index 1 and -2 along z
    are the wall nodes.
    """
    return close_ghosts_array(f.grid, f.data, closure)


def close_ghosts_scalar(f: ScalarField, closure: WallClosure | None = None) -> np.ndarray:
    """Even reflection (homogeneous Neumann) for scalars."""
    return pad_tangential(f.grid, f.data, 0.0)


# -- wall traces ---------------------------------------------------------------


def _wall_dz(grid: ChannelGrid, f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Second-order one-sided d/dz at z = 0 and z = 1."""
    h = grid.h
    lo = (-3.0 * f[..., 0] + 4.0 * f[..., 1] - f[..., 2]) / (2.0 * h)
    hi = (3.0 * f[..., -1] - 4.0 * f[..., -2] + f[..., -3]) / (2.0 * h)
    return lo, hi


def robin_residual(f: VectorField, closure: WallClosure) -> float:
    """sup over walls of |d_n f_t + a f_t| with a = closure.robin."""
    grid = f.grid
    tang = f.data[: grid.dim - 1]
    lo, hi = _wall_dz(grid, tang)
    a = closure.robin
    r_lo = NORMAL_SIGN[0] * lo + a * tang[..., 0]
    r_hi = NORMAL_SIGN[1] * hi + a * tang[..., -1]
    return float(max(np.max(np.abs(r_lo)), np.max(np.abs(r_hi))))


def strain_residual(f: VectorField, zeta: float) -> float:
    """sup over walls of |2 ((S f n)_t + zeta f_t)|; equals robin_residual when f_n = 0."""
    grid = f.grid
    d = grid.dim
    out = 0.0
    lo, hi = _wall_dz(grid, f.data[: d - 1])
    for wall, (dz, idx) in enumerate(((lo, 0), (hi, -1))):
        sign = NORMAL_SIGN[wall]
        fn = f.data[d - 1][..., idx]
        for i in range(d - 1):
            # d_i f_n along the wall, spectral
            dfn = grid.d_tangential(fn[..., None], i)[..., 0] if d > 1 else 0.0
            r = sign * (dz[i] + dfn) + 2.0 * zeta * f.data[i][..., idx]
            out = max(out, float(np.max(np.abs(r))))
    return out


def eta_quantity(f: VectorField, zeta: float) -> VectorField:
    """eta = Pi((grad f + grad f^T) n) + 2 zeta Pi f.

    n is the outward normal of the nearer wall (lower wall for z <= 1/2).
    The z-derivative uses second-order one-sided rows at the walls, so on a
    field satisfying the Navier condition the wall trace of eta is O(h^2).
    """
    grid = f.grid
    d = grid.dim
    z = grid.z_nodes
    nz = np.where(z <= 0.5, NORMAL_SIGN[0], NORMAL_SIGN[1])
    out = np.zeros_like(f.data)
    fn = f.data[d - 1]
    for i in range(d - 1):
        dzi = grid.d_normal_2(f.data[i])
        dfn = grid.d_tangential(fn, i)
        out[i] = nz * (dzi + dfn) + 2.0 * zeta * f.data[i]
    return VectorField(grid, out)


def eta_wall_trace(f: VectorField, zeta: float) -> float:
    """sup over both walls of |eta|."""
    eta = eta_quantity(f, zeta).data
    return float(max(np.max(np.abs(eta[..., 0])), np.max(np.abs(eta[..., -1]))))


def wall_vorticity_residual(f: VectorField, zeta: float) -> float:
    """sup over walls of |Pi(omega x n) + 2 zeta Pi f| (flat wall, grad n = 0).

    Wall vorticity is built from spectral tangential derivatives of the
    normal component and one-sided second-order z-derivatives.
    """
    grid = f.grid
    d = grid.dim
    dz_lo, dz_hi = _wall_dz(grid, f.data)
    out = 0.0
    for wall, (dz, idx) in enumerate(((dz_lo, 0), (dz_hi, -1))):
        n3 = NORMAL_SIGN[wall]
        trace = f.data[..., idx]
        # grad of each component on the wall: [i][j] = d_j f_i
        grad = [[None] * d for _ in range(d)]
        for i in range(d):
            for j in range(d - 1):
                grad[i][j] = grid.d_tangential(trace[i][..., None], j)[..., 0]
            grad[i][d - 1] = dz[i]
        if d == 2:
            # planar curl c = d_x f_z - d_z f_x; omega x n has x-component -c n3
            c = grad[1][0] - grad[0][1]
            tang = [-c * n3]
        else:
            omega = [
                grad[2][1] - grad[1][2],
                grad[0][2] - grad[2][0],
                grad[1][0] - grad[0][1],
            ]
            # omega x (0, 0, n3) = (omega_y n3, -omega_x n3, 0)
            tang = [omega[1] * n3, -omega[0] * n3]
        for i in range(d - 1):
            r = tang[i] + 2.0 * zeta * trace[i]
            out = max(out, float(np.max(np.abs(r))))
    return out


__all__ = [
    "WallClosure",
    "close_ghosts",
    "close_ghosts_array",
    "close_ghosts_scalar",
    "eta_quantity",
    "eta_wall_trace",
    "robin_residual",
    "strain_residual",
    "wall_vorticity_residual",
]
