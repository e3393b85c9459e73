"""Flat channel T^{d-1} x (0, 1): nodes, quadrature, conormal fields.

Tangential directions are periodic with length 2*pi and are differentiated
spectrally. The wall-normal direction uses uniform nodes including both
walls. Its first-derivative operator is the diagonal-norm summation-by-parts
(SBP) pair of centred differences with one-sided wall rows; the trapezoid
rule is its norm, so ``<f, Dg> = -<Df, g> + [fg]`` holds exactly on the grid.
That identity is what makes the discrete Leray projection an orthogonal
projector and the skew-symmetric advection exactly energy-neutral.

Outward normals: (0, ..., 0, -1) on z = 0 and (0, ..., 0, +1) on z = 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ConfigError

TANGENTIAL_LENGTH = 2.0 * np.pi
# outward normal z-component on the lower and upper wall
NORMAL_SIGN = (-1.0, 1.0)


def conormal_weight(z):
    """phi(z) = z (1 - z): zero on both walls, positive inside, phi'(0) = 1."""
    return z * (1.0 - z)


def trapezoid_weights(n: int) -> np.ndarray:
    h = 1.0 / (n - 1)
    w = np.full(n, h)
    w[0] = w[-1] = 0.5 * h
    return w


@dataclass(frozen=True, eq=False)
class ChannelGrid:
    dim: int
    n_tangential: int
    n_normal: int
    z_nodes: np.ndarray
    quad_weights: np.ndarray
    phi_weight: np.ndarray

    # -- geometry --------------------------------------------------------

    @property
    def key(self) -> tuple[int, int, int]:
        return (self.dim, self.n_tangential, self.n_normal)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n_tangential,) * (self.dim - 1) + (self.n_normal,)

    @property
    def h(self) -> float:
        return 1.0 / (self.n_normal - 1)

    @property
    def spacing(self) -> float:
        """Tangential node spacing."""
        return TANGENTIAL_LENGTH / self.n_tangential

    @property
    def volume(self) -> float:
        return TANGENTIAL_LENGTH ** (self.dim - 1)

    @property
    def wall_area(self) -> float:
        return TANGENTIAL_LENGTH ** (self.dim - 1)

    @cached_property
    def x_nodes(self) -> np.ndarray:
        return np.arange(self.n_tangential) * self.spacing

    @cached_property
    def z_weights(self) -> np.ndarray:
        return trapezoid_weights(self.n_normal)

    @cached_property
    def wall_weights(self) -> np.ndarray:
        """Surface weights for one wall (tangential node area)."""
        return np.full((self.n_tangential,) * (self.dim - 1), self.spacing ** (self.dim - 1))

    def mesh(self) -> tuple[np.ndarray, ...]:
        """Coordinate arrays (x, [y,] z) of full grid shape."""
        axes = [self.x_nodes] * (self.dim - 1) + [self.z_nodes]
        return tuple(np.meshgrid(*axes, indexing="ij"))

    def same_as(self, other: ChannelGrid) -> bool:
        return self.key == other.key

    # -- differentiation ---------------------------------------------------

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Integer wavenumbers of an rfft along one tangential axis, Nyquist zeroed."""
        k = np.fft.rfftfreq(self.n_tangential, d=1.0 / self.n_tangential)
        k[-1] = 0.0
        return k

    def d_tangential(self, f: np.ndarray, axis: int) -> np.ndarray:
        """Spectral derivative along tangential axis ``axis`` (0 = x, 1 = y).

        The last ``dim`` axes of ``f`` are spatial; leading axes are batch axes.
        """
        if not 0 <= axis < self.dim - 1:
            raise ValueError(f"tangential axis {axis} out of range for dim={self.dim}")
        ax = f.ndim - self.dim + axis
        fh = np.fft.rfft(f, axis=ax)
        shape = [1] * f.ndim
        shape[ax] = -1
        fh *= (1j * self.wavenumbers).reshape(shape)
        return np.fft.irfft(fh, n=self.n_tangential, axis=ax)

    def d_normal(self, f: np.ndarray) -> np.ndarray:
        """SBP first derivative in z: centred inside, one-sided first order on the walls."""
        h = self.h
        out = np.empty_like(f)
        out[..., 1:-1] = (f[..., 2:] - f[..., :-2]) / (2 * h)
        out[..., 0] = (f[..., 1] - f[..., 0]) / h
        out[..., -1] = (f[..., -1] - f[..., -2]) / h
        return out

    def d_normal_2(self, f: np.ndarray) -> np.ndarray:
        """Centred z-derivative with second-order one-sided wall rows (diagnostics only)."""
        h = self.h
        out = np.empty_like(f)
        out[..., 1:-1] = (f[..., 2:] - f[..., :-2]) / (2 * h)
        out[..., 0] = (-3 * f[..., 0] + 4 * f[..., 1] - f[..., 2]) / (2 * h)
        out[..., -1] = (3 * f[..., -1] - 4 * f[..., -2] + f[..., -3]) / (2 * h)
        return out

    def derivative(self, f: np.ndarray, axis: int) -> np.ndarray:
        """Partial derivative along spatial axis ``axis``; axis dim-1 is z."""
        if axis == self.dim - 1:
            return self.d_normal(f)
        return self.d_tangential(f, axis)

    def conormal_derivative(self, f: np.ndarray, k: int) -> np.ndarray:
        """Z_k f for k = 0..dim-1: tangential derivatives, then phi(z) d/dz."""
        if k == self.dim - 1:
            return self.phi_weight * self.d_normal(f)
        return self.d_tangential(f, k)

    # -- quadrature ----------------------------------------------------------

    def integrate(self, f: np.ndarray) -> float | np.ndarray:
        """Quadrature over the spatial axes (the last ``dim`` axes)."""
        axes = tuple(range(f.ndim - self.dim, f.ndim))
        return np.sum(f * self.quad_weights, axis=axes)

    def integrate_wall(self, f_wall: np.ndarray) -> float | np.ndarray:
        """Surface quadrature of wall-trace data (tangential axes only)."""
        axes = tuple(range(f_wall.ndim - (self.dim - 1), f_wall.ndim))
        return np.sum(f_wall * self.wall_weights, axis=axes)


def make_grid(dim: int, n_tangential: int, n_normal: int) -> ChannelGrid:
    if dim not in (2, 3):
        raise ConfigError(f"dim must be 2 or 3, got {dim}", "dim")
    if n_tangential < 4 or n_tangential % 2:
        raise ConfigError(f"n_tangential must be even and >= 4, got {n_tangential}", "n_tangential")
    if n_normal < 5:
        raise ConfigError(f"n_normal must be >= 5, got {n_normal}", "n_normal")
    z = np.linspace(0.0, 1.0, n_normal)
    wz = trapezoid_weights(n_normal)
    dx = TANGENTIAL_LENGTH / n_tangential
    tangential = np.full((n_tangential,) * (dim - 1), dx ** (dim - 1))
    weights = tangential[..., None] * wz
    phi = conormal_weight(z)
    phi[0] = phi[-1] = 0.0
    for arr in (z, weights, phi):
        arr.setflags(write=False)
    return ChannelGrid(dim, n_tangential, n_normal, z, weights, phi)


def build_grid(config) -> ChannelGrid:
    """Grid for a SimConfig (or anything with dim / n_tangential / n_normal)."""
    return make_grid(config.dim, config.n_tangential, config.n_normal)
