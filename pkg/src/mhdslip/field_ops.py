"""Fields on a ChannelGrid, differential operators, L2 products, Leray projection.

Array layout: a scalar field is an array of ``grid.shape`` (z last); a vector
field stacks ``dim`` components in front, the last one wall-normal. The
normal component of a velocity-like field lives on interior nodes only; its
wall values are held at zero.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, UsageError
from .geometry import ChannelGrid


def _check_finite(name: str, arr: np.ndarray) -> None:
    if not np.all(np.isfinite(arr)):
        raise NumericalError(f"{name} contains non-finite values")


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: ChannelGrid
    values: np.ndarray

    rank = 0

    def __post_init__(self):
        if self.values.shape != self.grid.shape:
            raise UsageError(f"scalar shape {self.values.shape} != grid shape {self.grid.shape}")
        _check_finite("scalar field", self.values)

    @property
    def data(self) -> np.ndarray:
        return self.values

    def _new(self, data):
        return ScalarField(self.grid, data)

    def __add__(self, other):
        return self._new(self.data + _data(other, self))

    def __sub__(self, other):
        return self._new(self.data - _data(other, self))

    def __mul__(self, c):
        return self._new(self.data * c)

    __rmul__ = __mul__

    def __neg__(self):
        return self._new(-self.data)


@dataclass(frozen=True, eq=False)
class VectorField:
    grid: ChannelGrid
    components: np.ndarray

    rank = 1

    def __post_init__(self):
        expected = (self.grid.dim,) + self.grid.shape
        if self.components.shape != expected:
            raise UsageError(f"vector shape {self.components.shape} != {expected}")
        _check_finite("vector field", self.components)

    @property
    def data(self) -> np.ndarray:
        return self.components

    def _new(self, data):
        return VectorField(self.grid, data)

    def __add__(self, other):
        return self._new(self.data + _data(other, self))

    def __sub__(self, other):
        return self._new(self.data - _data(other, self))

    def __mul__(self, c):
        return self._new(self.data * c)

    __rmul__ = __mul__

    def __neg__(self):
        return self._new(-self.data)

    def __getitem__(self, i) -> np.ndarray:
        return self.components[i]


@dataclass(frozen=True, eq=False)
class TensorField:
    """Rank-2 field; ``components[i, j]`` is d_j f_i for a gradient."""

    grid: ChannelGrid
    components: np.ndarray

    rank = 2

    def __post_init__(self):
        d = self.grid.dim
        expected = (d, d) + self.grid.shape
        if self.components.shape != expected:
            raise UsageError(f"tensor shape {self.components.shape} != {expected}")
        _check_finite("tensor field", self.components)

    @property
    def data(self) -> np.ndarray:
        return self.components

    def transpose(self) -> TensorField:
        return TensorField(self.grid, np.swapaxes(self.components, 0, 1))


def _data(other, like):
    if hasattr(other, "data"):
        if other.rank != like.rank:
            raise UsageError("rank mismatch in field arithmetic")
        if not other.grid.same_as(like.grid):
            raise UsageError("grid mismatch in field arithmetic")
        return other.data
    return other


def wrap(grid: ChannelGrid, arr: np.ndarray):
    """Field object of the rank implied by ``arr``'s shape."""
    extra = arr.ndim - grid.dim
    return (ScalarField, VectorField, TensorField)[extra](grid, arr)


# -- array-level kernels -----------------------------------------------------


def gradient_array(grid: ChannelGrid, f: np.ndarray) -> np.ndarray:
    """Stack of spatial derivatives, new axis inserted before the spatial axes."""
    parts = [grid.derivative(f, a) for a in range(grid.dim)]
    return np.stack(parts, axis=f.ndim - grid.dim)


def divergence_array(grid: ChannelGrid, u: np.ndarray) -> np.ndarray:
    """Divergence over the component axis immediately before the spatial axes."""
    ax = u.ndim - grid.dim - 1
    out = None
    for a in range(grid.dim):
        term = grid.derivative(np.take(u, a, axis=ax), a)
        out = term if out is None else out + term
    return out


def curl_array(grid: ChannelGrid, u: np.ndarray) -> np.ndarray:
    d = grid.derivative
    if grid.dim == 2:
        # out-of-plane component for the (x, z) plane
        return d(u[1], 0) - d(u[0], 1)
    return np.stack(
        [
            d(u[2], 1) - d(u[1], 2),
            d(u[0], 2) - d(u[2], 0),
            d(u[1], 0) - d(u[0], 1),
        ]
    )


def advect_array(grid: ChannelGrid, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Convective form (a . grad) b."""
    return _convective(grid, a, gradient_array(grid, b))


def _convective(grid, a, grad_b):
    # grad_b[..., d, spatial] ; a[d, spatial]
    ax = grad_b.ndim - grid.dim - 1
    out = 0.0
    for d in range(grid.dim):
        out = out + a[d] * np.take(grad_b, d, axis=ax)
    return out


def skew_advect_pair(grid: ChannelGrid, v: np.ndarray, H: np.ndarray):
    """Skew-symmetric advection terms for the MHD right-hand side.

    Returns ``(A(v)v, A(H)H, A(v)H, A(H)v)`` with
    ``A(a)b = (a.grad b + div(a (x) b)) / 2``. For fields with zero normal
    trace, ``<c, A(a) b> = -<b, A(a) c>`` holds to rounding error.
    """
    dim = grid.dim
    fields = np.stack([v, H])  # (2, dim, *shape)
    grads = [grid.derivative(fields, d) for d in range(dim)]
    # products a_d * b_c for (a, b) in (v,v), (H,H), (v,H), (H,v)
    pairs = ((0, 0), (1, 1), (0, 1), (1, 0))
    out = []
    flux_src = []
    for d in range(dim):
        flux_src.append(np.stack([fields[ia, d][None] * fields[ib] for ia, ib in pairs]))
    fluxes = [grid.derivative(flux_src[d], d) for d in range(dim)]
    for p, (ia, ib) in enumerate(pairs):
        conv = 0.0
        div = 0.0
        for d in range(dim):
            conv = conv + fields[ia, d][None] * grads[d][ib]
            div = div + fluxes[d][p]
        out.append(0.5 * (conv + div))
    return tuple(out)


def skew_advect_array(grid: ChannelGrid, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """A(a) b for a vector or scalar field b."""
    vector = b.ndim == grid.dim + 1
    bb = b if vector else b[None]
    conv = 0.0
    div = 0.0
    for d in range(grid.dim):
        conv = conv + a[d][None] * grid.derivative(bb, d)
        div = div + grid.derivative(a[d][None] * bb, d)
    out = 0.5 * (conv + div)
    return out if vector else out[0]


def laplacian_tangential(grid: ChannelGrid, f: np.ndarray) -> np.ndarray:
    """Spectral tangential Laplacian over the leading tangential axes."""
    out = 0.0
    k2 = grid.wavenumbers**2
    for a in range(grid.dim - 1):
        ax = f.ndim - grid.dim + a
        fh = np.fft.rfft(f, axis=ax)
        shape = [1] * f.ndim
        shape[ax] = -1
        fh *= -k2.reshape(shape)
        out = out + np.fft.irfft(fh, n=grid.n_tangential, axis=ax)
    return out


def normal_second_difference(grid: ChannelGrid, padded: np.ndarray) -> np.ndarray:
    """Compact d^2/dz^2 on nodes from an array carrying one ghost node per wall."""
    h2 = grid.h**2
    return (padded[..., 2:] - 2.0 * padded[..., 1:-1] + padded[..., :-2]) / h2


# -- tangential Fourier space -------------------------------------------------


def _tang_axes(grid: ChannelGrid, ndim: int) -> tuple[int, ...]:
    return tuple(range(ndim - grid.dim, ndim - 1))


def tangential_fft(grid: ChannelGrid, f: np.ndarray) -> np.ndarray:
    """rfftn over the tangential axes; the last tangential axis is halved."""
    return np.fft.rfftn(f, axes=_tang_axes(grid, f.ndim))


def tangential_ifft(grid: ChannelGrid, fh: np.ndarray) -> np.ndarray:
    axes = _tang_axes(grid, fh.ndim)
    return np.fft.irfftn(fh, s=(grid.n_tangential,) * len(axes), axes=axes)


def tangential_wavenumbers(grid: ChannelGrid) -> list[np.ndarray]:
    """Per tangential axis, wavenumbers shaped to broadcast against
    coefficient arrays (..., *mode_shape, n_normal). Nyquist modes are zero."""
    nt = grid.n_tangential
    kfull = np.fft.fftfreq(nt, d=1.0 / nt)
    kfull[nt // 2] = 0.0
    axes = [kfull] * (grid.dim - 2) + [grid.wavenumbers]
    out = []
    for a, k in enumerate(axes):
        shape = [1] * (grid.dim - 1) + [1]
        shape[a] = -1
        out.append(k.reshape(shape))
    return out


# -- Leray projection -------------------------------------------------------


class _Projector:
    """Per-Fourier-mode orthogonal projection onto the kernel of the discrete divergence.

    With W the quadrature weights and D the divergence of one mode, the
    projection is u - W^{-1} D^H M^{-1} D u where M = D W^{-1} D^H. M is real
    symmetric (pentadiagonal, split into even and odd chains) so its inverse
    is precomputed once per grid. For the mean mode M is singular and the
    pseudo-inverse gives the orthogonal projector w -> 0.
    """

    def __init__(self, grid: ChannelGrid):
        self.grid = grid
        dim, n = grid.dim, grid.n_normal
        h = grid.h
        nt = grid.n_tangential
        kfull = np.fft.fftfreq(nt, d=1.0 / nt)
        kfull[nt // 2] = 0.0
        klast = grid.wavenumbers
        if dim == 2:
            kgrid = [klast]
        else:
            kx, ky = np.meshgrid(kfull, klast, indexing="ij")
            kgrid = [kx.ravel(), ky.ravel()]
        self.mode_shape = (nt,) * (dim - 2) + (nt // 2 + 1,)
        self.kgrid = [k.astype(float) for k in kgrid]
        n_modes = len(self.kgrid[0])

        dz = np.zeros((n, n))
        idx = np.arange(1, n - 1)
        dz[idx, idx + 1] = 0.5 / h
        dz[idx, idx - 1] = -0.5 / h
        dz[0, 0], dz[0, 1] = -1.0 / h, 1.0 / h
        dz[-1, -1], dz[-1, -2] = 1.0 / h, -1.0 / h
        dz_int = dz[:, 1:-1]
        base = dz_int @ dz_int.T / h
        self.inv_wz = 1.0 / grid.z_weights
        k2 = sum(k**2 for k in self.kgrid)
        minv = np.empty((n_modes, n, n))
        for m in range(n_modes):
            mat = base + np.diag(k2[m] * self.inv_wz)
            if k2[m] == 0.0:
                minv[m] = np.linalg.pinv(mat, rcond=1e-13, hermitian=True)
            else:
                minv[m] = np.linalg.inv(mat)
        self.minv = minv
        # transpose of the interior columns of dz, as two shifted diagonals
        c_lo = np.full(n - 2, 0.5 / h)
        c_lo[0] = 1.0 / h
        c_hi = np.full(n - 2, -0.5 / h)
        c_hi[-1] = -1.0 / h
        self.c_lo, self.c_hi = c_lo, c_hi

    def project_hat(self, uh: np.ndarray) -> np.ndarray:
        """Project tangential-Fourier coefficients in place.

        ``uh`` has shape (batch, dim, *mode_shape, n_normal).
        """
        grid = self.grid
        dim, n = grid.dim, grid.n_normal
        h = grid.h
        batch = uh.shape[0]
        n_modes = self.minv.shape[0]
        flat = uh.reshape(batch, dim, n_modes, n)
        flat[:, dim - 1, :, 0] = 0.0
        flat[:, dim - 1, :, -1] = 0.0
        iks = [(1j * k)[:, None] for k in self.kgrid]
        div = grid.d_normal(flat[:, dim - 1])
        for a in range(dim - 1):
            div += iks[a] * flat[:, a]
        rhs = div.transpose(1, 2, 0)  # (modes, n, batch)
        rhs = np.concatenate([rhs.real, rhs.imag], axis=-1)
        sol = np.matmul(self.minv, rhs)
        phi = (sol[..., :batch] + 1j * sol[..., batch:]).transpose(2, 0, 1)
        for a in range(dim - 1):
            flat[:, a] += iks[a] * phi * self.inv_wz
        flat[:, dim - 1, :, 1:-1] -= (self.c_lo * phi[..., :-2] + self.c_hi * phi[..., 2:]) / h
        return uh

    def __call__(self, u: np.ndarray) -> np.ndarray:
        grid = self.grid
        dim = grid.dim
        lead = u.shape[: u.ndim - dim - 1]
        batch = int(np.prod(lead)) if lead else 1
        uh = tangential_fft(grid, u.reshape((batch, dim) + grid.shape))
        self.project_hat(uh)
        return tangential_ifft(grid, uh).reshape(u.shape)


_PROJECTORS: dict[tuple[int, int, int], _Projector] = {}
_PROJECTOR_LOCK = threading.Lock()


def projector(grid: ChannelGrid) -> _Projector:
    with _PROJECTOR_LOCK:
        proj = _PROJECTORS.get(grid.key)
        if proj is None:
            proj = _PROJECTORS[grid.key] = _Projector(grid)
    return proj


def project_array(grid: ChannelGrid, u: np.ndarray, passes: int = 1) -> np.ndarray:
    """Leray projection of one vector array or a stack of them.

    A second pass removes the rounding residue of the first, which matters
    only when the result is re-projected and compared at 1e-13 or below.
    """
    p = projector(grid)
    out = p(u)
    for _ in range(passes - 1):
        out = p(out)
    return out


# -- public field API ---------------------------------------------------------

OPERATORS = ("grad", "div", "curl", "laplacian", "strain", "advect")


def differentiate(f, operator: str, by: VectorField | None = None, closure=None):
    """Apply a differential operator to a field.

    ``laplacian`` uses the compact three-point stencil in z and needs wall
    ghost values; pass a ``boundary.WallClosure`` as ``closure`` (field_ops
    never invents boundary data). Without a closure the Laplacian is the
    composition div(grad f) of the SBP first derivatives.
    """
    grid = f.grid
    if operator not in OPERATORS:
        raise UsageError(f"unknown operator {operator!r}; expected one of {OPERATORS}")
    if operator == "grad":
        if f.rank == 2:
            raise UsageError("grad of a tensor field is not supported")
        return wrap(grid, gradient_array(grid, f.data))
    if operator == "div":
        if f.rank == 0:
            raise UsageError("div needs a vector or tensor field")
        return wrap(grid, divergence_array(grid, f.data))
    if operator == "curl":
        if f.rank != 1:
            raise UsageError("curl needs a vector field")
        return wrap(grid, curl_array(grid, f.data))
    if operator == "strain":
        if f.rank != 1:
            raise UsageError("strain needs a vector field")
        g = gradient_array(grid, f.data)
        return TensorField(grid, 0.5 * (g + np.swapaxes(g, 0, 1)))
    if operator == "advect":
        if by is None or by.rank != 1:
            raise UsageError("advect needs a vector field 'by'")
        if not by.grid.same_as(grid):
            raise UsageError("grid mismatch between field and advecting velocity")
        if f.rank == 2:
            raise UsageError("advect of a tensor field is not supported")
        return wrap(grid, _convective(grid, by.data, gradient_array(grid, f.data)))
    # laplacian
    if f.rank == 2:
        raise UsageError("laplacian of a tensor field is not supported")
    if closure is None:
        return wrap(grid, divergence_array(grid, gradient_array(grid, f.data)))
    from .boundary import close_ghosts, close_ghosts_scalar

    if f.rank == 1:
        padded = close_ghosts(f, closure)
    else:
        padded = close_ghosts_scalar(f, closure)
    lap = laplacian_tangential(grid, f.data) + normal_second_difference(grid, padded)
    return wrap(grid, lap)


def inner_product(a, b) -> float:
    """Quadrature-weighted L2 product, summed over components."""
    if a.rank != b.rank:
        raise UsageError(f"rank mismatch: {a.rank} vs {b.rank}")
    if not a.grid.same_as(b.grid):
        raise UsageError("grid mismatch in inner_product")
    return float(np.sum(a.grid.integrate(a.data * b.data)))


def l2_norm(a) -> float:
    return float(np.sqrt(max(inner_product(a, a), 0.0)))


def divergence_residual(u: VectorField) -> float:
    """||div u|| / ||grad u|| (absolute value when u is constant)."""
    grid = u.grid
    div = divergence_array(grid, u.data)
    num = float(np.sqrt(grid.integrate(div * div)))
    g = gradient_array(grid, u.data)
    den = float(np.sqrt(np.sum(grid.integrate(g * g))))
    return num / den if den > 0 else num


def leray_project(u: VectorField, tol: float = 1e-10) -> VectorField:
    """Orthogonal L2 projection onto divergence-free fields with zero normal trace."""
    grid = u.grid
    out = project_array(grid, u.data, passes=2)
    scale = float(np.max(np.abs(u.data))) or 1.0
    div = divergence_array(grid, out)
    ref = np.sqrt(np.sum(grid.integrate(gradient_array(grid, u.data) ** 2)))
    res = float(np.sqrt(grid.integrate(div * div)))
    if not np.isfinite(res) or res > tol * max(ref, scale):
        raise NumericalError(f"Leray projection left divergence {res:.3e}", residual=res)
    return VectorField(grid, out)
