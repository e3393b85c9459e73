"""Conormal and standard norms, the N_m functional and boundary-layer profiles.

Conormal derivatives are Z_k = d_k for the tangential directions and
Z_dim = phi(z) d_z. Multi-indices are ordered sequences I = (k_1, ..., k_l)
with l <= m, so ||f||_m^2 sums ||Z^I f||^2 over all dim^l sequences of each
length l. Vector and tensor fields sum over their components; the sup norm
uses the pointwise Euclidean (Frobenius) magnitude.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import GuardError, UsageError
from .field_ops import gradient_array
from .geometry import ChannelGrid

MAX_ORDER = 4


def _unwrap(f):
    if hasattr(f, "grid"):
        return f.grid, f.data
    raise UsageError("expected a field object")


def _check_order(grid: ChannelGrid, m: int) -> None:
    if not isinstance(m, (int, np.integer)) or m < 0:
        raise GuardError(f"order must be a non-negative integer, got {m!r}")
    if m > MAX_ORDER:
        raise GuardError(f"order {m} exceeds the supported maximum {MAX_ORDER}")
    if grid.n_normal < 2 * m + 3 or grid.n_tangential < 2 * m + 2:
        raise GuardError(f"grid {grid.key} too coarse for {m} conormal derivatives")


def multi_indices(dim: int, m: int):
    """All ordered sequences over {0..dim-1} of length <= m, shortest first."""
    for length in range(m + 1):
        yield from itertools.product(range(dim), repeat=length)


def conormal_derivatives(grid: ChannelGrid, f: np.ndarray, m: int) -> dict[tuple, np.ndarray]:
    """Z^I f for every |I| <= m, applied right to left (Z^I = Z_k1 ... Z_kl)."""
    out = {(): f}
    for length in range(1, m + 1):
        for idx in itertools.product(range(grid.dim), repeat=length):
            # Z_k1 applied to Z^(k2..kl) f
            out[idx] = grid.conormal_derivative(out[idx[1:]], idx[0])
    return out


def _sq_l2(grid, arr) -> float:
    return float(np.sum(grid.integrate(arr * arr)))


def _sup(grid, arr) -> float:
    extra = arr.ndim - grid.dim
    if extra == 0:
        return float(np.max(np.abs(arr)))
    mag = np.sqrt(np.sum(arr.reshape((-1,) + grid.shape) ** 2, axis=0))
    return float(np.max(mag))


def conormal_norm_sq(grid: ChannelGrid, f: np.ndarray, m: int) -> float:
    _check_order(grid, m)
    return sum(_sq_l2(grid, z) for z in conormal_derivatives(grid, f, m).values())


def conormal_norm(f, m: int) -> float:
    """||f||_m."""
    grid, arr = _unwrap(f)
    return math.sqrt(conormal_norm_sq(grid, arr, m))


def conormal_sup_array(grid: ChannelGrid, f: np.ndarray, m: int) -> float:
    _check_order(grid, m)
    return sum(_sup(grid, z) for z in conormal_derivatives(grid, f, m).values())


def conormal_sup_norm(f, m: int) -> float:
    """||f||_{m,inf} = sum over |I| <= m of sup |Z^I f|."""
    grid, arr = _unwrap(f)
    return conormal_sup_array(grid, arr, m)


def grad_conormal_norm(f, m: int) -> float:
    """sqrt(sum over |I| <= m of ||grad Z^I f||^2); a proof-side quantity, reported only."""
    grid, arr = _unwrap(f)
    _check_order(grid, m)
    total = 0.0
    for z in conormal_derivatives(grid, arr, m).values():
        total += _sq_l2(grid, gradient_array(grid, z))
    return math.sqrt(total)


def sobolev_norm(f, m: int) -> float:
    """Full H^m norm with coordinate derivatives over ordered sequences."""
    grid, arr = _unwrap(f)
    _check_order(grid, m)
    out = {(): arr}
    total = _sq_l2(grid, arr)
    for length in range(1, m + 1):
        for idx in itertools.product(range(grid.dim), repeat=length):
            out[idx] = grid.derivative(out[idx[1:]], idx[0])
            total += _sq_l2(grid, out[idx])
    return math.sqrt(total)


NM_TERMS = ("v_m", "grad_v_m1", "grad_v_1inf", "h_m", "grad_h_m1", "grad_h_1inf")


def n_m_diagnostic(state, m: int) -> dict[str, float]:
    """N_m = ||v||_m^2 + ||grad v||_{m-1}^2 + ||grad v||_{1,inf}^2 + same for H.

    Returns the six summands and their sum under ``total``.
    """
    grid = state.grid
    if m < 1:
        raise GuardError(f"N_m needs m >= 1, got {m}")
    _check_order(grid, m)
    out = {}
    for tag, u in (("v", state.v.data), ("h", state.H.data)):
        g = gradient_array(grid, u)
        out[f"{tag}_m"] = conormal_norm_sq(grid, u, m)
        out[f"grad_{tag}_m1"] = conormal_norm_sq(grid, g, m - 1)
        out[f"grad_{tag}_1inf"] = conormal_sup_array(grid, g, 1) ** 2
    out = {k: out[k] for k in NM_TERMS}
    out["total"] = sum(out.values())
    return out


# -- error norms -------------------------------------------------------------


def _error_norms_array(grid: ChannelGrid, e: np.ndarray, p_list) -> dict[str, float]:
    g = gradient_array(grid, e)
    l2sq = _sq_l2(grid, e)
    out = {
        "L2": math.sqrt(l2sq),
        "H1": math.sqrt(l2sq + _sq_l2(grid, g)),
        "Linf": _sup(grid, e),
    }
    for p in p_list:
        p = float(p)
        if not p >= 1:
            raise UsageError(f"W^(1,p) needs p >= 1, got {p}")
        s = float(np.sum(grid.integrate(np.abs(e) ** p))) + float(np.sum(grid.integrate(np.abs(g) ** p)))
        out[f"W1,{p:g}"] = s ** (1.0 / p)
    return out


def error_norms(a, b, p_list=(4,)) -> dict[str, dict[str, float]]:
    """Norms of v_a - v_b and H_a - H_b: {norm: {"v": x, "H": y}}.

    Norm names: L2, H1, Linf and W1,p for each p in ``p_list``.
    """
    if not a.grid.same_as(b.grid):
        raise UsageError("error_norms needs states on the same grid")
    grid = a.grid
    ev = _error_norms_array(grid, a.v.data - b.v.data, p_list)
    eh = _error_norms_array(grid, a.H.data - b.H.data, p_list)
    return {k: {"v": ev[k], "H": eh[k]} for k in ev}


def second_derivative_sq(grid: ChannelGrid, u: np.ndarray) -> float:
    """||grad^2 u||^2 (all ordered second coordinate derivatives)."""
    g = gradient_array(grid, u)
    return _sq_l2(grid, gradient_array(grid, g))


# -- boundary layer ----------------------------------------------------------


@dataclass
class LayerProfile:
    z: np.ndarray
    # tangential RMS of |(v_eps - v_ideal)_t| against distance from the wall,
    # averaged over the two walls
    profile: np.ndarray
    profile_lo: np.ndarray
    profile_hi: np.ndarray
    amplitude: float
    width: float
    epsilon: float

    @property
    def scaled_amplitude(self) -> float:
        return self.amplitude / math.sqrt(self.epsilon)

    @property
    def scaled_width(self) -> float:
        return self.width / math.sqrt(self.epsilon)

    def rescaled(self) -> tuple[np.ndarray, np.ndarray]:
        """(z / sqrt(eps), profile / sqrt(eps))."""
        s = math.sqrt(self.epsilon)
        return self.z / s, self.profile / s


def efold_width(z: np.ndarray, prof: np.ndarray) -> float:
    """Distance from the profile peak to where it first drops below peak/e.

    The crossing is located by log-linear interpolation, exact for an
    exponential. Returns nan if the profile never decays that far.
    """
    i0 = int(np.argmax(prof))
    peak = prof[i0]
    if not peak > 0:
        return float("nan")
    target = peak / math.e
    for j in range(i0 + 1, len(prof)):
        if prof[j] <= target:
            a, b = prof[j - 1], prof[j]
            if b > 0:
                frac = math.log(a / target) / math.log(a / b)
            else:
                frac = (a - target) / (a - b)
            return float(z[j - 1] + frac * (z[j] - z[j - 1]) - z[i0])
    return float("nan")


def boundary_layer_profile(v_eps, v_ideal, epsilon: float) -> LayerProfile:
    """Wall-normal profile of the tangential difference and its amplitude / e-fold width."""
    if not epsilon > 0:
        raise UsageError("boundary-layer rescaling needs epsilon > 0")
    if not v_eps.grid.same_as(v_ideal.grid):
        raise UsageError("boundary_layer_profile needs fields on the same grid")
    grid = v_eps.grid
    d = grid.dim
    diff = (v_eps.data - v_ideal.data)[: d - 1]
    mag2 = np.sum(diff**2, axis=0)
    tang_axes = tuple(range(d - 1))
    rms = np.sqrt(np.mean(mag2, axis=tang_axes))
    half = (grid.n_normal - 1) // 2 + 1
    z = grid.z_nodes[:half]
    lo = rms[:half]
    hi = rms[::-1][:half]
    prof = 0.5 * (lo + hi)
    amp = float(np.max(prof))
    return LayerProfile(
        z=np.array(z),
        profile=prof,
        profile_lo=lo,
        profile_hi=hi,
        amplitude=amp,
        width=efold_width(z, prof),
        epsilon=float(epsilon),
    )
