"""Dot-product kernels on the sphere: K(x, y) = phi(<x, y>).

Two families:

* ``NtkKernel(depth)`` -- the fully-connected ReLU neural tangent kernel,
  built from the arc-cosine maps kappa0/kappa1 by a depth-layer recursion.
* ``PowerSeriesKernel(coeffs)`` -- phi(t) = sum_j a_j t^j with a_j >= 0;
  ``linear_kernel()`` is the special case phi(t) = t.

All evaluators accept scalars or arrays and clamp arguments to [-1, 1] with a
1e-12 tolerance (round-off in unit-vector inner products); anything farther
outside raises.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Union

import numpy as np

CLAMP_TOL = 1e-12


def _clamp(t):
    arr = np.asarray(t, dtype=float)
    if np.any(np.abs(arr) > 1.0 + CLAMP_TOL):
        worst = float(np.max(np.abs(arr)))
        raise ValueError(f"kernel argument outside [-1, 1] beyond tolerance: |t| up to {worst}")
    return np.clip(arr, -1.0, 1.0)


def _as_input_shape(values: np.ndarray, t):
    if np.isscalar(t) or np.asarray(t).ndim == 0:
        return float(values)
    return values


def arc_kappa0(t):
    """(1/pi) (pi - arccos t); maps [-1,1] onto [0,1], nondecreasing."""
    return _as_input_shape((np.pi - np.arccos(_clamp(t))) / np.pi, t)


def arc_kappa1(t):
    """(1/pi) (t (pi - arccos t) + sqrt(1 - t^2)); maps [-1,1] onto [0,1]."""
    tc = _clamp(t)
    return _as_input_shape((tc * (np.pi - np.arccos(tc)) + np.sqrt(1.0 - tc * tc)) / np.pi, t)


@dataclass(frozen=True)
class NtkKernel:
    """ReLU NTK of a fully-connected network with ``depth`` layers.

    depth 1 is the linear kernel t; each extra layer applies
        k       <- kappa1(k_prev)
        k_ntk   <- k_ntk * kappa0(k_prev) + k
    so phi(1) = depth exactly.

    Note: for depth 2 the power-series coefficients of phi vanish at every odd
    order >= 3, so only even harmonic degrees (plus degree 1) carry mass.
    """

    depth: int

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError(f"NTK depth must be >= 1, got {self.depth}")

    @property
    def kernel_bound(self) -> float:
        """kappa^2 = phi(1)."""
        return float(self.depth)


@dataclass(frozen=True)
class PowerSeriesKernel:
    """phi(t) = sum_j coeffs[j] t^j with nonnegative coefficients."""

    coeffs: tuple

    def __post_init__(self):
        c = tuple(float(a) for a in self.coeffs)
        if len(c) == 0:
            raise ValueError("power series needs at least one coefficient")
        if any(a < 0 for a in c):
            raise ValueError("power-series coefficients must be nonnegative")
        if sum(c) <= 0:
            raise ValueError("power series is identically zero")
        object.__setattr__(self, "coeffs", c)

    @property
    def kernel_bound(self) -> float:
        return float(sum(self.coeffs))


KernelSpec = Union[NtkKernel, PowerSeriesKernel]


def linear_kernel() -> PowerSeriesKernel:
    return PowerSeriesKernel((0.0, 1.0))


def _ntk_phi(t: np.ndarray, depth: int) -> np.ndarray:
    k_prev = t
    k_ntk = t.copy() if isinstance(t, np.ndarray) else np.asarray(t, dtype=float)
    for _ in range(depth - 1):
        # intermediate activations live in [0,1]; clip pure round-off
        k_prev = np.clip(k_prev, -1.0, 1.0)
        k_next = (k_prev * (np.pi - np.arccos(k_prev)) + np.sqrt(1.0 - k_prev * k_prev)) / np.pi
        k_ntk = k_ntk * ((np.pi - np.arccos(k_prev)) / np.pi) + k_next
        k_prev = k_next
    return k_ntk


def _horner(t: np.ndarray, coeffs) -> np.ndarray:
    acc = np.full_like(t, coeffs[-1])
    for a in reversed(coeffs[:-1]):
        acc = acc * t + a
    return acc


def kernel_eval(spec: KernelSpec, t):
    """phi(t) for scalar or array t."""
    tc = _clamp(t)
    if isinstance(spec, NtkKernel):
        vals = _ntk_phi(tc, spec.depth)
    elif isinstance(spec, PowerSeriesKernel):
        vals = _horner(tc, spec.coeffs)
    else:
        raise TypeError(f"not a kernel spec: {spec!r}")
    return _as_input_shape(vals, t)


def kernel_bound(spec: KernelSpec) -> float:
    """kappa^2 = phi(1), the sup of the kernel on the sphere."""
    if isinstance(spec, (NtkKernel, PowerSeriesKernel)):
        return spec.kernel_bound
    raise TypeError(f"not a kernel spec: {spec!r}")


def gram_row(spec: KernelSpec, support, x) -> np.ndarray:
    """[K(x_j, x)]_j for support points stacked as rows."""
    support = np.asarray(support, dtype=float)
    x = np.asarray(x, dtype=float)
    if support.ndim != 2:
        raise ValueError("support must be a 2-d array of points")
    if x.shape != (support.shape[1],):
        raise ValueError(f"dimension mismatch: support has dim {support.shape[1]}, x has shape {x.shape}")
    if support.shape[0] == 0:
        return np.zeros(0)
    return np.asarray(kernel_eval(spec, support @ x), dtype=float).reshape(support.shape[0])


def validate_low_order_coefficients(spec: KernelSpec, gamma: float) -> None:
    """Warn when a power series has a vanishing coefficient of order <= floor(gamma)+3.

    The spectral-decay reasoning behind the rate predictions needs strictly
    positive low-order series coefficients; a zero there makes the predicted
    exponents unreliable for that gamma.
    """
    if not isinstance(spec, PowerSeriesKernel):
        return
    need = int(np.floor(gamma)) + 3
    zeros = [j for j in range(min(need, len(spec.coeffs) - 1) + 1) if spec.coeffs[j] == 0.0]
    if zeros:
        warnings.warn(
            f"power-series coefficients vanish at orders {zeros} <= {need}; "
            f"rate predictions for gamma={gamma} assume these are positive",
            stacklevel=2,
        )
