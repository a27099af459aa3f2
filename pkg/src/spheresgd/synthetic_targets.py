"""Ground-truth regression functions and noisy label generation.

Two target families:

* ``KernelCombinationTarget`` -- f*(x) = sum_i w_i K(x, u_i) with anchor
  points u_i on the sphere; lives in the kernel's reproducing space with
  squared norm w^T G w (G the anchor Gram matrix).
* ``HarmonicModeTarget``     -- f*(x) = scale * P_{k,d}(<u, x>), a single
  harmonic degree; ``make_source_target`` picks scale = mu_k^{s/2} N(d,k)^{-1/2}
  so the target has interpolation-space smoothness s with norm N(d,k)^{-1}.

Labels are y = f*(x) + eps with eps ~ Normal(0, noise_sigma^2) i.i.d.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .dot_kernels import KernelSpec, kernel_eval
from .sphere_harmonics import harmonic_multiplicity, sample_uniform_sphere, zonal_values
from .spectral import SpectralProfile


@dataclass(frozen=True, eq=False)
class KernelCombinationTarget:
    kernel: KernelSpec
    anchors: np.ndarray  # (m, dim)
    weights: np.ndarray  # (m,)
    noise_sigma: float = 1.0

    def __post_init__(self):
        if self.anchors.ndim != 2 or self.weights.shape != (self.anchors.shape[0],):
            raise ValueError("anchors must be (m, dim) with matching weights (m,)")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        norms = np.linalg.norm(self.anchors, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-9):
            raise ValueError("anchors must be unit-norm")

    def rkhs_norm_sq(self) -> float:
        gram = np.asarray(kernel_eval(self.kernel, self.anchors @ self.anchors.T))
        return float(self.weights @ gram @ self.weights)

    def to_metadata(self) -> dict:
        return {
            "kind": "kernel_combination",
            "num_anchors": int(self.anchors.shape[0]),
            "weights": [float(w) for w in self.weights],
            "noise_sigma": self.noise_sigma,
            "rkhs_norm_sq": self.rkhs_norm_sq(),
        }


@dataclass(frozen=True, eq=False)
class HarmonicModeTarget:
    d: int
    degree: int
    direction: np.ndarray  # (d+1,)
    scale: float
    convention: str = "sphere-d"
    noise_sigma: float = 1.0

    def __post_init__(self):
        if self.direction.shape != (self.d + 1,):
            raise ValueError(f"direction must have {self.d + 1} coordinates")
        if abs(np.linalg.norm(self.direction) - 1.0) > 1e-9:
            raise ValueError("direction must be unit-norm")
        if not math.isfinite(self.scale):
            raise ValueError("scale must be finite")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")

    def second_moment(self) -> float:
        """E[f*(x)^2] = scale^2 / N(d, degree) under the uniform law."""
        return self.scale**2 / float(harmonic_multiplicity(self.d, self.degree))

    def to_metadata(self) -> dict:
        return {
            "kind": "harmonic_mode",
            "degree": self.degree,
            "scale": self.scale,
            "convention": self.convention,
            "noise_sigma": self.noise_sigma,
        }


TargetSpec = Union[KernelCombinationTarget, HarmonicModeTarget]


def make_kernel_target(
    kernel: KernelSpec, d: int, num_anchors: int, seed, noise_sigma: float = 1.0
) -> KernelCombinationTarget:
    """Anchors sampled uniformly on S^d, all weights 1."""
    if num_anchors < 1:
        raise ValueError("num_anchors must be >= 1")
    anchors = sample_uniform_sphere(d, num_anchors, seed)
    return KernelCombinationTarget(
        kernel=kernel,
        anchors=anchors,
        weights=np.ones(num_anchors),
        noise_sigma=noise_sigma,
    )


def make_source_target(
    profile: SpectralProfile,
    s: float,
    degree: int,
    seed,
    convention: str | None = None,
    noise_sigma: float = 1.0,
) -> HarmonicModeTarget:
    """Single harmonic mode with smoothness-s scaling read off ``profile``."""
    if s <= 0:
        raise ValueError("smoothness s must be > 0")
    mu_k = profile.mu_at(degree)
    if mu_k <= 0:
        raise ValueError(f"degree {degree} carries no spectral mass (mu={mu_k})")
    mult = harmonic_multiplicity(profile.d, degree)
    scale = mu_k ** (s / 2.0) / math.sqrt(float(mult))
    direction = sample_uniform_sphere(profile.d, 1, seed)[0]
    return HarmonicModeTarget(
        d=profile.d,
        degree=degree,
        direction=direction,
        scale=scale,
        convention=convention if convention is not None else profile.convention,
        noise_sigma=noise_sigma,
    )


def target_eval(target: TargetSpec, x):
    """Exact f*(x); single point (dim,) -> float, batch (m, dim) -> (m,)."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = x[None, :] if single else x
    if isinstance(target, KernelCombinationTarget):
        if pts.shape[1] != target.anchors.shape[1]:
            raise ValueError("point dimension does not match anchors")
        vals = np.asarray(kernel_eval(target.kernel, pts @ target.anchors.T)) @ target.weights
    elif isinstance(target, HarmonicModeTarget):
        if pts.shape[1] != target.d + 1:
            raise ValueError("point dimension does not match the target sphere")
        dots = pts @ target.direction
        vals = target.scale * zonal_values(target.d, target.degree, dots, target.convention)[target.degree]
    else:
        raise TypeError(f"not a target spec: {target!r}")
    return float(vals[0]) if single else vals


def generate_labels(target: TargetSpec, points, seed) -> np.ndarray:
    """y_i = f*(x_i) + Normal(0, noise_sigma^2), deterministic per seed."""
    points = np.asarray(points, dtype=float)
    clean = np.atleast_1d(np.asarray(target_eval(target, points), dtype=float))
    if target.noise_sigma == 0:
        return clean.copy()
    rng = np.random.default_rng(seed)
    return clean + rng.normal(0.0, target.noise_sigma, size=clean.shape)
