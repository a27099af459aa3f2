"""Uniform sampling on the unit sphere plus normalized ultraspherical polynomials.

Throughout the package S^d means the unit sphere inside R^{d+1}, so points have
d+1 coordinates.  Polynomials are normalized so that P_{k,d}(1) = 1 for every
degree; with that normalization P_{1,d}(t) = t regardless of d.

Two polynomial conventions are supported:

* ``sphere-d``      -- recurrence parameter d (the geometry of S^d); at degree 2
                       this gives ((d+1) t^2 - 1) / d.
* ``paper-formula`` -- recurrence parameter d-1; at degree 2 this gives
                       (d t^2 - 1) / (d - 1), the Chebyshev family when d = 2.

The default everywhere is ``sphere-d``.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np

CONVENTIONS = ("sphere-d", "paper-formula")

# Tolerance for arguments marginally outside [-1, 1] (round-off in unit-vector
# inner products); anything worse is a caller bug.
CLAMP_TOL = 1e-12


def sample_uniform_sphere(d: int, n: int, seed) -> np.ndarray:
    """Sample n points uniformly on S^d.  Returns an (n, d+1) float array.

    ``seed`` may be an int, a numpy SeedSequence, or a Generator; a fixed seed
    gives identical output on every call.
    """
    if d < 1:
        raise ValueError(f"sphere dimension must be >= 1, got d={d}")
    if n < 1:
        raise ValueError(f"sample count must be >= 1, got n={n}")
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, d + 1))
    norms = np.linalg.norm(x, axis=1)
    while np.any(norms < 1e-12):  # measure-zero, but cheap to guard
        bad = norms < 1e-12
        x[bad] = rng.standard_normal((int(bad.sum()), d + 1))
        norms = np.linalg.norm(x, axis=1)
    return x / norms[:, None]


def _clamp_unit(t):
    t = np.asarray(t, dtype=float)
    if np.any(np.abs(t) > 1.0 + CLAMP_TOL):
        worst = float(np.max(np.abs(t)))
        raise ValueError(f"polynomial argument outside [-1, 1]: |t| up to {worst}")
    return np.clip(t, -1.0, 1.0)


def _recurrence_param(d: int, convention: str) -> int:
    if convention not in CONVENTIONS:
        raise ValueError(f"unknown convention {convention!r}, expected one of {CONVENTIONS}")
    param = d if convention == "sphere-d" else d - 1
    if param < 1:
        raise ValueError(f"convention {convention!r} needs d >= {2 if convention == 'paper-formula' else 1}")
    return param


def _zonal_all(param: int, max_degree: int, t: np.ndarray) -> np.ndarray:
    """All degrees 0..max_degree of the P_k(1)=1 normalized family, stacked on axis 0.

    Three-term recurrence with parameter ``param``:
        P_k = ((2k + param - 3) t P_{k-1} - (k-1) P_{k-2}) / (k + param - 2)
    seeded by P_0 = 1, P_1 = t.
    """
    out = np.empty((max_degree + 1,) + t.shape, dtype=float)
    out[0] = 1.0
    if max_degree >= 1:
        out[1] = t
    for k in range(2, max_degree + 1):
        out[k] = ((2 * k + param - 3) * t * out[k - 1] - (k - 1) * out[k - 2]) / (k + param - 2)
    return out


def zonal_values(d: int, max_degree: int, t, convention: str = "sphere-d") -> np.ndarray:
    """Vectorized evaluation of P_{0,d}..P_{K,d} at t; shape (K+1,) + t.shape."""
    if max_degree < 0:
        raise ValueError("max_degree must be >= 0")
    param = _recurrence_param(d, convention)
    return _zonal_all(param, max_degree, _clamp_unit(t))


@dataclass(frozen=True)
class UltrasphericalBasis:
    """The family P_{0,d}..P_{K,d} on S^d under one convention."""

    d: int
    max_degree: int
    convention: str = "sphere-d"

    def __post_init__(self):
        if self.d < 2:
            raise ValueError(f"basis needs d >= 2, got d={self.d}")
        if self.max_degree < 0:
            raise ValueError("max_degree must be >= 0")
        _recurrence_param(self.d, self.convention)


def gegenbauer_eval(basis: UltrasphericalBasis, k: int, t):
    """P_{k,d}(t) for scalar or array t."""
    if not 0 <= k <= basis.max_degree:
        raise ValueError(f"degree k={k} outside 0..{basis.max_degree}")
    t_arr = _clamp_unit(t)
    vals = _zonal_all(_recurrence_param(basis.d, basis.convention), k, np.atleast_1d(t_arr))[k]
    return float(vals[0]) if np.isscalar(t) or np.asarray(t).ndim == 0 else vals.reshape(np.shape(t))


def harmonic_multiplicity(d: int, k: int) -> int:
    """Dimension of the degree-k spherical-harmonic space on S^d, exactly.

    N(d,0) = 1 and N(d,k) = ((2k+d-1)/k) * (k+d-2)! / ((d-1)! (k-1)!) for k >= 1.
    Computed in unbounded integer arithmetic, so the value is exact for any
    (d, k); converting a huge result to float raises OverflowError rather than
    silently wrapping.
    """
    if d < 2:
        raise ValueError(f"multiplicity needs d >= 2, got d={d}")
    if k < 0:
        raise ValueError(f"degree must be >= 0, got k={k}")
    if k == 0:
        return 1
    num = (2 * k + d - 1) * factorial(k + d - 2)
    den = k * factorial(d - 1) * factorial(k - 1)
    assert num % den == 0
    return num // den
