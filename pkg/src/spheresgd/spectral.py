"""Mercer spectra of dot-product kernels on S^d via zonal-moment quadrature.

For a kernel phi(<x,y>) on S^d the eigenvalue attached to harmonic degree k is

    mu_k = E[ phi(t) P_{k,d}(t) ],   t = <u, x>, x uniform on S^d,

which follows from the zonal expansion phi = sum_k mu_k N(d,k) P_{k,d} and
E[P_{k,d}^2] = 1/N(d,k).  The expectation is a 1-d integral with weight
(1-t^2)^{(d-2)/2}; substituting t = cos(theta) turns it into an integral of an
analytic function of theta (odd d has a square-root endpoint singularity in t
that would ruin plain Gauss-Legendre), so a single Gauss-Legendre rule in theta
serves every d at spectral accuracy.  The rule is self-normalizing: the
constant Z_d is computed with the same nodes.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import roots_legendre

from .dot_kernels import KernelSpec, kernel_bound, kernel_eval
from .errors import NumericalFailureError
from .sphere_harmonics import harmonic_multiplicity, zonal_values

# Flattened eigenvalue list cap: full flattening is ~sum_k N(d,k) entries and
# can reach 1e11 for d in the hundreds, so it must be bounded by default.
DEFAULT_LAMBDA_LEN = 100_000

# Captured-trace fraction below which tail quantities are flagged as estimates.
TAIL_COMPLETE_FRACTION = 0.999


def default_quad_nodes(d: int, max_degree: int) -> int:
    return max(2 * (max_degree + d) + 60, 200)


@dataclass(frozen=True, eq=False)
class SpectralProfile:
    """Spectrum of one kernel on one sphere, truncated at a degree cutoff.

    mu holds (degree, eigenvalue) pairs for degrees 0..max_degree; lambda_flat
    repeats each mu_k according to its harmonic multiplicity, sorted
    nonincreasing and truncated to at most lambda_len entries.
    """

    d: int
    mu: tuple  # ((k, mu_k), ...)
    lambda_flat: np.ndarray
    kernel_trace: float
    phi_at_one: float
    total_multiplicity: int
    convention: str = "sphere-d"
    quad_nodes: int = 0

    @property
    def max_degree(self) -> int:
        return self.mu[-1][0]

    @property
    def truncated(self) -> bool:
        return len(self.lambda_flat) < self.total_multiplicity

    @property
    def trace_fraction(self) -> float:
        return self.kernel_trace / self.phi_at_one

    @property
    def tail_complete(self) -> bool:
        return self.trace_fraction >= TAIL_COMPLETE_FRACTION

    @property
    def lambda1(self) -> float:
        """Top eigenvalue = max mu_k over computed degrees."""
        return float(self.lambda_flat[0])

    def mu_at(self, k: int) -> float:
        for deg, val in self.mu:
            if deg == k:
                return val
        raise ValueError(f"degree {k} not computed (max_degree={self.max_degree})")

    def multiplicities(self) -> list:
        return [harmonic_multiplicity(self.d, k) for k, _ in self.mu]


def compute_spectrum(
    spec: KernelSpec,
    d: int,
    max_degree: int,
    quad_nodes: int | None = None,
    lambda_len: int = DEFAULT_LAMBDA_LEN,
) -> SpectralProfile:
    """Eigenvalues mu_0..mu_K of ``spec`` on S^d plus the flattened sequence.

    quad_nodes defaults to max(2*(max_degree+d)+60, 200) and must be at least
    2*(max_degree+d).  Small negative quadrature noise (within 1e-10*phi(1))
    is clamped to zero; worse negativity, or a computed trace exceeding phi(1)
    beyond tolerance, raises NumericalFailureError with diagnostics.
    """
    if d < 2:
        raise ValueError(f"spectrum needs d >= 2, got d={d}")
    if max_degree < 0:
        raise ValueError("max_degree must be >= 0")
    if lambda_len < 1:
        raise ValueError("lambda_len must be >= 1")
    if quad_nodes is None:
        quad_nodes = default_quad_nodes(d, max_degree)
    if quad_nodes < 2 * (max_degree + d):
        raise ValueError(f"quad_nodes={quad_nodes} < 2*(max_degree+d)={2 * (max_degree + d)}")

    nodes, weights = roots_legendre(quad_nodes)
    theta = np.pi * (nodes + 1.0) / 2.0
    t = np.cos(theta)
    # weight (1-t^2)^{(d-2)/2} dt  ->  sin(theta)^{d-1} dtheta, in log space to
    # survive large d
    log_sin = np.log(np.sin(theta))
    folded = weights * np.exp((d - 1) * log_sin)
    z_norm = folded.sum()

    # sphere-d polynomials only: they are the eigenfunction profiles under this
    # measure.  Projecting the d-1 family here would not be a spectrum (the
    # coefficients can go negative); that family's spectrum is the d-1 sphere's.
    poly = zonal_values(d, max_degree, t)
    phi_vals = np.asarray(kernel_eval(spec, t), dtype=float)
    mu_raw = poly @ (folded * phi_vals) / z_norm

    phi1 = kernel_bound(spec)
    clamp_floor = -1e-10 * phi1
    if np.any(mu_raw < clamp_floor):
        worst = int(np.argmin(mu_raw))
        raise NumericalFailureError(
            "quadrature produced an eigenvalue more negative than the noise floor",
            degree=worst,
            value=float(mu_raw[worst]),
            floor=clamp_floor,
            d=d,
            quad_nodes=quad_nodes,
        )
    mu_vals = np.where(mu_raw < 0.0, 0.0, mu_raw)

    counts = [harmonic_multiplicity(d, k) for k in range(max_degree + 1)]
    trace = float(sum(m * float(c) for m, c in zip(mu_vals, counts)))
    if trace > phi1 * (1.0 + 1e-6):
        raise NumericalFailureError(
            "computed trace exceeds phi(1); quadrature has not converged",
            trace=trace,
            phi_at_one=phi1,
            d=d,
            max_degree=max_degree,
            quad_nodes=quad_nodes,
        )

    total = sum(counts)
    lam = _flatten_truncated(mu_vals, counts, min(lambda_len, total))

    return SpectralProfile(
        d=d,
        mu=tuple((k, float(mu_vals[k])) for k in range(max_degree + 1)),
        lambda_flat=lam,
        kernel_trace=trace,
        phi_at_one=phi1,
        total_multiplicity=total,
        quad_nodes=quad_nodes,
    )


def _flatten_truncated(mu_vals: np.ndarray, counts: list, keep: int) -> np.ndarray:
    """First ``keep`` entries of the nonincreasing multiplicity-expanded list.

    Counts are Python ints (they can exceed any fixed-width type), so blocks
    are materialized only up to the cap.
    """
    order = np.argsort(-mu_vals, kind="stable")
    out = np.empty(keep, dtype=float)
    filled = 0
    for k in order:
        if filled >= keep:
            break
        take = min(counts[int(k)], keep - filled)
        out[filled : filled + take] = mu_vals[int(k)]
        filled += take
    return out[:filled]


def effective_dimension(profile: SpectralProfile, eta0: float, n: int) -> int:
    """k* = max{k : lambda_k >= 1/(eta0 n)}, or 0 when nothing qualifies."""
    if eta0 <= 0:
        raise ValueError("eta0 must be > 0")
    if n < 1:
        raise ValueError("n must be >= 1")
    lam = profile.lambda_flat
    if len(lam) == 0:
        raise ValueError("profile has an empty eigenvalue list")
    threshold = 1.0 / (eta0 * n)
    k_star = int(np.searchsorted(-lam, -threshold, side="right"))
    if k_star == len(lam) and profile.truncated:
        raise NumericalFailureError(
            "all stored eigenvalues clear the threshold but the list is truncated; "
            "recompute with a larger lambda_len",
            stored=len(lam),
            total=profile.total_multiplicity,
            threshold=threshold,
        )
    return k_star


def tail_sum_squared(profile: SpectralProfile, k_star: int) -> float:
    """sum of lambda_i^2 over i > k_star within the stored truncation.

    When the degree cutoff captures less than 99.9% of the trace the stored
    tail underestimates the true one; a warning flags that case (see
    ``SpectralProfile.tail_complete``).
    """
    lam = profile.lambda_flat
    if not 0 <= k_star <= len(lam):
        raise ValueError(f"k_star={k_star} outside 0..{len(lam)}")
    if not profile.tail_complete:
        warnings.warn(
            f"degree cutoff captures only {profile.trace_fraction:.4f} of the trace; "
            "tail sum is a truncation estimate",
            stacklevel=2,
        )
    return float(np.square(lam[k_star:]).sum())
