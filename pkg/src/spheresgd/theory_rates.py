"""Closed-form rate theory for single-pass kernel SGD on polynomially scaled spheres.

Covers four groups of formulas, all exact arithmetic on explicit spectra:

* rate-region classification for n ~ d^gamma against source smoothness s,
* recommended initial step sizes per schedule (with the mandatory cap
  min{1/kappa^2, 1/lambda_1} supplied by the caller),
* minimax rates in the high-dimensional and classical asymptotic regimes,
* exact population bias/variance of the SGD recursion on a diagonal model,
  and the matching upper/lower risk-bound expressions.

Products (1 - eta lambda)^n are evaluated through log1p/expm1 or cumulative
products so nothing overflows at n ~ 1e5 with tiny eta*lambda.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import PreconditionError
from .sgd_engine import StepSchedule

INTEGER_SNAP_TOL = 1e-9

# chunk size (in matrix elements) for mode-by-step tables
_CHUNK_ELEMS = 4_000_000


@dataclass(frozen=True)
class RatePlan:
    """Rate region for n ~ d^gamma with smoothness s.

    p is the largest polynomial degree the sample budget resolves:
    p = ceil(gamma/(s+1)) - 1, with gamma/(s+1) snapped to the nearest integer
    within 1e-9 first.  boundary_integer marks that snap; there the ceil-based
    and floor-based definitions of p disagree and the ceil form is used.
    """

    gamma: float
    s: float
    p: int
    region: str  # "i" or "ii"
    exponent_d: float
    exponent_n: float
    eta0_rule: dict
    boundary_integer: bool = False


def classify_rate(gamma: float, s: float) -> RatePlan:
    """Region and predicted excess-risk exponents for (gamma, s)."""
    if gamma <= 0 or s <= 0:
        raise ValueError(f"gamma and s must be > 0, got gamma={gamma}, s={s}")
    q = gamma / (s + 1.0)
    q_int = round(q)
    boundary = q_int >= 1 and abs(q - q_int) <= INTEGER_SNAP_TOL * max(1.0, abs(q))
    p = q_int - 1 if boundary else math.ceil(q) - 1
    # region (i): gamma in (ps+p, ps+p+s]; region (ii): gamma in (ps+p+s, (p+1)(s+1)]
    region = "i" if gamma <= p * s + p + s else "ii"
    exponent_d = (p - gamma) if region == "i" else -(p + 1) * s
    alt = -min(gamma - p, s * (p + 1))
    if not math.isclose(exponent_d, alt, rel_tol=1e-12, abs_tol=1e-12):
        raise AssertionError(f"exponent forms disagree: {exponent_d} vs {alt}")
    rule = {
        "dec": f"c * d**({p - gamma}) * log2(n) * ln(d)",
        "avg": f"c * d**({p - gamma + s / 2.0})" if p >= 1 else f"c * d**({-gamma / 2.0})",
        "asymptotic": f"c * n**((1 - {s}*(d+1)) / ({s}*(d+1) + d))",
    }
    return RatePlan(
        gamma=float(gamma),
        s=float(s),
        p=p,
        region=region,
        exponent_d=float(exponent_d),
        exponent_n=float(exponent_d / gamma),
        eta0_rule=rule,
        boundary_integer=boundary,
    )


def recommend_eta0(
    plan: RatePlan, kind: str, d: int, n: int, c: float = 1.0, cap: float = math.inf
) -> float:
    """Recommended initial step size, always min-ed with the caller's cap.

    kind "dec"        -> c * d^(p-gamma) * log2(n) * ln(d)
    kind "avg"        -> c * d^(p-gamma+s/2) if p >= 1 else c * d^(-gamma/2)
    kind "asymptotic" -> c * n^((1-s(d+1)) / (s(d+1)+d))
    """
    if c <= 0:
        raise ValueError("c must be > 0")
    if cap <= 0:
        raise ValueError("cap must be > 0")
    if kind == "dec":
        if d < 2 or n < 2:
            raise ValueError("dec rule needs d >= 2 and n >= 2")
        raw = c * d ** (plan.p - plan.gamma) * math.log2(n) * math.log(d)
    elif kind == "avg":
        if d < 1:
            raise ValueError("avg rule needs d >= 1")
        exp = plan.p - plan.gamma + plan.s / 2.0 if plan.p >= 1 else -plan.gamma / 2.0
        raw = c * d**exp
    elif kind == "asymptotic":
        if d < 1 or n < 1:
            raise ValueError("asymptotic rule needs d >= 1 and n >= 1")
        raw = c * n ** ((1.0 - plan.s * (d + 1)) / (plan.s * (d + 1) + d))
    else:
        raise ValueError(f"unknown schedule kind {kind!r}")
    value = min(raw, cap)
    if value <= 0:
        raise ValueError(f"recommended step size is nonpositive ({value})")
    return float(value)


def minimax_rate_highdim(gamma: float, s: float, d: int) -> float:
    """d^(exponent_d) with constant 1."""
    return float(d) ** classify_rate(gamma, s).exponent_d


def minimax_rate_asymptotic(s: float, d: int, n: int) -> float:
    """n^(-s(d+1)/(s(d+1)+d)) with constant 1."""
    if s <= 0 or d < 1 or n < 1:
        raise ValueError("need s > 0, d >= 1, n >= 1")
    return float(n) ** (-(s * (d + 1)) / (s * (d + 1) + d))


@dataclass(frozen=True, eq=False)
class DiagonalModel:
    """Explicit spectrum lambda_i > 0 (nonincreasing), residual coefficients
    theta_i of (initial - truth) in the eigenbasis, and noise level sigma."""

    lambdas: np.ndarray
    theta: np.ndarray
    sigma: float

    def __post_init__(self):
        lam = np.asarray(self.lambdas, dtype=float)
        th = np.asarray(self.theta, dtype=float)
        object.__setattr__(self, "lambdas", lam)
        object.__setattr__(self, "theta", th)
        if lam.ndim != 1 or th.shape != lam.shape:
            raise ValueError("lambdas and theta must be 1-d arrays of equal length")
        if len(lam) == 0:
            raise ValueError("model must have at least one mode")
        if np.any(lam <= 0):
            raise ValueError("eigenvalues must be positive")
        if np.any(np.diff(lam) > 0):
            raise ValueError("eigenvalues must be nonincreasing")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")

    @property
    def lambda1(self) -> float:
        return float(self.lambdas[0])

    def residual_norm_sq(self) -> float:
        return float(np.sum(self.theta**2))

    def interpolation_norm_sq(self, s: float) -> float:
        """sum theta_i^2 lambda_i^(1-s), the squared smoothness-s seminorm."""
        # overflow handled explicitly below, so silence the intermediate warning
        with np.errstate(divide="ignore", over="ignore"):
            val = float(np.sum(self.theta**2 * self.lambdas ** (1.0 - s)))
        if not math.isfinite(val):
            raise PreconditionError(f"interpolation norm diverges for s={s}")
        return val


def _check_eta_cap(eta0: float, model: DiagonalModel, limit: float, what: str):
    if eta0 <= 0:
        raise PreconditionError("step size must be > 0")
    if eta0 > limit * (1.0 + 1e-12):
        raise PreconditionError(f"eta0={eta0} exceeds {what}={limit}; bound formulas do not apply")


def pop_bias_exact(model: DiagonalModel, schedule: StepSchedule) -> float:
    """sum_i lambda_i theta_i^2 prod_t (1 - eta_t lambda_i)^2, exactly."""
    _check_eta_cap(schedule.eta0, model, 1.0 / model.lambda1, "1/lambda_1")
    etas = schedule.step_sizes()
    if etas.size == 0:
        return float(np.sum(model.lambdas * model.theta**2))
    lam = model.lambdas
    total = np.zeros(len(lam))
    chunk = max(1, _CHUNK_ELEMS // etas.size)
    with np.errstate(divide="ignore"):
        for lo in range(0, len(lam), chunk):
            hi = min(lo + chunk, len(lam))
            # eta*lambda may sit a hair above 1 (cap slack); the true factor
            # magnitude is then <= 1e-12 per step, indistinguishable from 0
            x = np.minimum(np.outer(lam[lo:hi], etas), 1.0)
            total[lo:hi] = np.log1p(-x).sum(axis=1)
    return float(np.sum(lam * model.theta**2 * np.exp(2.0 * total)))


def pop_variance_exact(model: DiagonalModel, schedule: StepSchedule) -> float:
    """sigma^2 sum_k lambda_k^2 sum_i eta_i^2 prod_{j>i} (1 - eta_j lambda_k)^2."""
    _check_eta_cap(schedule.eta0, model, 1.0 / model.lambda1, "1/lambda_1")
    if model.sigma == 0:
        return 0.0
    etas = schedule.step_sizes()
    n = etas.size
    if n == 0:
        return 0.0
    lam = model.lambdas
    eta_sq = etas**2
    per_mode = np.zeros(len(lam))
    chunk = max(1, _CHUNK_ELEMS // n)
    for lo in range(0, len(lam), chunk):
        hi = min(lo + chunk, len(lam))
        q = 1.0 - lam[lo:hi, None] * etas[None, :]
        # suffix products prod_{j>i} q_j via a reversed cumulative product
        cp = np.cumprod(q[:, ::-1], axis=1)
        suffix = np.ones_like(q)
        if n > 1:
            suffix[:, : n - 1] = cp[:, n - 2 :: -1]
        per_mode[lo:hi] = (eta_sq[None, :] * suffix**2).sum(axis=1)
    return float(model.sigma**2 * np.sum(lam**2 * per_mode))


def avg_pop_bias_exact(model: DiagonalModel, eta0: float, n: int) -> float:
    """Exact population bias of the averaged output (1/n) sum_{t<n} f_t.

    Per mode: (theta^2 / (n^2 eta0^2 lambda)) * (1 - (1-eta0 lambda)^n)^2.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    _check_eta_cap(eta0, model, 1.0 / model.lambda1, "1/lambda_1")
    x = np.minimum(eta0 * model.lambdas, 1.0)  # cap slack; see pop_bias_exact
    with np.errstate(divide="ignore"):
        r = -np.expm1(n * np.log1p(-x))  # 1 - (1-x)^n
    return float(np.sum(model.theta**2 * r**2 / (model.lambdas * (n * eta0) ** 2)))


def avg_pop_variance_exact(model: DiagonalModel, eta0: float, n: int) -> float:
    """Exact population variance of the averaged output.

    Per mode: (sigma^2/n^2) sum_{u=1}^{n-1} (1 - (1-eta0 lambda)^u)^2, summed
    in closed form.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    _check_eta_cap(eta0, model, 1.0 / model.lambda1, "1/lambda_1")
    if model.sigma == 0 or n == 1:
        return 0.0
    x = eta0 * model.lambdas
    q = 1.0 - x
    with np.errstate(divide="ignore"):
        log_q = np.log1p(-np.minimum(x, 1.0))  # cap slack; see pop_bias_exact
        one_minus_qn1 = -np.expm1((n - 1) * log_q)
        one_minus_q2n2 = -np.expm1(2 * (n - 1) * log_q)
    s1 = q * one_minus_qn1 / x  # sum_{u=1}^{n-1} q^u
    s2 = q**2 * one_minus_q2n2 / (x * (2.0 - x))  # sum q^{2u}
    per_mode = (n - 1) - 2.0 * s1 + s2
    return float(model.sigma**2 / n**2 * np.sum(per_mode))


def _tail_sums_squared(lam: np.ndarray) -> np.ndarray:
    """tails[k] = sum_{i>k} lam_i^2 for k = 0..len (1-based k*)."""
    sq = lam**2
    tails = np.zeros(len(lam) + 1)
    tails[:-1] = sq[::-1].cumsum()[::-1]
    return tails


def dec_upper_bound(
    model: DiagonalModel,
    s: float,
    eta0: float,
    n: int,
    kappa2: float,
    k_star: int | None = None,
) -> float:
    """Risk bound for the final iterate under the halving schedule.

    4 (s/4e)^s (log2 n / (n eta0))^s B_s
      + 4 (sigma^2 + ||theta||^2 kappa^2 + eta0 sigma^2 kappa^2 / (2 - eta0 kappa^2))
          * ((16 log2^2 n / e^2 + eta0^2 / (16 log2 n)) k*/n + sum_{k>k*} n eta0^2 lambda_k^2)

    with B_s the squared smoothness-s seminorm; minimized over k* in 1..len
    when k_star is omitted.  Requires eta0 <= min{2/kappa^2, 1/lambda_1} and
    n >= 2.
    """
    if s <= 0:
        raise PreconditionError("s must be > 0")
    if n < 2:
        raise PreconditionError("bound needs n >= 2 (log2 n > 0)")
    _check_eta_cap(eta0, model, min(2.0 / kappa2, 1.0 / model.lambda1), "min{2/kappa2, 1/lambda_1}")
    if 2.0 - eta0 * kappa2 <= 0:
        raise PreconditionError("eta0 must be strictly below 2/kappa2")
    log2n = math.log2(n)
    b_s = model.interpolation_norm_sq(s)
    bias = 4.0 * (s / (4.0 * math.e)) ** s * (log2n / (n * eta0)) ** s * b_s
    noise_factor = 4.0 * (
        model.sigma**2
        + model.residual_norm_sq() * kappa2
        + eta0 * model.sigma**2 * kappa2 / (2.0 - eta0 * kappa2)
    )
    head_coef = 16.0 * log2n**2 / math.e**2 + eta0**2 / (16.0 * log2n)
    tails = _tail_sums_squared(model.lambdas)
    ks = np.arange(1, len(model.lambdas) + 1)
    variants = head_coef * ks / n + n * eta0**2 * tails[1:]
    if k_star is None:
        var_term = float(variants.min())
    else:
        if not 1 <= k_star <= len(model.lambdas):
            raise ValueError(f"k_star={k_star} outside 1..{len(model.lambdas)}")
        var_term = float(variants[k_star - 1])
    return bias + noise_factor * var_term


def avg_upper_bound(
    model: DiagonalModel,
    s: float,
    eta0: float,
    n: int,
    kappa2: float,
    k_star: int | None = None,
) -> float:
    """Risk bound for the averaged output under the constant schedule.

    4 n^{-min(s,2)} eta0^{-s} B_s + 4 sigma^2 W + 4 (2 kappa^2/(1-eta0 kappa^2))
    n^{-min(s,1)} eta0^{1-s} B_s + 4 (eta0 sigma^2 kappa^2/(2-eta0 kappa^2)) W,
    W = k*/n + (1/3) sum_{k>k*} n eta0^2 lambda_k^2, minimized over k* when
    omitted.  Requires eta0 kappa^2 < 1 and eta0 <= 1/lambda_1.
    """
    if s <= 0:
        raise PreconditionError("s must be > 0")
    if n < 1:
        raise PreconditionError("n must be >= 1")
    if eta0 * kappa2 >= 1.0:
        raise PreconditionError(f"eta0 * kappa2 = {eta0 * kappa2} must be < 1")
    _check_eta_cap(eta0, model, 1.0 / model.lambda1, "1/lambda_1")
    b_s = model.interpolation_norm_sq(s)
    tails = _tail_sums_squared(model.lambdas)
    ks = np.arange(1, len(model.lambdas) + 1)
    w = ks / n + n * eta0**2 * tails[1:] / 3.0
    if k_star is None:
        w_val = float(w.min())
    else:
        if not 1 <= k_star <= len(model.lambdas):
            raise ValueError(f"k_star={k_star} outside 1..{len(model.lambdas)}")
        w_val = float(w[k_star - 1])
    sigma2 = model.sigma**2
    return (
        4.0 * n ** (-min(s, 2.0)) * eta0 ** (-s) * b_s
        + 4.0 * sigma2 * w_val
        + 4.0 * (2.0 * kappa2 / (1.0 - eta0 * kappa2)) * n ** (-min(s, 1.0)) * eta0 ** (1.0 - s) * b_s
        + 4.0 * (eta0 * sigma2 * kappa2 / (2.0 - eta0 * kappa2)) * w_val
    )


def avg_lower_bound(model: DiagonalModel, s: float, eta0: float, n: int) -> float:
    """Matching lower bound for the averaged output.

    (1/(n^2 eta0^s)) max_i {(1-(1-lambda_i eta0)^n)^2 (lambda_i eta0)^{s-2}} B_s
      + sigma^2 (k*/(16 n) + (1/64) sum_{i>k*} n eta0^2 lambda_i^2),
    k* = max{k : eta0 lambda_k >= 1/n}.
    """
    if s <= 0:
        raise PreconditionError("s must be > 0")
    if n < 1:
        raise PreconditionError("n must be >= 1")
    _check_eta_cap(eta0, model, 1.0 / model.lambda1, "1/lambda_1")
    x = eta0 * model.lambdas
    with np.errstate(divide="ignore"):
        r = -np.expm1(n * np.log1p(-np.minimum(x, 1.0)))  # cap slack; see pop_bias_exact
        best = float(np.max(r**2 * x ** (s - 2.0)))
    b_s = model.interpolation_norm_sq(s)
    k_star = int(np.searchsorted(-x, -1.0 / n, side="right"))
    tail = float(np.square(model.lambdas[k_star:]).sum())
    noise = model.sigma**2 * (k_star / (16.0 * n) + n * eta0**2 * tail / 64.0)
    return best * b_s / (n**2 * eta0**s) + noise
