"""Monte-Carlo excess risk and log-log learning-curve slopes."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .sgd_engine import SgdState, predict
from .sphere_harmonics import sample_uniform_sphere
from .synthetic_targets import TargetSpec, target_eval


@dataclass(frozen=True)
class RiskEstimate:
    """MC estimate of E[(f(x) - f*(x))^2] over fresh uniform points."""

    mean: float
    stderr: float
    n_test: int
    seed: object

    def __post_init__(self):
        if self.mean < 0 or self.stderr < 0:
            raise ValueError("risk mean and stderr must be >= 0")


def excess_risk(model: SgdState, target: TargetSpec, n_test: int, seed) -> RiskEstimate:
    """Excess risk of ``model`` against the exact target; no label noise enters."""
    if n_test < 2:
        raise ValueError("n_test must be >= 2")
    d = model.dim - 1
    points = sample_uniform_sphere(d, n_test, seed)
    residuals_sq = (np.asarray(predict(model, points)) - target_eval(target, points)) ** 2
    if not np.all(np.isfinite(residuals_sq)):
        # diverged model; report infinite risk instead of NaN statistics
        return RiskEstimate(mean=math.inf, stderr=math.inf, n_test=n_test, seed=seed)
    return RiskEstimate(
        mean=float(residuals_sq.mean()),
        stderr=float(residuals_sq.std(ddof=1) / math.sqrt(n_test)),
        n_test=n_test,
        seed=seed,
    )


def fit_slope(points) -> float:
    """OLS slope of log(risk) against log(n) for [(n, risk), ...]."""
    pts = [(float(n), float(r)) for n, r in points]
    if len(pts) < 3:
        raise ValueError("slope fit needs at least 3 points")
    if any(r <= 0 for _, r in pts):
        raise ValueError("all risks must be > 0")
    log_n = np.log([n for n, _ in pts])
    log_r = np.log([r for _, r in pts])
    slope, _ = np.polyfit(log_n, log_r, 1)
    return float(slope)


@dataclass(frozen=True, eq=False)
class RateReport:
    """Fitted learning-curve slope vs the predicted exponent in n."""

    points: tuple  # ((n, d, RiskEstimate), ...)
    fitted_slope_n: float
    theoretical_exponent_n: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return abs(self.fitted_slope_n - self.theoretical_exponent_n) <= self.tolerance

    def summary(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return (
            f"fitted slope {self.fitted_slope_n:+.4f} vs predicted "
            f"{self.theoretical_exponent_n:+.4f} (tol {self.tolerance}): {verdict}"
        )
