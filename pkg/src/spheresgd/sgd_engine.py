"""Single-pass kernel SGD in coefficient form.

The function after t steps is f_t = sum_{j<=t} a_j K(x_j, .) with f_0 = 0 and

    a_t = -eta_t (f_{t-1}(x_t) - y_t).

Two step-size schedules: ``ExpDecaySchedule`` halves eta across
ceil(log2 n) stages of length ceil(n / log2 n) and outputs the final iterate;
``ConstantAvgSchedule`` keeps eta fixed and pairs with the averaged output
f_bar_n = (1/n) sum_{t=0}^{n-1} f_t, which is the coefficient rescale
a_j <- a_j (n-j)/n.  Averaging that includes f_n instead (and drops f_0) sits
behind the ``average_includes_final`` flag.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from . import _core
from .dot_kernels import KernelSpec, NtkKernel, PowerSeriesKernel, gram_row, kernel_eval
from .errors import DataExhaustedError, InvalidStateError


@dataclass(frozen=True)
class ExpDecaySchedule:
    """eta_t = eta0 / 2^{stage-1}; stage length m = ceil(n / log2 n).

    n = 1 is a documented edge case: a single stage with eta_1 = eta0.
    """

    eta0: float
    n: int

    def __post_init__(self):
        if self.eta0 <= 0:
            raise ValueError("eta0 must be > 0")
        if self.n < 0:
            raise ValueError("horizon must be >= 0")

    @property
    def stage_length(self) -> int:
        if self.n <= 1:
            return self.n
        return math.ceil(self.n / math.log2(self.n))

    @property
    def num_stages(self) -> int:
        if self.n == 0:
            return 0
        if self.n == 1:
            return 1
        return math.ceil(math.log2(self.n))

    def step_size_at(self, t: int) -> float:
        if not 1 <= t <= self.n:
            raise ValueError(f"step index {t} outside 1..{self.n}")
        stage = (t - 1) // self.stage_length  # 0-based
        return self.eta0 / (2.0**stage)

    def step_sizes(self) -> np.ndarray:
        if self.n == 0:
            return np.zeros(0)
        stage = np.arange(self.n) // max(self.stage_length, 1)
        return self.eta0 / (2.0**stage)


@dataclass(frozen=True)
class ConstantAvgSchedule:
    """eta_t = eta0 for all t; intended to pair with the averaged output."""

    eta0: float
    n: int

    def __post_init__(self):
        if self.eta0 <= 0:
            raise ValueError("eta0 must be > 0")
        if self.n < 0:
            raise ValueError("horizon must be >= 0")

    def step_size_at(self, t: int) -> float:
        if not 1 <= t <= self.n:
            raise ValueError(f"step index {t} outside 1..{self.n}")
        return self.eta0

    def step_sizes(self) -> np.ndarray:
        return np.full(self.n, self.eta0)


StepSchedule = Union[ExpDecaySchedule, ConstantAvgSchedule]


def step_size_at(schedule: StepSchedule, t: int) -> float:
    return schedule.step_size_at(t)


@dataclass(frozen=True, eq=False)
class SgdState:
    """Support points, coefficients, and step counter of a (possibly partial) run."""

    kernel: KernelSpec
    schedule: StepSchedule
    support: np.ndarray  # (t, dim)
    coeffs: np.ndarray  # (t,)
    t: int

    def __post_init__(self):
        if self.support.ndim != 2 or self.coeffs.shape != (self.support.shape[0],):
            raise ValueError("support must be (t, dim) and coeffs (t,)")
        if self.t != self.support.shape[0]:
            raise ValueError("step counter disagrees with support size")

    @classmethod
    def empty(cls, kernel: KernelSpec, schedule: StepSchedule, dim: int) -> "SgdState":
        return cls(kernel, schedule, np.zeros((0, dim)), np.zeros(0), 0)

    @property
    def dim(self) -> int:
        return self.support.shape[1]


def sgd_step(state: SgdState, x_t, y_t: float) -> SgdState:
    """One update; returns a new state (states are immutable)."""
    if state.t + 1 > state.schedule.n:
        raise InvalidStateError(f"horizon {state.schedule.n} exceeded at step {state.t + 1}")
    x_t = np.asarray(x_t, dtype=float)
    if x_t.shape != (state.dim,):
        raise ValueError(f"point has shape {x_t.shape}, expected ({state.dim},)")
    pred = float(state.coeffs @ gram_row(state.kernel, state.support, x_t)) if state.t else 0.0
    eta = state.schedule.step_size_at(state.t + 1)
    a_new = -eta * (pred - float(y_t))
    return SgdState(
        kernel=state.kernel,
        schedule=state.schedule,
        support=np.vstack([state.support, x_t[None, :]]),
        coeffs=np.append(state.coeffs, a_new),
        t=state.t + 1,
    )


def _kernel_dispatch(kernel: KernelSpec):
    if isinstance(kernel, NtkKernel):
        return _core.KIND_NTK, kernel.depth, np.zeros(0)
    if isinstance(kernel, PowerSeriesKernel):
        return _core.KIND_POWER, 0, np.asarray(kernel.coeffs, dtype=float)
    raise TypeError(f"not a kernel spec: {kernel!r}")


def _materialize(data, n: int):
    if isinstance(data, tuple) and len(data) == 2 and not np.isscalar(data[0]):
        X = np.asarray(data[0], dtype=float)
        y = np.asarray(data[1], dtype=float)
        if X.ndim != 2 or y.shape != (X.shape[0],):
            raise ValueError("array data must be (X of shape (n, dim), y of shape (n,))")
        if X.shape[0] < n:
            raise DataExhaustedError(f"stream yielded {X.shape[0]} pairs, horizon is {n}")
        if X.shape[0] > n:
            raise ValueError(f"stream yielded {X.shape[0]} pairs, horizon is {n}")
        return X, y
    xs, ys = [], []
    it = iter(data)
    for _ in range(n):
        try:
            x, yv = next(it)
        except StopIteration:
            raise DataExhaustedError(f"stream yielded {len(xs)} pairs, horizon is {n}") from None
        xs.append(np.asarray(x, dtype=float))
        ys.append(float(yv))
    try:
        next(it)
    except StopIteration:
        pass
    else:
        raise ValueError(f"stream yielded more than the horizon {n}")
    X = np.asarray(xs, dtype=float) if xs else np.zeros((0, 0))
    return X, np.asarray(ys, dtype=float)


def run_single_pass(
    kernel: KernelSpec,
    schedule: StepSchedule,
    data,
    output_mode: str = "final",
    average_includes_final: bool = False,
) -> SgdState:
    """Consume exactly schedule.n pairs and return the output state.

    ``data`` is either a tuple (X, y) of arrays or an iterable of (x, y)
    pairs.  output_mode "final" returns the raw coefficients of f_n;
    "averaged" rescales them to represent (1/n) sum_{t=0}^{n-1} f_t
    (or f_1..f_n with average_includes_final=True).
    """
    if output_mode not in ("final", "averaged"):
        raise ValueError(f"unknown output_mode {output_mode!r}")
    n = schedule.n
    X, y = _materialize(data, n)
    kind, depth, coeffs = _kernel_dispatch(kernel)
    a = _core.run_sgd(np.ascontiguousarray(X), y, schedule.step_sizes(), kind, depth, coeffs)
    if output_mode == "averaged" and n > 0:
        j = np.arange(1, n + 1, dtype=float)
        weights = (n - j + 1) / n if average_includes_final else (n - j) / n
        a = a * weights
    return SgdState(kernel=kernel, schedule=schedule, support=X, coeffs=a, t=n)


def predict(state: SgdState, x):
    """f(x) for a single point (dim,) -> float, or a batch (m, dim) -> (m,)."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        if state.dim and x.shape != (state.dim,):
            raise ValueError(f"point has shape {x.shape}, expected ({state.dim},)")
        if state.t == 0:
            return 0.0
        return float(state.coeffs @ gram_row(state.kernel, state.support, x))
    if x.ndim != 2:
        raise ValueError("x must be a point or a batch of points")
    if state.dim and x.shape[1] != state.dim:
        raise ValueError(f"batch has dim {x.shape[1]}, expected {state.dim}")
    if state.t == 0:
        return np.zeros(x.shape[0])
    out = np.empty(x.shape[0])
    # chunk the (rows, t) kernel block to bound memory; inf coefficients of a
    # diverged run are legal here (flagged downstream), so silence the matmul
    chunk = max(1, int(4_000_000 // max(state.t, 1)))
    with np.errstate(invalid="ignore", over="ignore"):
        for lo in range(0, x.shape[0], chunk):
            hi = min(lo + chunk, x.shape[0])
            dots = x[lo:hi] @ state.support.T
            out[lo:hi] = np.asarray(kernel_eval(state.kernel, dots)) @ state.coeffs
    return out
