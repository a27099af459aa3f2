"""Experiment configuration: a JSON-friendly schema with strict validation.

A config describes one learning-curve sweep: the (gamma, s) scaling, the n
grid and how d follows n, the kernel, the target recipe, the schedule, how
eta0 is chosen, seeds, and output knobs.  See README for a worked example.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from ..dot_kernels import KernelSpec, NtkKernel, PowerSeriesKernel, linear_kernel
from ..errors import ConfigError

SCHEDULE_KINDS = ("dec", "avg")
TARGET_KINDS = ("kernel_combination", "harmonic_mode")


def kernel_from_dict(spec: dict) -> KernelSpec:
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError(f"kernel must be a dict with a 'kind', got {spec!r}")
    kind = spec["kind"]
    if kind == "ntk":
        return NtkKernel(depth=int(spec.get("depth", 2)))
    if kind == "power_series":
        return PowerSeriesKernel(tuple(float(a) for a in spec["coeffs"]))
    if kind == "linear":
        return linear_kernel()
    raise ConfigError(f"unknown kernel kind {kind!r}")


def kernel_to_dict(kernel: KernelSpec) -> dict:
    if isinstance(kernel, NtkKernel):
        return {"kind": "ntk", "depth": kernel.depth}
    if isinstance(kernel, PowerSeriesKernel):
        return {"kind": "power_series", "coeffs": list(kernel.coeffs)}
    raise ConfigError(f"not a kernel spec: {kernel!r}")


@dataclass
class ExperimentConfig:
    gamma: float
    s: float
    n_grid: list
    kernel: KernelSpec
    schedule: str  # "dec" | "avg"
    target: dict  # recipe, see TARGET_KINDS
    eta0: dict  # {"rule": "recommend", "c": ...} or {"value": ...}
    d_rule: object = "power"  # "power" or explicit list aligned with n_grid
    seeds: list = field(default_factory=lambda: [0])
    n_test: int = 1000
    noise_sigma: float = 1.0
    master_seed: int = 0
    max_degree: int = 6
    quad_nodes: int | None = None
    slope_tolerance: float = 0.2
    average_includes_final: bool = False
    shared_test_points: bool = False
    out: str | None = None

    def __post_init__(self):
        if self.gamma <= 0 or self.s <= 0:
            raise ConfigError("gamma and s must be > 0")
        ns = list(self.n_grid)
        if len(ns) == 0 or any(int(n) != n for n in ns):
            raise ConfigError("n_grid must be a nonempty list of integers")
        ns = [int(n) for n in ns]
        if any(b <= a for a, b in zip(ns, ns[1:])):
            raise ConfigError("n_grid must be strictly increasing")
        if ns[0] < 4:
            raise ConfigError("all n must be >= 4 (so log2 n >= 2)")
        self.n_grid = ns
        if self.schedule not in SCHEDULE_KINDS:
            raise ConfigError(f"schedule must be one of {SCHEDULE_KINDS}")
        if not isinstance(self.target, dict) or self.target.get("kind") not in TARGET_KINDS:
            raise ConfigError(f"target.kind must be one of {TARGET_KINDS}")
        if not isinstance(self.eta0, dict) or not ({"rule", "value"} & set(self.eta0)):
            raise ConfigError("eta0 must be {'rule': 'recommend', 'c': ...} or {'value': ...}")
        if "value" in self.eta0 and float(self.eta0["value"]) <= 0:
            raise ConfigError("explicit eta0 must be > 0")
        if isinstance(self.d_rule, str):
            if self.d_rule != "power":
                raise ConfigError("d_rule must be 'power' or an explicit list")
        else:
            ds = [int(d) for d in self.d_rule]
            if len(ds) != len(self.n_grid):
                raise ConfigError("explicit d list must align with n_grid")
            if any(d < 2 for d in ds):
                raise ConfigError("all d must be >= 2")
            self.d_rule = ds
        if not self.seeds:
            raise ConfigError("seeds must be nonempty")
        self.seeds = [int(s) for s in self.seeds]
        if self.n_test < 2:
            raise ConfigError("n_test must be >= 2")
        if self.noise_sigma < 0:
            raise ConfigError("noise_sigma must be >= 0")
        if self.max_degree < 1:
            raise ConfigError("max_degree must be >= 1")
        if self.target["kind"] == "harmonic_mode":
            degree = int(self.target.get("degree", 2))
            if degree > self.max_degree:
                raise ConfigError(f"target degree {degree} exceeds max_degree {self.max_degree}")

    def d_for(self, n: int) -> int:
        """d = max(2, round(n^(1/gamma))) under the power rule."""
        if isinstance(self.d_rule, str):
            return max(2, round(n ** (1.0 / self.gamma)))
        return self.d_rule[self.n_grid.index(n)]

    def lambda_len(self) -> int:
        return 10 * self.n_grid[-1]

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            kwargs = dict(raw)
            kwargs["kernel"] = kernel_from_dict(raw["kernel"])
            return cls(**kwargs)
        except KeyError as exc:
            raise ConfigError(f"missing config key: {exc}") from None
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def load(cls, path: str) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path} is not valid JSON: {exc}") from None
        return cls.from_dict(raw)

    def to_dict(self) -> dict:
        out = {}
        for name in self.__dataclass_fields__:
            val = getattr(self, name)
            out[name] = kernel_to_dict(val) if name == "kernel" else val
        return out
