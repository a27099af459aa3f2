"""Sweep execution.

For each (n, seed) cell: derive d from n, build the target, pick eta0, run
single-pass SGD, and estimate excess risk on fresh test points.  Emits one CSV
row per cell plus a per-n summary row, fits the learning-curve slope, and
compares it against the predicted exponent.

Determinism: every random stream is an np.random.SeedSequence spawned from the
master seed with a fixed integer path --
    target for (config, n)  : [master, n, 0]
    training points         : [master, n, seed, 1]
    label noise             : [master, n, seed, 2]
    test points             : [master, n, seed, 3]  (or [master, n, 3] when
                              shared_test_points is set)
-- so reruns are byte-identical regardless of --threads.  Timestamps go only
to the JSON sidecar, never the CSV.
"""

from __future__ import annotations

import csv
import datetime
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .. import _core
from ..dot_kernels import kernel_bound
from ..risk_metrics import RateReport, RiskEstimate, excess_risk, fit_slope
from ..sgd_engine import ConstantAvgSchedule, ExpDecaySchedule, SgdState, run_single_pass
from ..spectral import compute_spectrum, effective_dimension
from ..sphere_harmonics import sample_uniform_sphere
from ..synthetic_targets import generate_labels, make_kernel_target, make_source_target
from ..theory_rates import classify_rate, recommend_eta0
from .config import ExperimentConfig, kernel_to_dict

CSV_FIELDS = ["run_id", "gamma", "s", "schedule", "n", "d", "eta0", "seed", "excess_risk", "stderr", "flags"]

DIVERGENCE_FACTOR = 1e6


def _seed_path(master: int, *path) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(master)] + [int(p) for p in path])


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


class _LevelSetup:
    """Everything shared by all seeds at one n."""

    def __init__(self, config: ExperimentConfig, n: int, master: int, plan):
        self.n = n
        self.d = config.d_for(n)
        self.profile = None
        needs_profile = config.target["kind"] == "harmonic_mode" or "rule" in config.eta0
        if needs_profile:
            self.profile = compute_spectrum(
                config.kernel,
                self.d,
                config.max_degree,
                quad_nodes=config.quad_nodes,
                lambda_len=config.lambda_len(),
            )
        target_seed = _seed_path(master, n, 0)
        recipe = config.target
        if recipe["kind"] == "kernel_combination":
            self.target = make_kernel_target(
                config.kernel,
                self.d,
                int(recipe.get("num_anchors", 3)),
                target_seed,
                noise_sigma=config.noise_sigma,
            )
        else:
            self.target = make_source_target(
                self.profile,
                config.s,
                int(recipe.get("degree", 2)),
                target_seed,
                convention=recipe.get("convention"),
                noise_sigma=config.noise_sigma,
            )
        if "value" in config.eta0:
            self.eta0 = float(config.eta0["value"])
            self.eta0_capped = False
        else:
            c = float(config.eta0.get("c", 1.0))
            cap = min(1.0 / kernel_bound(config.kernel), 1.0 / self.profile.lambda1)
            raw = recommend_eta0(plan, config.schedule, self.d, n, c=c, cap=math.inf)
            self.eta0 = recommend_eta0(plan, config.schedule, self.d, n, c=c, cap=cap)
            self.eta0_capped = raw > self.eta0
        self.k_star = (
            effective_dimension(self.profile, self.eta0, n) if self.profile is not None else None
        )

    def schedule(self, config: ExperimentConfig):
        if config.schedule == "dec":
            return ExpDecaySchedule(self.eta0, self.n)
        return ConstantAvgSchedule(self.eta0, self.n)

    def metadata(self) -> dict:
        return {
            "n": self.n,
            "d": self.d,
            "eta0": self.eta0,
            "eta0_capped": self.eta0_capped,
            "k_star": self.k_star,
            "target": self.target.to_metadata(),
        }


def _run_cell(config: ExperimentConfig, setup: _LevelSetup, master: int, seed: int):
    n, d = setup.n, setup.d
    points = sample_uniform_sphere(d, n, _seed_path(master, n, seed, 1))
    labels = generate_labels(setup.target, points, _seed_path(master, n, seed, 2))
    schedule = setup.schedule(config)
    state = run_single_pass(
        config.kernel,
        schedule,
        (points, labels),
        output_mode="averaged" if config.schedule == "avg" else "final",
        average_includes_final=config.average_includes_final,
    )
    if config.shared_test_points:
        test_seed = _seed_path(master, n, 3)
    else:
        test_seed = _seed_path(master, n, seed, 3)
    est = excess_risk(state, setup.target, config.n_test, test_seed)
    zero = SgdState.empty(config.kernel, schedule, d + 1)
    baseline = excess_risk(zero, setup.target, config.n_test, test_seed).mean
    diverged = est.mean > DIVERGENCE_FACTOR * baseline if baseline > 0 else est.mean > 0
    return state, est, baseline, diverged


def run_sweep(config: ExperimentConfig, threads: int = 1, out: str | None = None, master_seed=None):
    """Execute the sweep; returns (RateReport, rows).

    rows is the full CSV content as a list of dicts, per-seed rows first within
    each n, then that n's summary row (seed -1, flag "summary").  When ``out``
    (or config.out) is set the CSV plus an <out>.meta.json sidecar are written.
    """
    master = config.master_seed if master_seed is None else int(master_seed)
    plan = classify_rate(config.gamma, config.s)
    setups = {n: _LevelSetup(config, n, master, plan) for n in config.n_grid}

    cells = [(n, seed) for n in config.n_grid for seed in config.seeds]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = {
                cell: pool.submit(_run_cell, config, setups[cell[0]], master, cell[1])
                for cell in cells
            }
            results = {cell: fut.result() for cell, fut in futures.items()}
    else:
        results = {cell: _run_cell(config, setups[cell[0]], master, cell[1]) for cell in cells}

    rows = []
    points = []
    log_mean_points = []
    for n in config.n_grid:
        setup = setups[n]
        level_flags = ["eta0_capped"] if setup.eta0_capped else []
        means = []
        any_diverged = False
        for seed in config.seeds:
            _, est, _, diverged = results[(n, seed)]
            means.append(est.mean)
            any_diverged = any_diverged or diverged
            flags = level_flags + (["diverged"] if diverged else [])
            rows.append(
                {
                    "run_id": f"n{n}-s{seed}",
                    "gamma": config.gamma,
                    "s": config.s,
                    "schedule": config.schedule,
                    "n": n,
                    "d": setup.d,
                    "eta0": setup.eta0,
                    "seed": seed,
                    "excess_risk": est.mean,
                    "stderr": est.stderr,
                    "flags": ";".join(flags),
                }
            )
        mean_risk = float(np.mean(means))
        if math.isfinite(mean_risk) and len(means) > 1:
            spread = float(np.std(means, ddof=1) / math.sqrt(len(means)))
        elif math.isfinite(mean_risk):
            spread = 0.0
        else:
            mean_risk, spread = math.inf, math.inf
        summary = RiskEstimate(mean=mean_risk, stderr=spread, n_test=config.n_test, seed=-1)
        points.append((n, setup.d, summary))
        if all(m > 0 and math.isfinite(m) for m in means):
            log_mean_points.append((n, float(np.mean(np.log(means)))))
        flags = ["summary"] + level_flags + (["diverged"] if any_diverged else [])
        rows.append(
            {
                "run_id": f"n{n}-mean",
                "gamma": config.gamma,
                "s": config.s,
                "schedule": config.schedule,
                "n": n,
                "d": setup.d,
                "eta0": setup.eta0,
                "seed": -1,
                "excess_risk": mean_risk,
                "stderr": spread,
                "flags": ";".join(flags),
            }
        )

    # fit only cells with usable risk; diverged levels would poison the regression
    usable = [(n, est.mean) for n, _, est in points if math.isfinite(est.mean) and est.mean > 0]
    fitted = fit_slope(usable) if len(usable) >= 3 else math.nan
    report = RateReport(
        points=tuple(points),
        fitted_slope_n=fitted,
        theoretical_exponent_n=plan.exponent_n,
        tolerance=config.slope_tolerance,
    )

    out_path = out if out is not None else config.out
    if out_path is not None:
        _write_csv(out_path, rows)
        slope_of_log_means = (
            float(np.polyfit(np.log([n for n, _ in log_mean_points]), [v for _, v in log_mean_points], 1)[0])
            if len(log_mean_points) >= 3
            else None
        )
        sidecar = {
            "created_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
            "backend": _core.BACKEND,
            "master_seed": master,
            "config": config.to_dict(),
            "rate_plan": {
                "gamma": plan.gamma,
                "s": plan.s,
                "p": plan.p,
                "region": plan.region,
                "exponent_d": plan.exponent_d,
                "exponent_n": plan.exponent_n,
                "boundary_integer": plan.boundary_integer,
            },
            "per_n": [setups[n].metadata() for n in config.n_grid],
            "slopes": {
                "log_of_mean_risk": report.fitted_slope_n,
                "mean_of_log_risk": slope_of_log_means,
            },
            "report": {
                "fitted_slope_n": report.fitted_slope_n,
                "theoretical_exponent_n": report.theoretical_exponent_n,
                "tolerance": report.tolerance,
                "passed": report.passed,
            },
        }
        with open(out_path + ".meta.json", "w") as fh:
            json.dump(sidecar, fh, indent=2, default=str)
            fh.write("\n")
    return report, rows


def _write_csv(path: str, rows) -> None:
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_FIELDS)
        for row in rows:
            writer.writerow([_fmt(row[field]) for field in CSV_FIELDS])


def run_model_dump(config: ExperimentConfig, n: int, seed: int, out: str, master_seed=None) -> None:
    """Run one (n, seed) cell and dump its coefficients and support points."""
    if n not in config.n_grid:
        raise ValueError(f"n={n} not in the configured grid {config.n_grid}")
    if seed not in config.seeds:
        raise ValueError(f"seed={seed} not in the configured seeds {config.seeds}")
    master = config.master_seed if master_seed is None else int(master_seed)
    plan = classify_rate(config.gamma, config.s)
    setup = _LevelSetup(config, n, master, plan)
    state, est, _, _ = _run_cell(config, setup, master, seed)
    parent = os.path.dirname(os.path.abspath(out))
    os.makedirs(parent, exist_ok=True)
    with open(out, "w", newline="") as fh:
        fh.write(f"# kernel: {json.dumps(kernel_to_dict(config.kernel))}\n")
        fh.write(
            f"# schedule: {config.schedule} eta0={_fmt(state.schedule.eta0)} n={n}"
            f" output={'averaged' if config.schedule == 'avg' else 'final'}\n"
        )
        fh.write(f"# seed: master={master} cell={seed}\n")
        fh.write(f"# excess_risk: {_fmt(est.mean)} stderr={_fmt(est.stderr)}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["j", "coeff"] + [f"x{i}" for i in range(state.dim)])
        for j in range(state.t):
            writer.writerow(
                [j + 1, _fmt(float(state.coeffs[j]))] + [_fmt(float(v)) for v in state.support[j]]
            )
