"""Command-line front end.

Subcommands:
  spectrum   compute a kernel's eigenvalues on one sphere, write CSV
  sweep      run a learning-curve sweep from a JSON config
  run        run a single (n, seed) cell and dump the fitted model
  theory     rate classification, step-size rules, and risk bounds as JSON
  verify     internal consistency batteries (quick or full)

Relative output paths are resolved against SPHERESGD_OUT_DIR when it is set.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .. import _core
from ..errors import ConfigError, NumericalFailureError, PreconditionError
from ..sgd_engine import ExpDecaySchedule
from ..spectral import compute_spectrum
from ..theory_rates import (
    DiagonalModel,
    avg_lower_bound,
    avg_pop_bias_exact,
    avg_pop_variance_exact,
    avg_upper_bound,
    classify_rate,
    dec_upper_bound,
    minimax_rate_asymptotic,
    minimax_rate_highdim,
    pop_bias_exact,
    pop_variance_exact,
    recommend_eta0,
)
from .config import ExperimentConfig, kernel_from_dict, kernel_to_dict
from .runner import run_model_dump, run_sweep
from .verify import format_report, run_verify


def _resolve_out(path: str | None) -> str | None:
    if path is None or path == "-" or os.path.isabs(path):
        return path
    prefix = os.environ.get("SPHERESGD_OUT_DIR")
    return os.path.join(prefix, path) if prefix else path


def _parse_kernel(text: str):
    """JSON dict, or the shorthands 'linear', 'ntk:DEPTH', 'power:a0,a1,...'."""
    text = text.strip()
    if text.startswith("{"):
        return kernel_from_dict(json.loads(text))
    if text == "linear":
        return kernel_from_dict({"kind": "linear"})
    if text.startswith("ntk:"):
        return kernel_from_dict({"kind": "ntk", "depth": int(text[4:])})
    if text.startswith("power:"):
        coeffs = [float(v) for v in text[6:].split(",")]
        return kernel_from_dict({"kind": "power_series", "coeffs": coeffs})
    raise ConfigError(f"cannot parse kernel {text!r}; use JSON, 'linear', 'ntk:D' or 'power:a0,a1,...'")


def _open_out(path: str | None):
    if path is None or path == "-":
        return sys.stdout, False
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    return open(path, "w"), True


# ---------------------------------------------------------------- spectrum


def cmd_spectrum(args) -> int:
    kernel = _parse_kernel(args.kernel)
    prof = compute_spectrum(
        kernel,
        args.d,
        args.max_degree,
        quad_nodes=args.quad_nodes,
        lambda_len=args.lambda_len,
    )
    counts = prof.multiplicities()
    cumulative = np.cumsum([m * float(c) for (_, m), c in zip(prof.mu, counts)]) / prof.phi_at_one
    header = [
        f"# kernel: {json.dumps(kernel_to_dict(kernel))}",
        f"# d: {prof.d}",
        f"# convention: {prof.convention}",
        f"# max_degree: {prof.max_degree}",
        f"# quad_nodes: {prof.quad_nodes}",
        f"# phi_at_one: {prof.phi_at_one!r}",
        f"# kernel_trace: {prof.kernel_trace!r}",
        f"# trace_fraction: {prof.trace_fraction!r}",
        f"# total_multiplicity: {prof.total_multiplicity}",
    ]
    fh, close = _open_out(_resolve_out(args.out))
    try:
        fh.write("\n".join(header) + "\n")
        fh.write("k,mu,multiplicity,cumulative_trace_fraction\n")
        for (k, mu), count, frac in zip(prof.mu, counts, cumulative):
            fh.write(f"{k},{mu!r},{count},{float(frac)!r}\n")
    finally:
        if close:
            fh.close()
    lam_out = _resolve_out(args.lambda_out)
    if lam_out is not None:
        fh, close = _open_out(lam_out)
        try:
            fh.write("\n".join(header) + "\n")
            fh.write(f"# stored: {len(prof.lambda_flat)}\n")
            fh.write("rank,lambda\n")
            for rank, lam in enumerate(prof.lambda_flat, start=1):
                fh.write(f"{rank},{float(lam)!r}\n")
        finally:
            if close:
                fh.close()
    if args.out not in (None, "-"):
        print(f"wrote {args.out}" + (f" and {args.lambda_out}" if args.lambda_out else ""))
    return 0


def _read_spectrum_csv(path: str):
    """Parse the '#'-header CSV written by cmd_spectrum."""
    meta: dict = {}
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].partition(":")
                meta[key.strip()] = value.strip()
            elif line[0].isdigit():
                k, mu, count, _ = line.split(",")
                rows.append((int(k), float(mu), int(count)))
    if not rows:
        raise ConfigError(f"{path} holds no spectrum rows")
    if "d" not in meta or "phi_at_one" not in meta:
        raise ConfigError(f"{path} is missing '# d:' / '# phi_at_one:' headers")
    return meta, rows


# ---------------------------------------------------------------- sweep / run


def cmd_sweep(args) -> int:
    config = ExperimentConfig.load(args.config)
    out = _resolve_out(args.out if args.out is not None else config.out)
    report, rows = run_sweep(config, threads=args.threads, out=out, master_seed=args.master_seed)
    for n, d, est in report.points:
        print(f"n={n:>7}  d={d:>4}  excess_risk={est.mean:.6e}  stderr={est.stderr:.2e}")
    print(report.summary())
    if out is not None:
        print(f"wrote {out} and {out}.meta.json")
    return 0


def cmd_run(args) -> int:
    config = ExperimentConfig.load(args.config)
    out = _resolve_out(args.out)
    run_model_dump(config, args.n, args.seed, out, master_seed=args.master_seed)
    print(f"wrote {out}")
    return 0


# ---------------------------------------------------------------- theory


def _flatten_rows(rows, cap: int) -> np.ndarray:
    """Nonincreasing eigenvalue list from (degree, mu, multiplicity) rows."""
    order = sorted(rows, key=lambda r: -r[1])
    out = []
    for _, mu, count in order:
        if len(out) >= cap:
            break
        if mu <= 0.0:
            continue  # parity zeros carry no mass and break lambda^(s-1) scaling
        out.extend([mu] * min(count, cap - len(out)))
    if not out:
        raise ConfigError("spectrum has no positive eigenvalues")
    return np.asarray(out)


def cmd_theory(args) -> int:
    plan = classify_rate(args.gamma, args.s)
    result: dict = {
        "rate_plan": {
            "gamma": plan.gamma,
            "s": plan.s,
            "p": plan.p,
            "region": plan.region,
            "exponent_d": plan.exponent_d,
            "exponent_n": plan.exponent_n,
            "boundary_integer": plan.boundary_integer,
            "eta0_rule": plan.eta0_rule,
        }
    }
    spectrum = None
    if args.spectrum is not None:
        meta, rows = _read_spectrum_csv(args.spectrum)
        spectrum = (meta, rows)
        if args.d is None:
            args.d = int(meta["d"])
    if args.d is not None:
        d = args.d
        result["minimax"] = {"d": d, "highdim_risk": minimax_rate_highdim(args.gamma, args.s, d)}
        if args.n is not None:
            result["minimax"]["asymptotic_risk"] = minimax_rate_asymptotic(args.s, d, args.n)
        if args.n is not None:
            eta = {}
            for kind in ("dec", "avg", "asymptotic"):
                try:
                    eta[kind] = recommend_eta0(plan, kind, d, args.n, c=args.c)
                except ValueError as exc:
                    eta[kind] = f"unavailable: {exc}"
            result["eta0"] = eta
    if spectrum is not None:
        if args.n is None:
            raise ConfigError("--spectrum needs --n to evaluate bounds")
        meta, rows = spectrum
        n = args.n
        lam = _flatten_rows(rows, cap=args.lambda_len if args.lambda_len else 10 * n)
        phi1 = float(meta["phi_at_one"])
        kappa2 = phi1
        cap = min(1.0 / kappa2, 1.0 / float(lam[0]))
        if args.eta0 is not None:
            eta0 = args.eta0
        else:
            eta0 = recommend_eta0(plan, args.schedule, int(meta["d"]), n, c=args.c, cap=cap)
        eta0 = min(eta0, cap)
        # canonical source: theta_i = lambda_i^((s-1)/2) normalized so the
        # smoothness-s seminorm is exactly 1
        weights = lam ** (args.s - 1.0)
        theta = np.sqrt(weights / weights.sum())
        model = DiagonalModel(lam, theta, sigma=args.sigma)
        k_star = int(np.sum(lam >= 1.0 / (eta0 * n)))
        bounds: dict = {
            "n": n,
            "eta0": eta0,
            "sigma": args.sigma,
            "kappa2": kappa2,
            "modes": len(lam),
            "k_star": k_star,
            "smoothness_seminorm_sq": 1.0,
        }
        def _try(fn):
            try:
                return fn()
            except PreconditionError as exc:
                return f"unavailable: {exc}"

        dec_sched = ExpDecaySchedule(eta0, n)
        bounds["dec_exact"] = _try(
            lambda: pop_bias_exact(model, dec_sched) + pop_variance_exact(model, dec_sched)
        )
        bounds["dec_upper"] = _try(lambda: dec_upper_bound(model, args.s, eta0, n, kappa2))
        bounds["avg_exact"] = _try(
            lambda: avg_pop_bias_exact(model, eta0, n) + avg_pop_variance_exact(model, eta0, n)
        )
        bounds["avg_upper"] = _try(lambda: avg_upper_bound(model, args.s, eta0, n, kappa2))
        bounds["avg_lower"] = _try(lambda: avg_lower_bound(model, args.s, eta0, n))
        result["bounds"] = bounds
    fh, close = _open_out(_resolve_out(args.out))
    try:
        json.dump(result, fh, indent=2)
        fh.write("\n")
    finally:
        if close:
            fh.close()
    return 0


# ---------------------------------------------------------------- verify


def cmd_verify(args) -> int:
    results = run_verify(args.level)
    print(f"backend: {_core.BACKEND}")
    print(format_report(results))
    return 0 if all(r.passed or r.info_only for r in results) else 1


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spheresgd",
        description="single-pass kernel SGD on the sphere: spectra, sweeps, rate theory",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="kernel eigenvalues on S^d")
    p.add_argument("--kernel", required=True, help="JSON, 'linear', 'ntk:D', or 'power:a0,a1,...'")
    p.add_argument("--d", type=int, required=True, help="sphere dimension (ambient d+1)")
    p.add_argument("--max-degree", type=int, default=12)
    p.add_argument("--quad-nodes", type=int, default=None)
    p.add_argument("--lambda-len", type=int, default=100_000)
    p.add_argument("--out", default=None, help="CSV path ('-' or omitted: stdout)")
    p.add_argument("--lambda-out", default=None, help="optional flattened-eigenvalue CSV")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("sweep", help="learning-curve sweep from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None, help="CSV path (default: config 'out' field)")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--master-seed", type=int, default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("run", help="single cell of a sweep; dumps the fitted model")
    p.add_argument("--config", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--master-seed", type=int, default=None)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("theory", help="rate plan, step-size rules, and bounds as JSON")
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--c", type=float, default=1.0, help="constant in the step-size rules")
    p.add_argument("--schedule", choices=("dec", "avg", "asymptotic"), default="dec")
    p.add_argument("--spectrum", default=None, help="spectrum CSV for bound evaluation")
    p.add_argument("--eta0", type=float, default=None, help="override the recommended step size")
    p.add_argument("--sigma", type=float, default=1.0, help="noise level for bound evaluation")
    p.add_argument("--lambda-len", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_theory)

    p = sub.add_parser("verify", help="internal consistency batteries")
    p.add_argument("--level", choices=("quick", "full"), default="quick")
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, NumericalFailureError, FileNotFoundError) as exc:
        # ValueError covers ConfigError and PreconditionError plus plain argument
        # screening (e.g. a run cell outside the configured grid)
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
