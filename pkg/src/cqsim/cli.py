"""Command-line interface.

Commands: coeffs, moments, check-tradeoff, check-kernel, evolve, unravel,
compare. Every command writes its artifacts into a run directory with a
manifest (full config text, config hash, package/runtime versions, seed),
so a run is reproducible from the manifest alone.

Exit codes: 0 success, 1 comparison mismatch, 2 configuration/usage error,
3 positivity certificate failed, 4 numerical abort.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .config import RunBundle, materialize, parse_config
from .cq_coeffs import to_oppenheim
from .cq_master import evolve
from .errors import ConfigError, NumericalAbortError, PositivityError
from .kernels import fdr_check, kernel_to_csv
from .positivity import check_markov_cp, check_nonmarkov_kernel, check_tradeoff
from .semi_wigner import write_snapshot
from .unraveling import GaussianInitial, run_ensemble

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_CONFIG = 2
EXIT_CP_FAIL = 3
EXIT_NUMERICAL = 4


def _make_run_dir(args, command: str) -> str:
    out = getattr(args, "out", None)
    if out is None:
        out = os.path.join("runs", f"{command}-{time.strftime('%Y%m%d-%H%M%S')}")
    os.makedirs(out, exist_ok=True)
    return out


def _write_manifest(run_dir: str, command: str, args, cfg_text: str, seed=None) -> None:
    manifest = {
        "command": command,
        "argv": [str(a) for a in sys.argv[1:]],
        "config": cfg_text,
        "config_sha256": hashlib.sha256(cfg_text.encode()).hexdigest(),
        "cqsim_version": __version__,
        "numpy_version": np.__version__,
        "python_version": sys.version.split()[0],
        "seed": seed,
        "created": time.strftime("%Y-%m-%dT%H:%M:%S"),
    }
    with open(os.path.join(run_dir, "manifest.json"), "w") as f:
        json.dump(manifest, f, indent=1)


def _load_bundle(args) -> tuple:
    cfg = parse_config(args.config)
    return materialize(cfg), cfg


def cmd_coeffs(args) -> int:
    bundle, cfg = _load_bundle(args)
    run_dir = _make_run_dir(args, "coeffs")
    _write_manifest(run_dir, "coeffs", args, cfg.text)
    blocks = to_oppenheim(bundle.coeffs)
    payload = bundle.coeffs.to_dict()
    payload["dictionary"] = {
        "D2_00": [[float(x) for x in row] for row in blocks.D2_00],
        "D1_h": [[z.real, z.imag] for z in blocks.d_h],
        "D1_pi": [[z.real, z.imag] for z in blocks.d_pi],
        "drift_h_coeffs": list(blocks.drift_h_coeffs),
        "drift_pi_coeffs": list(blocks.drift_pi_coeffs),
    }
    path = os.path.join(run_dir, "coefficients.json")
    with open(path, "w") as f:
        json.dump(payload, f, indent=1)
    print(json.dumps(payload, indent=1))
    print(f"wrote {path}")
    return EXIT_OK


def cmd_moments(args) -> int:
    bundle, cfg = _load_bundle(args)
    run_dir = _make_run_dir(args, "moments")
    _write_manifest(run_dir, "moments", args, cfg.text)
    path = os.path.join(run_dir, "moments.json")
    with open(path, "w") as f:
        json.dump(bundle.moments.to_dict(), f, indent=1)
    if bundle.kernels:
        for key, kernel in bundle.kernels.items():
            if key != "N33R":
                kernel_to_csv(kernel, os.path.join(run_dir, f"{key}.csv"))
    if bundle.environment is not None and bundle.environment.temperature > 0:
        report = fdr_check(bundle.moments, bundle.environment.temperature, bundle.model.hbar)
        with open(os.path.join(run_dir, "fdr.json"), "w") as f:
            json.dump(report.to_dict(), f, indent=1)
        print(json.dumps(report.to_dict(), indent=1))
    print(json.dumps(bundle.moments.to_dict(), indent=1))
    print(f"wrote {path}")
    return EXIT_OK


def cmd_check_tradeoff(args) -> int:
    bundle, cfg = _load_bundle(args)
    run_dir = _make_run_dir(args, "check-tradeoff")
    _write_manifest(run_dir, "check-tradeoff", args, cfg.text)
    markov = check_markov_cp(bundle.coeffs)
    tradeoff = check_tradeoff(to_oppenheim(bundle.coeffs))
    payload = {
        "markov": markov.to_dict(),
        "tradeoff": tradeoff.to_dict(),
        "verdict": "pass" if (markov.passed and tradeoff.passed) else "fail",
    }
    with open(os.path.join(run_dir, "tradeoff.json"), "w") as f:
        json.dump(payload, f, indent=1)
    print(json.dumps(payload, indent=1))
    return EXIT_OK if payload["verdict"] == "pass" else EXIT_CP_FAIL


def cmd_check_kernel(args) -> int:
    cfg = parse_config(args.config)
    bundle = materialize(cfg)
    run_dir = _make_run_dir(args, "check-kernel")
    _write_manifest(run_dir, "check-kernel", args, cfg.text)
    if args.kernels is not None:
        from .config import _load_kernel_dir

        kernels = _load_kernel_dir(args.kernels)
    elif bundle.kernels is not None:
        kernels = bundle.kernels
    else:
        raise ConfigError(["check-kernel needs --kernels DIR or an [environment]/[kernels] config"])
    if "N33R" not in kernels and "N33" in kernels:
        kernels = dict(kernels)
        kernels["N33R"] = kernels["N33"]
    wanted = {k: kernels.get(k) for k in ("N22", "D22", "N23", "N32", "D32", "N33R")}
    report = check_nonmarkov_kernel(
        wanted, lambda1=bundle.model.lambda1, hbar=bundle.model.hbar, n_time=args.n_time
    )
    payload = report.to_dict()
    payload["verdict"] = "pass" if report.passed else "fail"
    with open(os.path.join(run_dir, "kernel_check.json"), "w") as f:
        json.dump(payload, f, indent=1)
    print(json.dumps(payload, indent=1))
    return EXIT_OK if report.passed else EXIT_CP_FAIL


def cmd_evolve(args) -> int:
    bundle, cfg = _load_bundle(args)
    run_dir = _make_run_dir(args, "evolve")
    _write_manifest(run_dir, "evolve", args, cfg.text)
    state = _initial_state(bundle)
    result = evolve(
        state,
        bundle.coeffs,
        bundle.evolution,
        observables=bundle.observables,
        check_boundaries=bundle.monitor_boundaries,
    )
    path = os.path.join(run_dir, "evolve.csv")
    result.to_csv(path)
    write_snapshot(result.final_state, run_dir, "final")
    print(f"wrote {path}")
    return EXIT_OK


def _initial_state(bundle: RunBundle):
    from .semi_wigner import init_gaussian_product, init_point_mass

    ini = bundle.initial
    if bundle.initial_kind == "point":
        return init_point_mass(bundle.grid, ini.h0, ini.pi0, ini.rho_psi)
    return init_gaussian_product(bundle.grid, ini.h0, ini.pi0, ini.sigma_h, ini.sigma_pi, ini.rho_psi)


def cmd_unravel(args) -> int:
    bundle, cfg = _load_bundle(args)
    u = bundle.unravel
    n_traj = args.trajectories if args.trajectories is not None else u["trajectories"]
    seed = args.seed if args.seed is not None else u["seed"]
    run_dir = _make_run_dir(args, "unravel")
    _write_manifest(run_dir, "unravel", args, cfg.text, seed=seed)
    initial = GaussianInitial(
        h0=bundle.initial.h0,
        pi0=bundle.initial.pi0,
        sigma_h=bundle.initial.sigma_h,
        sigma_pi=bundle.initial.sigma_pi,
        rho_psi=bundle.initial.rho_psi,
    )
    result = run_ensemble(
        bundle.coeffs,
        initial,
        t_final=bundle.evolution.t_final,
        dt=u["dt"],
        n_trajectories=n_traj,
        seed=seed,
        observables=bundle.observables,
        output_stride=u["output_stride"],
        chunk=u["chunk"],
    )
    path = os.path.join(run_dir, "unravel.csv")
    result.to_csv(path)
    print(f"wrote {path} (effective sample size {result.ess:.1f})")
    return EXIT_OK


def _read_csv(path) -> dict:
    data = np.genfromtxt(path, delimiter=",", names=True)
    return {name: np.atleast_1d(data[name]) for name in data.dtype.names}


def cmd_compare(args) -> int:
    ref = _read_csv(args.evolve_csv)
    mc = _read_csv(args.unravel_csv)
    shared = sorted(
        k for k in mc if k != "t" and not k.endswith("_se") and k in ref and f"{k}_se" in mc
    )
    if not shared:
        raise ConfigError(["compare: the two CSV files share no observable columns"])
    # align on common output times
    common_t, ref_idx, mc_idx = np.intersect1d(
        np.round(ref["t"], 12), np.round(mc["t"], 12), return_indices=True
    )
    if common_t.size == 0:
        raise ConfigError(["compare: no common output times"])
    rows = {}
    worst = 0.0
    for name in shared:
        se = np.maximum(mc[f"{name}_se"][mc_idx], 1e-9)  # floor: exact columns at t = 0
        z = (mc[name][mc_idx] - ref[name][ref_idx]) / se
        rows[name] = {
            "max_abs_z": float(np.abs(z).max()),
            "mean_abs_z": float(np.abs(z).mean()),
            "n_times": int(common_t.size),
        }
        worst = max(worst, float(np.abs(z).max()))
    payload = {"observables": rows, "max_abs_z": worst, "threshold": 3.0,
               "verdict": "pass" if worst <= 3.0 else "fail"}
    out = getattr(args, "out", None)
    if out:
        os.makedirs(out, exist_ok=True)
        with open(os.path.join(out, "compare.json"), "w") as f:
            json.dump(payload, f, indent=1)
    print(json.dumps(payload, indent=1))
    return EXIT_OK if payload["verdict"] == "pass" else EXIT_MISMATCH


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cqsim",
        description="Classical-quantum hybrid dynamics simulator and positivity certificates",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.set_defaults(fn=fn)
        p.add_argument("--out", default=None, help="run directory (default runs/<cmd>-<timestamp>)")
        return p

    for name, fn, desc in (
        ("coeffs", cmd_coeffs, "assemble and print the CQ generator coefficients"),
        ("moments", cmd_moments, "build kernels, extract local moments, run the FDR check"),
        ("check-tradeoff", cmd_check_tradeoff, "certify the Markovian CP conditions"),
        ("evolve", cmd_evolve, "integrate the deterministic master equation"),
    ):
        p = add(name, fn, help=desc)
        p.add_argument("--config", required=True)

    p = add("check-kernel", cmd_check_kernel, help="certify the non-Markovian kernel condition")
    p.add_argument("--config", required=True)
    p.add_argument("--kernels", default=None, help="directory of kernel CSV files")
    p.add_argument("--n-time", type=int, default=None, dest="n_time")

    p = add("unravel", cmd_unravel, help="run the stochastic unraveling ensemble")
    p.add_argument("--config", required=True)
    p.add_argument("--trajectories", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)

    p = add("compare", cmd_compare, help="z-score an unravel CSV against an evolve CSV")
    p.add_argument("evolve_csv")
    p.add_argument("unravel_csv")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return EXIT_CONFIG if err.code not in (0, None) else EXIT_OK
    try:
        return args.fn(args)
    except ConfigError as err:
        for v in err.violations:
            print(f"config error: {v}", file=sys.stderr)
        return EXIT_CONFIG
    except PositivityError as err:
        print(f"positivity error: {err}", file=sys.stderr)
        return EXIT_CP_FAIL
    except NumericalAbortError as err:
        print(f"numerical abort: {err}", file=sys.stderr)
        return EXIT_NUMERICAL


def console_main() -> None:
    sys.exit(main())
