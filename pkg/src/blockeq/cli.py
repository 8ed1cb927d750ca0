"""Command line entry point: ``blockeq <subcommand> [options]``.

Exit codes: 0 success, 1 a checked criterion failed, 2 usage or config
error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from blockeq import config as cfgmod
from blockeq.dynamics import eigendecompose
from blockeq.ensemble import build_profile, expand_variance_matrix, sample_hamiltonian
from blockeq.errors import (
    BlockEqError,
    CampaignFailed,
    ConfigError,
    ConvergenceFailure,
    NearPole,
    NotConverged,
)
from blockeq.experiments import (
    ComparisonReport,
    bundle_files,
    campaign_report,
    compare_to_theory,
    load_curves,
    run_campaign,
    run_typicality,
    write_files,
)
from blockeq.theory.asymptotics import asymptotic_prediction
from blockeq.theory.series import theory_w
from blockeq.verify import CHECKS, run_suite

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3
NUMERIC_ERRORS = (NotConverged, ConvergenceFailure, CampaignFailed, NearPole, FloatingPointError, np.linalg.LinAlgError)

log = logging.getLogger("blockeq")


class UsageError(Exception):
    pass


def _config(args) -> cfgmod.ExperimentConfig:
    if args.config is None:
        raise UsageError("--config is required for this subcommand")
    path = Path(args.config)
    if path.exists():
        text = path.read_text()
    else:
        text = cfgmod.bundled_config(args.config)
    overrides = list(args.set or [])
    if args.seed is not None:
        overrides.append(f"ensemble.seed_base={args.seed}")
    return cfgmod.load_config(text=text, overrides=overrides)


def _emit(args, files: dict) -> None:
    if args.out is None:
        for name, text in files.items():
            if not name.endswith(".ini"):
                sys.stdout.write(text)
        return
    for path in write_files(args.out, files, force=args.force):
        log.info("wrote %s", path)


def _report_exit(report: ComparisonReport) -> int:
    for c in report.criteria:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name} value={c.value!r} threshold={c.threshold!r} {c.detail}".rstrip())
    return EXIT_OK if report.passed else EXIT_FAIL


def _profile_fields(profile) -> dict:
    return {"model": profile.model.value, "lambda": profile.lam, "delta": profile.delta, "D": profile.D}


def cmd_profile(args) -> int:
    if args.config:
        cfg = _config(args)
        profile = cfg.profile()
    else:
        if args.model is None or args.lam is None or args.D is None:
            raise UsageError("profile needs --config or --model/--lambda/--D")
        profile = build_profile(args.model, args.lam, args.D, args.delta)
    n = len(profile.dims)
    summary = {
        **_profile_fields(profile),
        "N": profile.N,
        "dims": list(profile.dims),
        "ranges": profile.decomp.ranges,
        "block_variance": [[profile.block_variance(a, b) for b in range(1, n + 1)] for a in range(1, n + 1)],
    }
    if profile.N <= 10_000:
        S = expand_variance_matrix(profile)
        summary["max_row_sum_error"] = float(np.max(np.abs(S.sum(axis=1) - 1.0)))
    _emit(args, {"profile.json": json.dumps(summary, indent=2) + "\n"})
    return EXIT_OK


def cmd_sample(args) -> int:
    cfg = _config(args)
    profile = cfg.profile()
    sample = sample_hamiltonian(profile, cfg.seed_base, cfg.entry_law)
    eig = eigendecompose(sample)
    H = sample.matrix
    summary = {
        **_profile_fields(profile),
        "N": profile.N,
        "seed": sample.seed,
        "entry_law": sample.entry_law.value,
        "hermitian_error": float(np.max(np.abs(H - H.conj().T))),
        "spectrum_min": float(eig.values[0]),
        "spectrum_max": float(eig.values[-1]),
    }
    files = {f"{cfg.name}_sample.json": json.dumps(summary, indent=2) + "\n"}
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        target = out / f"{cfg.name}_sample_{sample.seed}.npy"
        if target.exists() and not args.force:
            raise FileExistsError(f"refusing to overwrite {target} (use --force)")
        np.save(target, H)
    _emit(args, files)
    return EXIT_OK


def _parse_grid(text: str) -> np.ndarray:
    try:
        start, stop, points = text.split(":")
        return np.linspace(float(start), float(stop), int(points))
    except ValueError:
        raise UsageError(f"grid must look like start:stop:points, got {text!r}") from None


def cmd_theory(args) -> int:
    if args.model is None or args.lam is None or args.pair is None:
        raise UsageError("theory needs --model, --lambda and --pair")
    try:
        mu, nu = (int(v) for v in args.pair.split(","))
    except ValueError:
        raise UsageError(f"pair must look like mu,nu, got {args.pair!r}") from None
    times = _parse_grid(args.grid)
    lines = ["t,value,asymptotic,validity"]
    for t in times:
        value = theory_w(args.model, mu, nu, args.lam, t)
        pred = asymptotic_prediction(args.model, "w", mu, nu, args.lam, t)
        asym = pred.value if t > 0 else float("nan")
        lines.append(f"{float(t)!r},{value!r},{asym!r},{int(pred.valid)}")
    _emit(args, {f"theory_{args.model}_{mu}{nu}.csv": "\n".join(lines) + "\n"})
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _config(args)
    if cfg.mode == "typicality":
        raise UsageError("simulate needs a state or trace config; use the typicality subcommand")
    result = run_campaign(cfg, args.threads)
    report = campaign_report(result)
    _emit(args, bundle_files(result, report))
    return EXIT_OK


def cmd_typicality(args) -> int:
    cfg = _config(args)
    report = run_typicality(cfg, args.threads)
    files = {f"{cfg.name}_report.json": report.to_json() + "\n", f"{cfg.name}_config.ini": cfg.to_ini()}
    _emit(args, files)
    return _report_exit(report)


def cmd_compare(args) -> int:
    cfg = _config(args)
    if cfg.mode == "typicality":
        return cmd_typicality(args)
    if args.curves:
        curves = load_curves(args.curves, cfg.name)
        if not curves:
            raise ConfigError(f"no curve CSVs for {cfg.name!r} in {args.curves}")
        report = compare_to_theory(curves, cfg)
        _emit(args, {f"{cfg.name}_report.json": report.to_json() + "\n"})
    else:
        result = run_campaign(cfg, args.threads)
        report = campaign_report(result)
        _emit(args, bundle_files(result, report))
    return _report_exit(report)


def cmd_verify(args) -> int:
    names = args.check or None
    if names:
        unknown = [n for n in names if n not in CHECKS]
        if unknown:
            raise UsageError(f"unknown checks {unknown}; available: {sorted(CHECKS)}")
    report = ComparisonReport(criteria=run_suite(names))
    if args.out is not None:
        write_files(args.out, {"verify_report.json": report.to_json() + "\n"}, force=args.force)
    return _report_exit(report)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="config file or bundled config name (e.g. fig1)")
    common.add_argument("--out", help="output directory (stdout if omitted)")
    common.add_argument("--seed", type=int, help="override ensemble.seed_base")
    common.add_argument("--threads", type=int, default=None, help="worker threads (default: logical cores)")
    common.add_argument("--force", action="store_true", help="allow overwriting existing outputs")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="config override, repeatable")
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = argparse.ArgumentParser(prog="blockeq", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("profile", parents=[common], help="show a variance profile")
    p.add_argument("--model", choices=["2x2", "3x3"])
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--D", type=int)
    p.set_defaults(func=cmd_profile)

    sub.add_parser("sample", parents=[common], help="draw one matrix and summarise it").set_defaults(func=cmd_sample)

    p = sub.add_parser("theory", parents=[common], help="series and asymptotic w curves")
    p.add_argument("--model", choices=["2x2", "3x3"])
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--pair", help="mu,nu")
    p.add_argument("--grid", default="0:30:300", help="start:stop:points")
    p.set_defaults(func=cmd_theory)

    sub.add_parser("simulate", parents=[common], help="run a curve campaign").set_defaults(func=cmd_simulate)
    sub.add_parser("typicality", parents=[common], help="normal typicality campaign").set_defaults(func=cmd_typicality)

    p = sub.add_parser("compare", parents=[common], help="campaign plus comparison against theory")
    p.add_argument("--curves", help="directory with previously simulated CSVs")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("verify", parents=[common], help="run the structural check suite")
    p.add_argument("--check", action="append", help="run only this check (repeatable)")
    p.set_defaults(func=cmd_verify)
    return parser


def _fail(code: int, kind: str, exc: BaseException) -> int:
    print(f"error: {kind}: {exc}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * args.verbose, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except NUMERIC_ERRORS as exc:
        return _fail(EXIT_NUMERIC, "numerical", exc)
    except (UsageError, FileExistsError) as exc:
        return _fail(EXIT_USAGE, "usage", exc)
    except (BlockEqError, OSError) as exc:
        return _fail(EXIT_USAGE, "config", exc)


if __name__ == "__main__":
    sys.exit(main())
