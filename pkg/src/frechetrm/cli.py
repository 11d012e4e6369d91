"""Command-line interface.

Subcommands::

    frechetrm test      --input data.json [--alpha 0.05] [--no-within] ...
    frechetrm simulate  --scenario dist --n1 100 --n2 100 --r-spec 2,5 ...
    frechetrm baseline  --input data.json --method af --balanced-r 2 ...

Exit codes: 0 success; 1 invalid parameter ranges; 2 unreadable or invalid
input data; 3 calibration degeneracy (e.g. a group without repeated
measures when the full test is requested).
"""

from __future__ import annotations

import argparse
import os
import sys

from . import __version__, dataio
from .baselines import ResamplePlan, af_test, aggregate_p_values, balanced_resample
from .errors import (CalibrationError, DomainError, FrechetrmError, ParseError,
                     ValidationError)
from .inference import run_test
from .simulate import GroupSpec, ScenarioConfig, run_study

_SCENARIOS = {"dist": "distributional", "graph": "network",
              "vector": "vector", "composite": "composite"}


def _fail(code: int, exc: Exception) -> int:
    tag = getattr(exc, "code", "error")
    print(f"frechetrm: error[{tag}]: {exc}", file=sys.stderr)
    return code


def _usage_fail(message: str) -> int:
    print(f"frechetrm: usage error: {message}", file=sys.stderr)
    return 1


def _emit(text: str, path: str | None):
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# test
# ---------------------------------------------------------------------------


def _cmd_test(args) -> int:
    if not 0.0 < args.alpha < 1.0:
        return _usage_fail("--alpha must be in (0, 1)")
    if args.mc_draws < 1:
        return _usage_fail("--mc-draws must be >= 1")
    try:
        dataset = dataio.load_dataset(args.input, do_symmetrize=args.symmetrize)
    except (ParseError, ValidationError) as exc:
        return _fail(2, exc)
    except OSError as exc:
        print(f"frechetrm: error[io]: {exc}", file=sys.stderr)
        return 2
    method = "quadrature" if args.pvalue_method == "quadrature" else "mc"
    try:
        result = run_test(dataset, alpha=args.alpha, within=not args.no_within,
                          pvalue_method=method, mc_draws=args.mc_draws,
                          seed=args.seed)
    except CalibrationError as exc:
        return _fail(3, exc)
    except (DomainError, ValidationError) as exc:
        return _fail(2, exc)
    config = {
        "input": args.input,
        "alpha": args.alpha,
        "pvalue_method": args.pvalue_method,
        "mc_draws": args.mc_draws,
        "seed": args.seed,
        "no_within": args.no_within,
        "symmetrize": args.symmetrize,
        "format": args.format,
    }
    if args.format == "json":
        text = dataio.dumps_stable(dataio.test_result_to_dict(result, config)) + "\n"
    else:
        text = dataio.test_result_csv(result, config)
    _emit(text, args.output)
    return 0


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


def _pair(raw: str, parse, label: str):
    parts = raw.split(",")
    if len(parts) == 1:
        value = parse(parts[0])
        return value, value
    if len(parts) == 2:
        return parse(parts[0]), parse(parts[1])
    raise ValueError(f"--{label} takes one value or two comma-separated values")


def _parse_r(token: str):
    token = token.strip()
    if token == "mixed":
        return "mixed"
    return int(token)


def _cmd_simulate(args) -> int:
    try:
        r1, r2 = _pair(args.r_spec, _parse_r, "r-spec")
        i1, i2 = _pair(args.iota, float, "iota")
        b1, b2 = _pair(args.beta, float, "beta")
        e1, e2 = _pair(args.eps, float, "eps")
        t1, t2 = _pair(args.tau, int, "tau")
        cfg = ScenarioConfig(
            kind=_SCENARIOS[args.scenario],
            group1=GroupSpec(args.n1, r1, i1, b1, e1, t1),
            group2=GroupSpec(args.n2, r2, i2, b2, e2, t2),
            alpha=args.alpha,
            replicates=args.reps,
            seed=args.seed,
            grid_size=args.grid_size,
            nodes=args.nodes,
        )
    except (DomainError, ValueError) as exc:
        return _usage_fail(str(exc))
    tests = ("qn", "af") if args.test == "both" else (args.test,)
    threads = args.threads if args.threads else (os.cpu_count() or 1)
    try:
        report = run_study(cfg, tests=tests, threads=threads)
    except CalibrationError as exc:
        return _fail(3, exc)
    except FrechetrmError as exc:
        return _fail(2, exc)
    csv_text = dataio.study_report_csv(report)
    _emit(csv_text, args.out)
    if args.out:
        json_path = os.path.splitext(args.out)[0] + ".json"
        with open(json_path, "w", encoding="utf-8") as fh:
            fh.write(dataio.dumps_stable(dataio.study_report_to_dict(report)))
            fh.write("\n")
    for test in tests:
        print(f"frechetrm: {cfg.kind}/{test}: rate={report.rates[test]:.4f} "
              f"se={report.standard_errors[test]:.4f} "
              f"({report.rejections[test]}/{cfg.replicates})", file=sys.stderr)
    return 0


# ---------------------------------------------------------------------------
# baseline
# ---------------------------------------------------------------------------


def _cmd_baseline(args) -> int:
    if not 0.0 < args.alpha < 1.0:
        return _usage_fail("--alpha must be in (0, 1)")
    if args.balanced_r < 1:
        return _usage_fail("--balanced-r must be >= 1")
    if args.resamples < 1:
        return _usage_fail("--resamples must be >= 1")
    try:
        dataset = dataio.load_dataset(args.input, do_symmetrize=args.symmetrize)
    except (ParseError, ValidationError) as exc:
        return _fail(2, exc)
    except OSError as exc:
        print(f"frechetrm: error[io]: {exc}", file=sys.stderr)
        return 2
    plan = ResamplePlan(args.balanced_r, args.resamples, args.seed)
    try:
        resamples = balanced_resample(dataset, plan)
        p_values = []
        for b, ds in enumerate(resamples):
            try:
                p_values.append(af_test(ds, alpha=args.alpha,
                                        compute_quantile=False).p_value)
            except FrechetrmError as exc:
                raise type(exc)(f"resample {b}: {exc}") from exc
        aggregated = aggregate_p_values(p_values)
    except CalibrationError as exc:
        return _fail(3, exc)
    except (DomainError, ValidationError) as exc:
        return _fail(2, exc)
    group_sizes = {g.name: sum(1 for s in g.subjects
                               if s.n_repeats >= args.balanced_r)
                   for g in dataset.groups}
    config = {
        "input": args.input,
        "method": args.method,
        "balanced_r": args.balanced_r,
        "resamples": args.resamples,
        "seed": args.seed,
        "alpha": args.alpha,
        "symmetrize": args.symmetrize,
    }
    doc = dataio.baseline_report_to_dict(aggregated, config, group_sizes)
    _emit(dataio.dumps_stable(doc) + "\n", args.output)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="frechetrm",
        description="Group comparison tests for repeatedly observed random "
                    "objects in metric spaces.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_test = sub.add_parser("test", help="run the test on a dataset file")
    p_test.add_argument("--input", required=True, help="dataset JSON file")
    p_test.add_argument("--alpha", type=float, default=0.05)
    p_test.add_argument("--pvalue-method", choices=["quadrature", "mc"],
                        default="quadrature")
    p_test.add_argument("--mc-draws", type=int, default=10 ** 6)
    p_test.add_argument("--seed", type=int, default=0)
    p_test.add_argument("--no-within", action="store_true",
                        help="reduced location/scale test (no within-subject "
                             "term)")
    p_test.add_argument("--symmetrize", action="store_true",
                        help="average Laplacians with their transposes "
                             "before validation")
    p_test.add_argument("--output", default=None)
    p_test.add_argument("--format", choices=["json", "csv"], default="json")
    p_test.set_defaults(func=_cmd_test)

    p_sim = sub.add_parser("simulate", help="rejection-rate study")
    p_sim.add_argument("--scenario", choices=sorted(_SCENARIOS), required=True)
    p_sim.add_argument("--n1", type=int, default=100)
    p_sim.add_argument("--n2", type=int, default=100)
    p_sim.add_argument("--r-spec", default="2",
                       help="repeats per subject: R, 'mixed', or two "
                            "comma-separated per-group values")
    p_sim.add_argument("--iota", default="0.5",
                       help="within-subject correlation (one or two values)")
    p_sim.add_argument("--beta", default="1.0",
                       help="subject-level mean (one or two values)")
    p_sim.add_argument("--eps", default="1.0",
                       help="subject-level spread (one or two values)")
    p_sim.add_argument("--tau", default="3",
                       help="perturbed edges for network data (one or two "
                            "values)")
    p_sim.add_argument("--alpha", type=float, default=0.05)
    p_sim.add_argument("--reps", type=int, default=500)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--grid-size", type=int, default=1000)
    p_sim.add_argument("--nodes", type=int, default=10)
    p_sim.add_argument("--test", choices=["qn", "af", "both"], default="qn")
    p_sim.add_argument("--threads", type=int, default=0,
                       help="worker processes (default: all cores; 1 = serial)")
    p_sim.add_argument("--out", default=None,
                       help="CSV path; a JSON report is written alongside")
    p_sim.set_defaults(func=_cmd_simulate)

    p_base = sub.add_parser("baseline",
                            help="balanced-resampling baseline on a dataset")
    p_base.add_argument("--input", required=True)
    p_base.add_argument("--method", choices=["af"], default="af")
    p_base.add_argument("--balanced-r", type=int, required=True)
    p_base.add_argument("--resamples", type=int, default=500)
    p_base.add_argument("--seed", type=int, default=0)
    p_base.add_argument("--alpha", type=float, default=0.05)
    p_base.add_argument("--symmetrize", action="store_true")
    p_base.add_argument("--output", default=None)
    p_base.set_defaults(func=_cmd_baseline)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
