"""Command-line interface.

Subcommands: tv, bound, oracle, simulate, scan, badcenters.
Exit codes: 0 success, 1 usage error, 2 validation failure, 3 resource limit.
Diagnostics go to stderr; data goes to stdout or the configured output path.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import bound as bound_mod
from .bound import BoundInputs, assemble_total, estimate_r1_mc, estimate_r2_mc, iid_terms
from .dynamics import detect_bad_center, orbit_hits, sample_visit_counts
from .errors import ResourceLimitError, ValidationError
from .harness import ExperimentConfig, run_scan
from .markov import (
    MarkovBinaryModel,
    enumerate_count_distribution,
    exact_correlation_terms,
    exact_count_distribution,
    telescoping_residual,
)
from .pmf import PMF, tv_distance
from .systems import BallTarget, get_system

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_RESOURCE = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _read_pmf(path: str) -> PMF:
    with open(path) as f:
        return PMF.from_json(f.read())


def _cmd_tv(args) -> int:
    a = _read_pmf(args.a)
    b = _read_pmf(args.b)
    print(repr(tv_distance(a, b)))
    return EXIT_OK


def _cmd_bound(args) -> int:
    inputs = BoundInputs(eps=args.eps, N=args.N, p=args.p, M=args.M)
    if args.iid:
        r1, r2 = iid_terms(inputs)
        bk = assemble_total(r1, r2, inputs,
                            r1_provenance=bound_mod.PROV_IID,
                            r2_provenance=bound_mod.PROV_IID)
    elif args.series:
        series = []
        for path in args.series:
            bits = np.loadtxt(path, dtype=np.int64).ravel()
            series.append(bits.astype(np.uint8))
        r2, r2_se = estimate_r2_mc(series, args.p)
        r1, r1_se = estimate_r1_mc(series, inputs)
        bk = assemble_total(r1, r2, inputs,
                            r1_provenance=bound_mod.PROV_MC,
                            r2_provenance=bound_mod.PROV_MC,
                            r1_se=r1_se, r2_se=r2_se)
    else:
        raise ValidationError("need --iid or --series")
    print(json.dumps({
        "r1": bk.r1, "r2": bk.r2, "r3": bk.r3, "total": bk.total,
        "r1_provenance": bk.r1_provenance, "r2_provenance": bk.r2_provenance,
        "r1_se": bk.r1_se, "r2_se": bk.r2_se, "certifies": bk.certifies,
    }))
    return EXIT_OK


def _cmd_oracle(args) -> int:
    with open(args.model) as f:
        model = MarkovBinaryModel.from_json(f.read())
    pmf = exact_count_distribution(model, args.N)
    print(pmf.to_json())
    if args.check:
        enum = enumerate_count_distribution(model, min(args.N, args.check_n))
        dp = exact_count_distribution(model, min(args.N, args.check_n))
        gap = float(np.max(np.abs(
            np.pad(enum.probs, (0, dp.probs.size - enum.probs.size))
            - dp.probs
        )))
        residual = max(
            telescoping_residual(model, args.N, k)
            for k in range(0, min(args.N, 8) + 1)
        )
        print(f"enumeration max gap: {gap:.3e}", file=sys.stderr)
        print(f"telescoping max residual: {residual:.3e}", file=sys.stderr)
        if gap > 1e-12 or residual > 1e-10:
            print("oracle check FAILED", file=sys.stderr)
            return EXIT_VALIDATION
        print("oracle check ok", file=sys.stderr)
    return EXIT_OK


def _parse_point(text: str) -> tuple:
    return tuple(float(c) for c in text.split(","))


def _cmd_simulate(args) -> int:
    system = get_system(args.system)
    target = None
    if args.center is not None:
        target = BallTarget(center=_parse_point(args.center), r=args.r)
    if args.length:  # raw hit series
        if args.y0:
            y0 = _parse_point(args.y0)
        elif target is not None:
            y0 = target.center
        else:
            y0 = None  # synthetic adapters need no start point
        series = orbit_hits(system, target, y0, args.length, args.seed)
        print("".join(str(int(b)) for b in series.bits))
        return EXIT_OK
    sample = sample_visit_counts(
        system, target, args.t, args.n_samples, args.gap, args.seed,
        measure_iterations=args.measure_iterations,
    )
    print(sample.pmf.to_json())
    print(
        f"eps_hat={sample.eps_hat:.6g} se={sample.eps_se:.3g} "
        f"N_used={sample.N_used} escapes={sample.escapes}",
        file=sys.stderr,
    )
    return EXIT_OK


def _cmd_scan(args) -> int:
    with open(args.config) as f:
        config = ExperimentConfig.from_yaml(f.read())
    if args.output:
        config = ExperimentConfig.from_dict(
            {**json.loads(config.canonical_json()), "output": args.output}
        )
    rows = run_scan(config, workers=args.workers)
    if not config.output:
        for row in rows:
            row = {k: v for k, v in row.items() if not k.startswith("_")}
            print(json.dumps(row, default=float))
    return EXIT_OK


def _cmd_badcenters(args) -> int:
    system = get_system(args.system)
    for text in args.centers:
        center = _parse_point(text)
        report = detect_bad_center(system, BallTarget(center=center, r=args.r))
        print(json.dumps({
            "center": list(center), "r": args.r, "flag": report.flag,
            "first_bad_k": report.first_bad_k,
            "margin": report.margin if report.k_max else None,
            "k_max": report.k_max, "note": report.note,
        }))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="poissonvisits")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tv", help="TV distance between two PMF JSON files")
    p.add_argument("a")
    p.add_argument("b")
    p.set_defaults(func=_cmd_tv)

    p = sub.add_parser("bound", help="error-bound breakdown")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--iid", action="store_true",
                   help="analytic independent-case R1/R2")
    p.add_argument("--series", nargs="*", default=None,
                   help="hit-series files (0/1 per line) for MC estimation")
    p.set_defaults(func=_cmd_bound)

    p = sub.add_parser("oracle", help="exact Markov visit-count law")
    p.add_argument("model", help="model JSON file")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--check", action="store_true",
                   help="run enumeration cross-check and telescoping residual")
    p.add_argument("--check-n", type=int, default=10,
                   help="window length for the enumeration cross-check")
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("simulate", help="hit series or visit-count sample")
    p.add_argument("--system", required=True)
    p.add_argument("--center", default=None, help="comma-separated point")
    p.add_argument("--r", type=float, default=0.05)
    p.add_argument("--y0", default=None, help="orbit start (defaults to center)")
    p.add_argument("--length", type=int, default=0, help="emit a raw hit series")
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--n-samples", type=int, default=10_000)
    p.add_argument("--gap", type=int, default=128)
    p.add_argument("--measure-iterations", type=int, default=10**6)
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("scan", help="run a config-driven experiment scan")
    p.add_argument("config", help="YAML config file")
    p.add_argument("--output", default=None, help="override output directory")
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=_cmd_scan)

    p = sub.add_parser("badcenters", help="near-periodic center detection")
    p.add_argument("--system", required=True)
    p.add_argument("--r", type=float, required=True)
    p.add_argument("centers", nargs="+", help="comma-separated points")
    p.set_defaults(func=_cmd_badcenters)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as e:
        print(f"validation error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except ResourceLimitError as e:
        print(f"resource limit: {e}", file=sys.stderr)
        return EXIT_RESOURCE
    except FileNotFoundError as e:
        print(f"validation error: {e}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
