"""Command-line front end.

Subcommands: simulate, verify, regret, sweep, counterexample. All runs are
deterministic given flags and seed; every CSV ends with a comment line
recording the resolved flags, and JSON reports carry the same string in a
"meta" field. A --config JSON file may supply defaults; explicit flags win.

Exit codes: 0 success / checks passed, 1 check failed or verdict
inconclusive, 2 file or input errors.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .backend import default_workers
from .core import FitnessLandscape, JointDistribution, marginal
from .dynamics import CONVERGENCE_THRESHOLD, DynamicsKind, rs_step, simulate, sr_step
from .equivalence import (
    STEPWISE_TOL,
    TRAJECTORY_TOL,
    check_rs_marginal,
    check_sr_marginal,
    check_trajectory,
)
from .experiments import (
    SweepConfig,
    counterexample_convergence,
    counterexample_wright,
    instance_seed,
    random_distribution,
    random_landscape,
    run_sweep,
    write_records_csv,
    write_summary_csv,
)
from .regret import build_ledger, check_regret_bound

MARGINAL_CHECKS = ("sr-marginal", "rs-marginal")
TRAJECTORY_CHECKS = ("sr-trajectory", "rs-trajectory")
ALL_CHECKS = MARGINAL_CHECKS + TRAJECTORY_CHECKS


class InputError(Exception):
    """User input problem: bad file, bad JSON, inconsistent shapes."""


def _load_landscape(path: str) -> FitnessLandscape:
    try:
        return FitnessLandscape.load(path)
    except FileNotFoundError as exc:
        raise InputError(f"landscape file not found: {path}") from exc
    except (json.JSONDecodeError, KeyError, ValueError) as exc:
        raise InputError(f"invalid landscape file {path}: {exc}") from exc


def _load_distribution(path: str) -> JointDistribution:
    try:
        return JointDistribution.load(path)
    except FileNotFoundError as exc:
        raise InputError(f"distribution file not found: {path}") from exc
    except (json.JSONDecodeError, KeyError, ValueError) as exc:
        raise InputError(f"invalid distribution file {path}: {exc}") from exc


def _meta_line(command: str, args: argparse.Namespace) -> str:
    # Records the semantic flag set and seed. Runtime-only knobs (worker
    # count, output paths) are excluded so reruns stay byte-identical.
    skip = ("config", "func", "command", "workers", "out")
    pairs = []
    for key in sorted(vars(args)):
        if key in skip:
            continue
        value = getattr(args, key)
        if value is None:
            continue
        pairs.append(f"--{key.replace('_', '-')} {value}")
    return f"haplomw {command} " + " ".join(pairs)


def _parse_shape(text: str) -> tuple[int, ...]:
    for sep in ("x", ","):
        if sep in text:
            try:
                counts = tuple(int(part) for part in text.split(sep))
            except ValueError as exc:
                raise InputError(f"bad shape {text!r}") from exc
            if len(counts) < 2 or any(n < 1 for n in counts):
                raise InputError(f"bad shape {text!r}")
            return counts
    raise InputError(f"bad shape {text!r} (expected e.g. 8x5 or 8,5,4)")


def _dynamics(args) -> DynamicsKind:
    return DynamicsKind(args.dynamics, args.r)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    landscape = _load_landscape(args.landscape)
    initial = _load_distribution(args.dist)
    trajectory = simulate(landscape, initial, _dynamics(args), args.steps, args.threshold)
    if args.out:
        trajectory.to_csv(args.out, meta=_meta_line("simulate", args))
    if trajectory.convergence_step is None:
        print(f"not converged within {args.steps} steps")
    else:
        print(f"converged at t={trajectory.convergence_step}")
    print(f"final average fitness: {trajectory.wbar[-1]:.4f}")
    return 0


def _verify_instances(args):
    """Yield (label, landscape, distribution) pairs to check."""
    if args.landscape or args.dist:
        if not (args.landscape and args.dist):
            raise InputError("verify needs both --landscape and --dist, or neither")
        yield "input", _load_landscape(args.landscape), _load_distribution(args.dist)
        return
    shape = _parse_shape(args.shape)
    for i in range(args.instances):
        seed = instance_seed(args.seed, i)
        landscape = random_landscape(shape, args.s, seed)
        dist = random_distribution(shape, seed + 1)
        yield f"random-{i}", landscape, dist


def cmd_verify(args) -> int:
    checks = ALL_CHECKS if args.check == "all" else (args.check,)
    expect = None
    if args.expect_marginals:
        try:
            with open(args.expect_marginals) as fh:
                expect = [np.asarray(v, dtype=float) for v in json.load(fh)["marginals"]]
        except FileNotFoundError as exc:
            raise InputError(f"marginal file not found: {args.expect_marginals}") from exc
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise InputError(f"invalid marginal file {args.expect_marginals}: {exc}") from exc
    reports = []
    for label, landscape, dist in _verify_instances(args):
        if expect is not None and (
            len(expect) != dist.num_loci
            or any(len(expect[j]) != dist.allele_counts[j] for j in range(dist.num_loci))
        ):
            raise InputError("expected marginals do not match the distribution's shape")
        for check in checks:
            if check in MARGINAL_CHECKS:
                fn = check_sr_marginal if check == "sr-marginal" else check_rs_marginal
                report = fn(landscape, dist, args.r, args.tol)
                if expect is not None:
                    step = sr_step if check == "sr-marginal" else rs_step
                    stepped = step(landscape, dist, args.r)
                    gap = max(
                        float(np.abs(marginal(stepped, j) - expect[j]).max())
                        for j in range(dist.num_loci)
                    )
                    if gap > args.expect_tol:
                        report.passed = False
                        report.check += "+expected-marginals"
                        report.max_deviation = gap
            else:
                kind = DynamicsKind(check.split("-")[0], args.r)
                report = check_trajectory(landscape, dist, kind, args.steps, args.trajectory_tol)
            entry = report.to_json()
            entry["instance"] = label
            reports.append(entry)
    if not reports:
        raise InputError("nothing to check (zero instances)")
    passed = all(entry["passed"] for entry in reports)
    payload = {"passed": passed, "reports": reports, "meta": _meta_line("verify", args)}
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(payload, fh, indent=2)
    worst = max(reports, key=lambda e: 0.0 if e["worst"] is None else e["worst"]["deviation"])
    status = "PASS" if passed else "FAIL"
    print(f"{status}: {len(reports)} checks; worst deviation "
          f"{0.0 if worst['worst'] is None else worst['worst']['deviation']:.3e} "
          f"({worst['check']} on {worst['instance']})")
    return 0 if passed else 1


def cmd_regret(args) -> int:
    instances = []
    if args.landscape or args.dist:
        if not (args.landscape and args.dist):
            raise InputError("regret needs both --landscape and --dist, or neither")
        instances.append(("input", _load_landscape(args.landscape), _load_distribution(args.dist)))
    else:
        shape = _parse_shape(args.shape)
        for i in range(args.instances):
            seed = instance_seed(args.seed, i)
            landscape = random_landscape(shape, args.s, seed)
            instances.append((f"random-{i}", landscape, JointDistribution.uniform(shape)))
    kind = _dynamics(args)
    reports = []
    for label, landscape, initial in instances:
        trajectory = simulate(landscape, initial, kind, args.steps)
        for player in range(landscape.num_loci):
            ledger = build_ledger(landscape, trajectory, player, mode=kind.kind, r=kind.r)
            entry = check_regret_bound(ledger).to_json()
            entry["instance"] = label
            reports.append(entry)
    passed = all(entry["passed"] for entry in reports)
    payload = {"passed": passed, "reports": reports, "meta": _meta_line("regret", args)}
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(payload, fh, indent=2)
    min_slack = min(entry["slack"] for entry in reports)
    print(f"{'PASS' if passed else 'FAIL'}: {len(reports)} player ledgers; "
          f"min slack {min_slack:.4f}")
    return 0 if passed else 1


def cmd_sweep(args) -> int:
    if args.alleles:
        shape = _parse_shape(args.alleles)
    else:
        shape = (args.rows, args.cols)
    cfg = SweepConfig(
        allele_counts=shape,
        s=args.s,
        r=args.r,
        kind=args.dynamics,
        instances=args.instances,
        t_max=args.tmax,
        threshold=args.threshold,
        seed=args.seed,
        init=args.init,
        workers=args.workers,
    )
    records, summary = run_sweep(cfg)
    meta = _meta_line("sweep", args)
    write_records_csv(records, cfg, f"{args.out}_records.csv", meta=meta)
    write_summary_csv(summary, f"{args.out}_summary.csv", meta=meta)
    frac = summary.n_converged / summary.n_instances
    ts = [rec.t_conv for rec in records if rec.converged]
    median = float(np.median(ts)) if ts else float("nan")
    print(f"{summary.n_converged}/{summary.n_instances} converged "
          f"({frac:.4f}); median T_conv {median:.1f}")
    return 0


def cmd_counterexample(args) -> int:
    if args.which == "wright":
        result = counterexample_wright(args.s, args.tmax)
        print(f"max l1 distance to Wright manifold: {result.max_l1:.4f} "
              f"at t={result.step_at_max}")
        print(f"linf distance at that step: {result.linf_at_max:.4f} (reported only)")
        if args.out:
            result.trajectory.to_csv(args.out, meta=_meta_line("counterexample", args))
        return 0
    result = counterexample_convergence(t_max=args.tmax, threshold=args.threshold)
    for name, limit, steps, nash in (
        ("independent PW", result.pw_limit, result.pw_steps, result.pw_limit_is_nash),
        ("SR r=0.5", result.sr_limit, result.sr_steps, result.sr_limit_is_nash),
    ):
        if limit is None:
            print(f"{name}: inconclusive (no convergence within {args.tmax} steps)")
        else:
            label = "(" + ",".join(str(i + 1) for i in limit) + ")"
            print(f"{name}: limit genotype {label} after {steps} steps"
                  f"{' [pure Nash]' if nash else ''}")
    if args.out:
        payload = {
            "pw_limit": result.pw_limit,
            "pw_steps": result.pw_steps,
            "sr_limit": result.sr_limit,
            "sr_steps": result.sr_steps,
            "pw_limit_is_nash": result.pw_limit_is_nash,
            "sr_limit_is_nash": result.sr_limit_is_nash,
            "meta": _meta_line("counterexample", args),
        }
        with open(args.out, "w") as fh:
            json.dump(payload, fh, indent=2)
    return 0 if result.conclusive else 1


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="haplomw",
        description="Haploid population dynamics and their multiplicative-weights learners",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="JSON file with default flag values")
        p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")

    p = sub.add_parser("simulate", help="iterate a dynamics and write the trajectory")
    add_common(p)
    p.add_argument("--landscape", required=True, help="fitness landscape JSON")
    p.add_argument("--dist", required=True, help="initial distribution JSON")
    p.add_argument("--dynamics", choices=["asexual", "sr", "rs"], default="sr")
    p.add_argument("--r", type=float, default=0.5, help="recombination rate")
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--threshold", type=float, default=CONVERGENCE_THRESHOLD)
    p.add_argument("--out", help="trajectory CSV path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="check the dynamics/learner equivalences")
    add_common(p)
    p.add_argument("--check", choices=ALL_CHECKS + ("all",), required=True)
    p.add_argument("--landscape")
    p.add_argument("--dist")
    p.add_argument("--instances", type=int, default=20, help="random instances when no files given")
    p.add_argument("--shape", default="8x5", help="random instance shape, e.g. 8x5 or 4x3x2")
    p.add_argument("--s", type=float, default=0.3, help="selection strength for random instances")
    p.add_argument("--r", type=float, default=0.5)
    p.add_argument("--steps", type=int, default=50, help="trajectory check horizon")
    p.add_argument("--tol", type=float, default=STEPWISE_TOL)
    p.add_argument("--trajectory-tol", type=float, default=TRAJECTORY_TOL)
    p.add_argument("--expect-marginals", help="JSON with expected one-step marginals")
    p.add_argument("--expect-tol", type=float, default=1e-9)
    p.add_argument("--out", help="report JSON path")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("regret", help="check the no-regret bound on trajectories")
    add_common(p)
    p.add_argument("--landscape")
    p.add_argument("--dist")
    p.add_argument("--instances", type=int, default=20)
    p.add_argument("--shape", default="8x5")
    p.add_argument("--s", type=float, default=0.1)
    p.add_argument("--dynamics", choices=["sr", "rs"], default="sr")
    p.add_argument("--r", type=float, default=0.5)
    p.add_argument("--steps", type=int, default=200)
    p.add_argument("--out", help="report JSON path")
    p.set_defaults(func=cmd_regret)

    p = sub.add_parser("sweep", help="random-instance convergence/quality sweep")
    add_common(p)
    p.add_argument("--rows", type=int, default=8)
    p.add_argument("--cols", type=int, default=5)
    p.add_argument("--alleles", help="general shape, e.g. 8,5,4 (overrides rows/cols)")
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--r", type=float, default=0.5)
    p.add_argument("--dynamics", choices=["asexual", "sr", "rs"], default="sr")
    p.add_argument("--instances", type=int, default=1000)
    p.add_argument("--tmax", type=int, default=100_000)
    p.add_argument("--threshold", type=float, default=CONVERGENCE_THRESHOLD)
    p.add_argument("--init", choices=["uniform", "random-product", "random-joint"],
                   default="uniform")
    p.add_argument("--workers", type=int, default=default_workers(),
                   help="process count (HAPLOMW_WORKERS sets the default)")
    p.add_argument("--out", required=True, help="output prefix for records/summary CSVs")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("counterexample", help="run one of the two counterexamples")
    add_common(p)
    p.add_argument("which", choices=["wright", "convergence"])
    p.add_argument("--s", type=float, default=0.01, help="selection strength (wright)")
    p.add_argument("--tmax", type=int, default=None)
    p.add_argument("--threshold", type=float, default=CONVERGENCE_THRESHOLD)
    p.add_argument("--out")
    p.set_defaults(func=cmd_counterexample)

    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    # Flags beat config-file values beat built-in defaults.
    probe = argparse.ArgumentParser(add_help=False)
    probe.add_argument("--config")
    known, _ = probe.parse_known_args(argv)
    args = parser.parse_args(argv)
    if known.config:
        try:
            with open(known.config) as fh:
                overrides = json.load(fh)
        except FileNotFoundError as exc:
            raise InputError(f"config file not found: {known.config}") from exc
        except json.JSONDecodeError as exc:
            raise InputError(f"invalid config file {known.config}: {exc}") from exc
        explicit = {token.split("=")[0].lstrip("-").replace("-", "_")
                    for token in argv if token.startswith("--")}
        for key, value in overrides.items():
            attr = key.replace("-", "_")
            if hasattr(args, attr) and attr not in explicit:
                setattr(args, attr, value)
    return args


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    try:
        parser = build_parser()
        args = _apply_config(parser, argv)
        if getattr(args, "tmax", None) is None and getattr(args, "command", "") == "counterexample":
            args.tmax = 400 if args.which == "wright" else 10_000_000
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
