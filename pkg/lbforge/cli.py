"""
Command line entry point: ``lbforge forge|verify|tv|bound|sample``

Machine-readable JSON lines go to stdout, a human readable summary to stderr.

Exit codes:

* 0: every check passed
* 1: a verify check failed
* 2: usage, I/O, parse or feasibility error
"""

__all__ = ["main", "build_parser"]

import argparse
import json
import math
import sys
import warnings

import numpy as np
import pandas as pd

from .descriptor import SCHEMA_VERSION, InstanceDescriptor, SampleRecord
from .ensembles import DEFAULT_ENUMERATION_BUDGET, draw_many, enumerate_atoms, sample_dataset, validate, x_max
from .excs import BudgetExceededError, HypothesisViolationError, LBForgeError, ValidationError
from .indist import (
    DEFAULT_TRIALS,
    Knobs,
    aggregate_tv_bound,
    mc_tv_estimate,
    prop1_bound,
    theorem_branch,
    theorem_lower_bound,
)
from .instances import DEFAULT_C, Family, InstanceParams, farness_probability, feasibility_margins, forge
from .kernels import Side, moment
from .models import BoundInputs, DiscreteDistribution
from .oracles import (
    DEFAULT_LP_BUDGET,
    LOG_CONCAVE_SLACK,
    MONOTONE_SLACK,
    gamma_distance_1d,
    gamma_distance_halfcube,
    is_log_concave,
    is_monotone,
    lp_distance_to_monotone,
    sqrt_triple_distance,
)


DEFAULT_DRAWS = 1000
DEFAULT_FARNESS_THRESHOLD = 0.95
MOMENT_TOLERANCE = 1e-10

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2

TV_COLUMNS = [
    "schema_version",
    "N",
    "marginal_bound",
    "crude_bound",
    "tail_term",
    "mc_estimate",
    "mc_radius",
    "prop1_bound",
    "prop1_flags",
]


class _Reporter:
    def __init__(self, quiet=False, out=None, err=None):
        self.quiet = quiet
        self.out = sys.stdout if out is None else out
        self.err = sys.stderr if err is None else err

    def emit(self, record):
        self.out.write(json.dumps(record, sort_keys=True) + "\n")

    def say(self, text):
        if not self.quiet:
            self.err.write(text + "\n")

    def fail(self, text):
        self.err.write(f"error: {text}\n")


# ---- forge ----#


def cmd_forge(args, reporter):
    params = InstanceParams(args.family, args.epsilon, args.n, args.d, args.const_c)
    instance = forge(params)
    probability = farness_probability(instance)
    margins = feasibility_margins(instance, args.farness_threshold)
    if probability < args.farness_threshold:
        raise ValidationError(
            f"P[no draw certified eps-far] = {probability:.6g} is below the farness threshold {args.farness_threshold}; "
            "lower --farness-threshold to forge anyway"
        )

    descriptor = InstanceDescriptor(instance, seed=args.seed)
    descriptor.write(args.out)

    relative = x_max(instance.spec)
    reporter.emit(
        {
            "command": "forge",
            "family": params.family.value,
            "n0": instance.n0,
            "m": instance.m,
            "s": instance.spec.s,
            "amplitude": instance.amplitude,
            "x_max": relative,
            "farness_probability": probability,
            "margins": [margin._asdict() for margin in margins],
            "out": args.out,
        }
    )
    reporter.say(f"forged {params.family.value}: n0 = {instance.n0}, m = {instance.m}, s = {instance.spec.s}, x_max = {relative:.4g}")
    for margin in margins:
        reporter.say(f"  {'ok  ' if margin.holds else 'FAIL'} {margin.name}: {margin.value:.6g} vs {margin.limit:.6g}")
    reporter.say(f"wrote {args.out}")
    return EXIT_OK


# ---- verify ----#


def _check_moments(spec):
    worst = 0.0
    failures = []
    seen = set()
    for i in range(spec.s):
        key = (float(spec.amplitudes[i]), float(spec.offsets[i]))
        if key in seen:
            continue
        seen.add(key)
        yes, no = spec.kernel(i, Side.YES), spec.kernel(i, Side.NO)
        scale = abs(yes.amplitude) * (1 + abs(yes.offset))
        for k in range(spec.order):
            gap = abs(moment(yes, k) - moment(no, k))
            tolerance = MOMENT_TOLERANCE * max(1.0, scale ** k)
            worst = max(worst, gap / tolerance)
            if gap > tolerance:
                failures.append(f"pair {i + 1}: moment {k} differs by {gap:.3g}")
    return {"check": "moments", "ok": not failures, "worst_ratio": worst, "failures": failures[:10]}


def _yes_predicate(instance):
    if instance.family is Family.MONOTONE_1D:
        return is_monotone
    if instance.family is Family.MONOTONE_DD:
        return lambda p: is_monotone(instance.lift(p))
    return is_log_concave


def _check_yes_side(instance, args, rng):
    spec = instance.spec
    holds = _yes_predicate(instance)
    total = spec.order ** spec.s
    if args.mode == "exhaustive" and total <= args.budget:
        mode = "exhaustive"
        outcomes = (p for _, p in enumerate_atoms(spec, Side.YES, args.budget))
    else:
        mode = "sampled"
        masses, _ = draw_many(spec, Side.YES, rng, args.draws)
        outcomes = (DiscreteDistribution(row, validate=False) for row in masses)
    checked = violations = 0
    for p in outcomes:
        checked += 1
        if not holds(p):
            violations += 1
    slack = LOG_CONCAVE_SLACK if instance.family is Family.LOG_CONCAVE else MONOTONE_SLACK
    return {
        "check": "yes_side",
        "ok": violations == 0,
        "mode": mode,
        "checked": checked,
        "violations": violations,
        "slack": slack,
    }


def _certificate(instance, p, lp_budget):
    family = instance.family
    if family is Family.MONOTONE_1D:
        if p.size <= lp_budget:
            return lp_distance_to_monotone(p, budget=lp_budget)
        return gamma_distance_1d(p, limit=instance.n0)
    if family is Family.MONOTONE_DD:
        return gamma_distance_halfcube(instance.layout, p)
    return sqrt_triple_distance(p, limit=instance.n0)


def _check_no_side(instance, args, rng):
    masses, _ = draw_many(instance.spec, Side.NO, rng, args.draws)
    certified = window_violations = 0
    methods = set()
    first_violation = None
    for row in masses:
        p = DiscreteDistribution(row, validate=False)
        try:
            certificate = _certificate(instance, p, args.lp_budget)
        except HypothesisViolationError as e:
            window_violations += 1
            first_violation = first_violation or str(e)
            continue
        methods.add(certificate.method.value)
        if certificate.lower_bound >= instance.epsilon:
            certified += 1
    fraction = certified / args.draws if args.draws else 0.0
    record = {
        "check": "no_side_farness",
        "ok": fraction >= args.farness_threshold and window_violations == 0,
        "draws": args.draws,
        "certified": certified,
        "fraction": fraction,
        "threshold": args.farness_threshold,
        "epsilon": instance.epsilon,
        "methods": sorted(methods),
        "window_violations": window_violations,
    }
    if first_violation is not None:
        record["first_window_violation"] = first_violation
    return record


def cmd_verify(args, reporter):
    descriptor = InstanceDescriptor.read(args.descriptor)
    instance = descriptor.instance
    rng = np.random.default_rng(args.seed)

    report = validate(instance.spec)
    records = [
        {
            "check": "definition",
            "ok": report.ok,
            "constraint": report.constraint,
            "index": report.index,
            "message": report.message,
        }
    ]
    if report.ok:
        records.append(_check_moments(instance.spec))
        records.append(_check_yes_side(instance, args, rng))
        records.append(_check_no_side(instance, args, rng))
    else:
        for name in ("moments", "yes_side", "no_side_farness"):
            records.append({"check": name, "ok": False, "skipped": True, "reason": "invalid ensemble"})

    passed = all(record["ok"] for record in records)
    for record in records:
        reporter.emit(record)
        detail = record.get("message") or record.get("reason") or ""
        reporter.say(f"{'PASS' if record['ok'] else 'FAIL'} {record['check']} {detail}".rstrip())
    reporter.emit({"check": "summary", "ok": passed})
    reporter.say("all checks passed" if passed else "verification failed")
    return EXIT_OK if passed else EXIT_FAILED


# ---- tv ----#


def _parse_counts(text):
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ValidationError(f"--N needs a comma separated list of integers, got {text!r}")
    if not values or any(v < 0 for v in values):
        raise ValidationError(f"--N needs nonnegative sample sizes, got {text!r}")
    return values


def cmd_tv(args, reporter):
    descriptor = InstanceDescriptor.read(args.descriptor)
    instance = descriptor.instance
    spec = instance.spec
    report = validate(spec)
    if not report.ok:
        raise ValidationError(f"Invalid ensemble spec: {report.message}")
    knobs = Knobs.from_assignments(args.knob)
    rng = np.random.default_rng(args.seed)

    rows = []
    for N in _parse_counts(args.N):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            tv = aggregate_tv_bound(spec, N)
            value, violations = prop1_bound(BoundInputs.from_spec(spec, N, instance.params.C), knobs)
        estimate, radius = mc_tv_estimate(spec, N, args.trials, rng, workers=args.workers)
        for message in tv.warnings:
            reporter.say(f"N = {N}: {message}")
        rows.append(
            {
                "schema_version": SCHEMA_VERSION,
                "N": N,
                "marginal_bound": tv.marginal_bound,
                "crude_bound": tv.crude_bound,
                "tail_term": tv.tail_term,
                "mc_estimate": estimate,
                "mc_radius": radius,
                "prop1_bound": value,
                "prop1_flags": ";".join(violations),
            }
        )
        reporter.say(f"N = {N}: marginal {tv.marginal_bound:.4g}, crude {tv.crude_bound:.4g}, mc {estimate:.4g} ± {radius:.2g}")

    pd.DataFrame(rows, columns=TV_COLUMNS).to_csv(args.out, index=False)
    reporter.emit({"command": "tv", "rows": len(rows), "out": args.out})
    return EXIT_OK


# ---- bound ----#


def cmd_bound(args, reporter):
    params = InstanceParams(args.family, args.epsilon, args.n, args.d, args.const_c)
    knobs = Knobs.from_assignments(args.knob)
    value = theorem_lower_bound(params, knobs)
    branch = theorem_branch(params)
    record = {"command": "bound", "family": params.family.value, "N": value, "branch": branch}
    if params.family is not Family.LOG_CONCAVE:
        record["dimension_factor"] = float(params.d) ** -params.d
    reporter.emit(record)
    reporter.say(f"N >= {value:.6g} (min attained by {branch})")
    if "dimension_factor" in record:
        reporter.say(f"d^-d factor applied: {record['dimension_factor']:.6g}")
    return EXIT_OK


# ---- sample ----#


def cmd_sample(args, reporter):
    if args.N < 0:
        raise ValidationError(f"--N must be nonnegative, got {args.N}")
    descriptor = InstanceDescriptor.read(args.descriptor)
    instance = descriptor.instance
    rng = np.random.default_rng(args.seed)
    masses, realized = draw_many(instance.spec, args.side, rng, 1)
    p = instance.lift(DiscreteDistribution(masses[0]))
    counts = sample_dataset(p, args.N, rng)
    record = SampleRecord(args.side, args.N, args.seed, p.shape, counts, realized[0])
    with open(args.out, "w") as f:
        f.write(record.serialize())
    reporter.emit({"command": "sample", "side": record.side.value, "N": args.N, "bins": int(p.size), "out": args.out})
    reporter.say(f"wrote {args.N} {record.side.value}-side samples to {args.out}")
    return EXIT_OK


# ---- parser ----#


def _probability(text):
    value = float(text)
    if not 0 <= value <= 1 or math.isnan(value):
        raise argparse.ArgumentTypeError(f"expected a probability, got {text}")
    return value


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--quiet", action="store_true", help="Don't print the human readable summary")

    instance_args = argparse.ArgumentParser(add_help=False)
    instance_args.add_argument("--family", required=True, choices=[f.value for f in Family])
    instance_args.add_argument("--epsilon", required=True, type=float)
    instance_args.add_argument("--n", required=True, type=int)
    instance_args.add_argument("--d", type=int, default=1)
    instance_args.add_argument("--const-c", type=float, default=DEFAULT_C)

    parser = argparse.ArgumentParser(prog="lbforge", description="Forge and audit moment-matched hard instances")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("forge", parents=[common, instance_args], help="Build an instance descriptor")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--farness-threshold", type=_probability, default=DEFAULT_FARNESS_THRESHOLD)
    p.set_defaults(handler=cmd_forge)

    p = sub.add_parser("verify", parents=[common], help="Check the certified properties of a descriptor")
    p.add_argument("descriptor")
    p.add_argument("--draws", type=int, default=DEFAULT_DRAWS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=["exhaustive", "sampled"], default="exhaustive")
    p.add_argument("--farness-threshold", type=_probability, default=DEFAULT_FARNESS_THRESHOLD)
    p.add_argument("--budget", type=int, default=DEFAULT_ENUMERATION_BUDGET)
    p.add_argument("--lp-budget", type=int, default=DEFAULT_LP_BUDGET)
    p.set_defaults(handler=cmd_verify)

    p = sub.add_parser("tv", parents=[common], help="TV bounds and Monte Carlo estimates per sample size")
    p.add_argument("descriptor")
    p.add_argument("--N", required=True, help="Comma separated sample sizes")
    p.add_argument("--trials", type=int, default=DEFAULT_TRIALS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--knob", action="append", default=[], metavar="k=v")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_tv)

    p = sub.add_parser("bound", parents=[common, instance_args], help="Sample complexity lower bound")
    p.add_argument("--knob", action="append", default=[], metavar="k=v")
    p.set_defaults(handler=cmd_bound)

    p = sub.add_parser("sample", parents=[common], help="Draw one distribution and sample from it")
    p.add_argument("descriptor")
    p.add_argument("--side", choices=[s.value for s in Side], default=Side.YES.value)
    p.add_argument("--N", required=True, type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_sample)

    return parser


def main(argv=None, out=None, err=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    reporter = _Reporter(args.quiet, out, err)
    try:
        return args.handler(args, reporter)
    except (ValidationError, BudgetExceededError, OSError) as e:
        reporter.fail(str(e))
        return EXIT_USAGE
    except LBForgeError as e:
        reporter.fail(f"{e.__class__.__name__}: {e}")
        return EXIT_USAGE
