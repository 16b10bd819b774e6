"""Command-line harness: solve single instances, synthesize benchmarks,
run batch comparisons and the fault-tolerance sweep, validate schedules."""
from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

from . import assignment as asg_mod
from . import generator as gen_mod
from .assignment import CH_A, CH_B, CriterionParams
from .driver import DriverConfig, log_to_csv_rows, run
from .fibex import export_fibex, read_fibex
from .hypergraph import build_hypergraph
from .model import FormatError, ValidationError, load_instance, save_instance
from .scheduler import lbsc, schedule_single_channel
from .validator import validate

_SOLVER_NAMES = {"exact": "EXACT", "cah": "CAH", "ga": "GA"}


def _write_csv(path: str | Path, rows: list[list[str]]) -> None:
    with open(path, "w", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerows(rows)


def _gap_permille(value: float, reference: float) -> float:
    if reference == 0:
        return 0.0
    return (value - reference) / reference * 1000.0


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(round(value, 9))
    return str(value)


def run_benchmark(instance_dir: str | Path, out_csv: str | Path, *,
                  seed: int = 0, cah_tries: int = 1000, max_iterations: int = 10,
                  exact_time_limit_ms: int = 60_000,
                  include_timings: bool = True) -> int:
    """Per-instance solver comparison rows plus an average row.

    Returns the number of instances that failed (recorded in the error
    column; failures never abort the batch).
    """
    paths = sorted(Path(instance_dir).glob("*.json"))
    header = [
        "instance", "signals", "free_ecus",
        "exact_criterion", "cah_criterion", "cah_gap_permille",
        "ga_criterion", "ga_gap_permille",
        "lbsc", "single_slots",
        "first_iter_slots", "first_iter_gw_slots", "best_slots", "best_gw_slots",
        "exact_ms", "cah_ms", "ga_ms", "single_ms", "driver_ms",
        "error",
    ]
    rows = [header]
    numeric: list[list[float]] = []
    failures = 0
    for path in paths:
        try:
            inst = load_instance(path)
            hg = build_hypergraph(inst)
            params = CriterionParams(alpha=asg_mod.default_alpha(hg), beta=1.0)

            t0 = time.perf_counter()
            exact = asg_mod.solve_exact(hg, params, time_limit_ms=exact_time_limit_ms)
            t1 = time.perf_counter()
            cah = asg_mod.solve_cah(hg, params, tries_count=cah_tries, rng_seed=seed)
            t2 = time.perf_counter()
            ga = asg_mod.solve_ga(hg, params, rng_seed=seed)
            t3 = time.perf_counter()
            single = schedule_single_channel(inst)
            t4 = time.perf_counter()
            result = run(inst, DriverConfig(
                assignment_solver="CAH", cah_tries=cah_tries, rng_seed=seed,
                max_iterations=max_iterations))
            t5 = time.perf_counter()

            first = result.log[0]
            bound = lbsc(inst.signals, inst.config.slot_payload_bytes)
            values = [
                len(inst.signals), len(hg.free_ecus),
                exact.criterion, cah.criterion,
                _gap_permille(cah.criterion, exact.criterion),
                ga.criterion, _gap_permille(ga.criterion, exact.criterion),
                bound, single.max_slot(CH_A),
                max(first.slots_a, first.slots_b), first.gw_slots,
                result.schedule.allocated_slots(),
                result.schedule.gateway_slot_count(),
            ]
            timings = [
                (t1 - t0) * 1000, (t2 - t1) * 1000, (t3 - t2) * 1000,
                (t4 - t3) * 1000, (t5 - t4) * 1000,
            ]
            numeric.append(values + timings)
            timing_cells = [_fmt(t) for t in timings] if include_timings else [""] * 5
            rows.append([path.stem] + [_fmt(v) for v in values] + timing_cells + [""])
        except Exception as exc:  # soft failure: record and continue
            failures += 1
            rows.append([path.stem] + [""] * (len(header) - 2) + [str(exc)])

    if numeric:
        means = [sum(col) / len(col) for col in zip(*numeric)]
        timing_cells = ([_fmt(t) for t in means[13:]] if include_timings else [""] * 5)
        rows.append(["average"] + [_fmt(v) for v in means[:13]] + timing_cells + [""])
    _write_csv(out_csv, rows)
    return failures


def run_sweep(base_profile: gen_mod.GeneratorProfile, out_csv: str | Path, *,
              step: float = 0.05, instances_per_point: int = 3, seed: int = 0,
              cah_tries: int = 50, max_iterations: int = 5) -> int:
    """Mean allocated slots per (common fraction, fault-tolerant fraction)
    grid point; one CSV row per point, suitable for surface plotting."""
    rows = [["common_ecu_fraction", "fault_tolerant_fraction",
             "mean_slots", "mean_gw_slots", "error"]]
    failures = 0
    for profile in gen_mod.sweep_profiles(base_profile, step=step):
        try:
            slots = []
            gw_slots = []
            for k in range(instances_per_point):
                inst = gen_mod.generate(profile, seed=seed + k)
                result = run(inst, DriverConfig(
                    assignment_solver="CAH", cah_tries=cah_tries,
                    max_iterations=max_iterations, rng_seed=seed + k))
                slots.append(result.schedule.allocated_slots())
                gw_slots.append(result.schedule.gateway_slot_count())
            rows.append([
                _fmt(profile.common_ecu_fraction),
                _fmt(profile.fault_tolerant_fraction),
                _fmt(sum(slots) / len(slots)), _fmt(sum(gw_slots) / len(gw_slots)), "",
            ])
        except Exception as exc:
            failures += 1
            rows.append([_fmt(profile.common_ecu_fraction),
                         _fmt(profile.fault_tolerant_fraction), "", "", str(exc)])
    _write_csv(out_csv, rows)
    return failures


def _cmd_solve(args) -> int:
    inst = load_instance(args.instance)
    cfg = DriverConfig(
        alpha=args.alpha,
        max_iterations=args.iters,
        assignment_solver=_SOLVER_NAMES[args.solver],
        cah_tries=args.tries,
        rng_seed=args.seed,
    )
    result = run(inst, cfg)
    print(json.dumps(result.assignment.to_json_dict(), sort_keys=True))
    sched = result.schedule
    print(f"slots A={sched.max_slot(CH_A)} B={sched.max_slot(CH_B)} "
          f"allocated={sched.allocated_slots()} gateway={sched.gateway_slot_count()} "
          f"iterations={len(result.log)}")
    if args.csv:
        _write_csv(args.csv, log_to_csv_rows(result.log))
    if args.fibex:
        export_fibex(inst, result.assignment, sched, args.fibex)
    return 0


def _cmd_generate(args) -> int:
    profile = gen_mod.load_profile(args.profile)
    inst = gen_mod.generate(profile, seed=args.seed)
    save_instance(inst, args.out)
    print(f"wrote {args.out}: {len(inst.ecus)} ECUs, {len(inst.signals)} signals")
    return 0


def _cmd_bench(args) -> int:
    failures = run_benchmark(
        args.dir, args.csv, seed=args.seed, cah_tries=args.tries,
        max_iterations=args.iters, exact_time_limit_ms=args.time_limit_ms,
        include_timings=not args.no_timings)
    print(f"wrote {args.csv} ({failures} failed instance(s))")
    return 0


def _cmd_sweep(args) -> int:
    profile = gen_mod.load_profile(args.profile)
    failures = run_sweep(
        profile, args.csv, step=args.step, instances_per_point=args.instances,
        seed=args.seed, cah_tries=args.tries, max_iterations=args.iters)
    print(f"wrote {args.csv} ({failures} failed point(s))")
    return 0


def _cmd_validate(args) -> int:
    inst = load_instance(args.instance)
    sched, channel_of = read_fibex(args.schedule)
    hg = build_hypergraph(inst)
    missing = [u for u in hg.free_ecus if u not in channel_of]
    if missing:
        raise FormatError(f"schedule file lacks channel assignments for ECUs {missing}")
    p_a, p_b, p_g, crit = asg_mod.evaluate_criterion(
        hg, channel_of, CriterionParams(alpha=asg_mod.default_alpha(hg)))
    asg = asg_mod.ChannelAssignment(
        channel_of=channel_of, payload_a=p_a, payload_b=p_b, payload_gw=p_g,
        criterion=crit)
    violations = validate(inst, asg, sched)
    print(json.dumps([v.to_json_dict() for v in violations]))
    return 1 if violations else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flexseg",
        description="Dual-channel FlexRay static segment scheduling toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="schedule one instance")
    p.add_argument("instance")
    p.add_argument("--solver", choices=sorted(_SOLVER_NAMES), default="cah")
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--iters", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tries", type=int, default=1000)
    p.add_argument("--fibex", metavar="PATH")
    p.add_argument("--csv", metavar="PATH")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("generate", help="synthesize an instance from a profile")
    p.add_argument("--profile", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("bench", help="solver comparison over an instance directory")
    p.add_argument("--dir", required=True)
    p.add_argument("--csv", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tries", type=int, default=1000)
    p.add_argument("--iters", type=int, default=10)
    p.add_argument("--time-limit-ms", type=int, default=60_000)
    p.add_argument("--no-timings", action="store_true",
                   help="blank the wall-clock columns for reproducible output")
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("sweep", help="common-ECU x fault-tolerance grid")
    p.add_argument("--profile", required=True)
    p.add_argument("--csv", required=True)
    p.add_argument("--step", type=float, default=0.05)
    p.add_argument("--instances", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tries", type=int, default=50)
    p.add_argument("--iters", type=int, default=5)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("validate", help="check an exported schedule")
    p.add_argument("instance")
    p.add_argument("schedule")
    p.set_defaults(func=_cmd_validate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (FormatError, ValidationError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
