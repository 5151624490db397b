"""Command-line experiment runner.

Verbs: ``analyze-ps``, ``analyze-cs``, ``optimize``, ``build-is``,
``build-pac``, ``simulate``, ``run <scenario-file>``, ``time-policies``.
Exit codes: 0 on success, 1 on configuration errors (bad flags, bad
scenario files, invalid system parameters), 2 on runtime errors.
"""

from __future__ import annotations

import argparse
import sys

from .cs import CyclicSchedule, cs_mean_aoi, cs_weighted_aoi, project_pattern
from .errors import AoischedError, ConvergenceError, ScenarioError, SingularChainError
from .ps import ps_closed_form, ps_weighted_aoi
from .schedulers import insertion_search, pac_build, time_policies
from .scenario import (
    ResultRow,
    emit_csv,
    emit_pmf_csv,
    load_scenario,
    optimal_pmf_table,
    run_scenario,
)
from .sim import SimConfig, simulate
from .system import Pmf, SystemSpec
from .waterfill import kkt_residual, optimize_ps


class _CliParser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad flags; config errors must exit 1."""

    def error(self, message):
        raise ScenarioError(message)


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip() != ""]
    except ValueError as exc:
        raise ScenarioError(f"expected a comma-separated number list, got {text!r}") from exc


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip() != ""]
    except ValueError as exc:
        raise ScenarioError(f"expected a comma-separated integer list, got {text!r}") from exc


def _spec_from_args(args) -> SystemSpec:
    rates = _float_list(args.rates)
    if args.weights is not None:
        weights = _float_list(args.weights)
    else:
        weights = [1.0 / len(rates)] * len(rates)
    builder = SystemSpec.from_unnormalized if args.normalize_weights else SystemSpec
    return builder(args.mu, tuple(rates), tuple(weights))


def _add_spec_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--mu", type=float, required=True, help="shared-server rate")
    sub.add_argument(
        "--rates", required=True, help="dedicated rates, comma separated (one per source)"
    )
    sub.add_argument(
        "--weights", default=None, help="source weights, comma separated (default uniform)"
    )
    sub.add_argument(
        "--normalize-weights", action="store_true",
        help="accept weights of any positive total and normalize them",
    )


def _print_table(args, rows: list[tuple[int, float]], weighted: float, label: str) -> None:
    if not args.quiet:
        for src, val in rows:
            print(f"source {src}: {label} = {val!r}")
        print(f"weighted: {weighted!r}")


def _rows_for_out(name: str, per_source, weighted, weights, sim=None) -> list[ResultRow]:
    rows = []
    for i, val in enumerate(per_source, start=1):
        rows.append(ResultRow(
            scenario=name, sweep_param="none", sweep_value=0.0, policy=name,
            source=str(i),
            analytic_aoi=val if sim is None else None,
            sim_aoi=None if sim is None else val,
            ci_halfwidth=None if sim is None else sim[i - 1],
            weighted=None,
        ))
    rows.append(ResultRow(
        scenario=name, sweep_param="none", sweep_value=0.0, policy=name, source="*",
        analytic_aoi=weighted if sim is None else None,
        sim_aoi=None if sim is None else weighted,
        ci_halfwidth=None, weighted=weighted,
    ))
    return rows


def _cmd_analyze_ps(args) -> int:
    spec = _spec_from_args(args)
    pmf = Pmf(tuple(_float_list(args.pmf)))
    per_source = [
        ps_closed_form(spec.mu_dedicated[i], spec.mu_shared, pmf.p[i])
        for i in range(spec.num_sources)
    ]
    weighted = ps_weighted_aoi(spec, pmf)
    _print_table(args, list(enumerate(per_source, 1)), weighted, "mean age")
    if args.out:
        emit_csv(_rows_for_out("analyze-ps", per_source, weighted, spec.weights), args.out)
    return 0


def _cmd_analyze_cs(args) -> int:
    spec = _spec_from_args(args)
    schedule = CyclicSchedule(tuple(_int_list(args.schedule)))
    per_source = [
        cs_mean_aoi(project_pattern(schedule, i + 1), spec.mu_dedicated[i], spec.mu_shared)
        for i in range(spec.num_sources)
    ]
    weighted = cs_weighted_aoi(spec, schedule)
    _print_table(args, list(enumerate(per_source, 1)), weighted, "mean age")
    if args.out:
        emit_csv(_rows_for_out("analyze-cs", per_source, weighted, spec.weights), args.out)
    return 0


def _cmd_optimize(args) -> int:
    spec = _spec_from_args(args)
    pmf = optimize_ps(spec, epsilon=args.eps)
    if not args.quiet:
        for i, p in enumerate(pmf.p, start=1):
            print(f"p[{i}] = {p!r}")
        print(f"weighted age = {ps_weighted_aoi(spec, pmf)!r}")
        print(f"kkt residual = {kkt_residual(spec, pmf)!r}")
    if args.out:
        emit_pmf_csv(
            [("optimize", "none", 0.0, "PS-opt", str(i + 1), p)
             for i, p in enumerate(pmf.p)],
            args.out,
        )
    return 0


def _cmd_build_is(args) -> int:
    spec = _spec_from_args(args)
    report = insertion_search(spec, exploration=args.exploration, max_len=args.max_len)
    if not args.quiet:
        print("schedule:", ",".join(str(s) for s in report.schedule.slots))
        print(f"weighted age = {report.weighted_aoi!r} after {report.iterations} iterations")
        if args.trace:
            for it, sched, val in report.trace:
                print(f"  iter {it}: {val!r}  {','.join(map(str, sched.slots))}")
    return 0


def _cmd_build_pac(args) -> int:
    spec = _spec_from_args(args)
    pmf = optimize_ps(spec)
    report = pac_build(spec, pmf, max_period=args.max_period)
    if not args.quiet:
        print("schedule:", ",".join(str(s) for s in report.schedule.slots))
        print(f"weighted age = {report.weighted_aoi!r} (period {len(report.schedule.slots)})")
    return 0


def _cmd_simulate(args) -> int:
    spec = _spec_from_args(args)
    if (args.pmf is None) == (args.schedule is None):
        raise ScenarioError("give exactly one of --pmf or --schedule")
    policy = (
        Pmf(tuple(_float_list(args.pmf)))
        if args.pmf is not None
        else CyclicSchedule(tuple(_int_list(args.schedule)))
    )
    config = SimConfig(
        spec=spec, policy=policy, horizon=args.horizon,
        warmup_fraction=args.warmup, seed=args.seed, replications=args.reps,
    )
    est = simulate(config, event_log=args.event_log)
    if not args.quiet:
        for i, (val, hw) in enumerate(zip(est.per_source_aoi, est.ci_halfwidth), 1):
            print(f"source {i}: mean age = {val!r} +- {hw!r}")
        print(f"weighted: {est.weighted_aoi!r}  ({est.events} events)")
    if args.out:
        emit_csv(
            _rows_for_out("simulate", est.per_source_aoi, est.weighted_aoi,
                          spec.weights, sim=est.ci_halfwidth),
            args.out,
        )
    return 0


def _cmd_run(args) -> int:
    scenario = load_scenario(args.scenario)
    overrides = {}
    if args.horizon is not None:
        overrides["horizon"] = args.horizon
    if args.reps is not None:
        overrides["replications"] = args.reps
    if args.seed is not None:
        overrides["seed"] = args.seed
    rows = run_scenario(scenario, sim_overrides=overrides or None)
    if args.out:
        emit_csv(rows, args.out)
        pmf_rows = optimal_pmf_table(scenario)
        if pmf_rows:
            emit_pmf_csv(pmf_rows, args.out + ".pmf.csv")
        if not args.quiet:
            print(f"wrote {len(rows)} rows to {args.out}")
            if pmf_rows:
                print(f"wrote scheduling probabilities to {args.out}.pmf.csv")
    elif not args.quiet:
        emit_csv(rows, sys.stdout)
    return 0


def _cmd_time_policies(args) -> int:
    rows = time_policies(args.sizes, is_cap=args.is_cap)
    for n, policy, seconds in rows:
        print(f"N={n}\t{policy}\t{seconds!r}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _CliParser(prog="aoisched", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", default=None, help="write results as CSV to this path")
        p.add_argument("--quiet", action="store_true", help="suppress stdout report")

    p = sub.add_parser("analyze-ps", help="per-source mean age under scheduling probabilities")
    _add_spec_flags(p)
    p.add_argument("--pmf", required=True, help="scheduling probabilities, comma separated")
    common(p)
    p.set_defaults(func=_cmd_analyze_ps)

    p = sub.add_parser("analyze-cs", help="per-source mean age under a cyclic schedule")
    _add_spec_flags(p)
    p.add_argument("--schedule", required=True, help="slot sources, comma separated, 1-based")
    common(p)
    p.set_defaults(func=_cmd_analyze_cs)

    p = sub.add_parser("optimize", help="optimal scheduling probabilities")
    _add_spec_flags(p)
    p.add_argument("--eps", type=float, default=1e-9, help="allocation tolerance")
    common(p)
    p.set_defaults(func=_cmd_optimize)

    p = sub.add_parser("build-is", help="insertion-search cyclic schedule")
    _add_spec_flags(p)
    p.add_argument("--exploration", type=int, default=6,
                   help="consecutive non-improving iterations tolerated")
    p.add_argument("--max-len", type=int, default=64, help="schedule length cap")
    p.add_argument("--trace", action="store_true", help="print the iteration trace")
    common(p)
    p.set_defaults(func=_cmd_build_is)

    p = sub.add_parser("build-pac", help="probability-aided cyclic schedule")
    _add_spec_flags(p)
    p.add_argument("--max-period", type=int, default=50, help="largest period considered")
    common(p)
    p.set_defaults(func=_cmd_build_pac)

    p = sub.add_parser("simulate", help="discrete-event simulation of one policy")
    _add_spec_flags(p)
    p.add_argument("--pmf", default=None, help="scheduling probabilities, comma separated")
    p.add_argument("--schedule", default=None, help="slot sources, comma separated")
    p.add_argument("--horizon", type=float, default=10000.0, help="simulated time per replication")
    p.add_argument("--reps", type=int, default=20, help="independent replications")
    p.add_argument("--seed", type=int, default=0, help="stream seed")
    p.add_argument("--warmup", type=float, default=0.01, help="warmup fraction excluded")
    p.add_argument("--event-log", default=None, help="dump first replication's events here")
    common(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("run", help="run a scenario file")
    p.add_argument("scenario", help="path to a scenario YAML file")
    p.add_argument("--horizon", type=float, default=None, help="override simulated time")
    p.add_argument("--reps", type=int, default=None, help="override replications")
    p.add_argument("--seed", type=int, default=None, help="override stream seed")
    common(p)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("time-policies", help="wall-clock build times of the schedulers")
    p.add_argument("sizes", type=int, nargs="+", help="source counts to time (N >= 2)")
    p.add_argument("--is-cap", type=int, default=12,
                   help="largest N for which insertion search is timed")
    p.set_defaults(func=_cmd_time_policies)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except (ScenarioError,) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except AoischedError as exc:
        # Invalid rates, probabilities, dimensions: the configuration was
        # wrong; solver breakdowns are genuine runtime failures.
        if isinstance(exc, (ConvergenceError, SingularChainError)):
            print(f"runtime error: {exc}", file=sys.stderr)
            return 2
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports and exits
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
