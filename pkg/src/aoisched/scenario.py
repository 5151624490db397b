"""Scenario files, sweep execution, and CSV emission.

A scenario is a YAML document describing one experiment: a system spec, one
swept parameter, a list of shared-server policies, and how to evaluate them
(analytically, by simulation, or both).  ``run_scenario`` produces one row
per (sweep value, policy, source) plus an aggregate row per (sweep value,
policy); ``emit_csv``/``parse_csv`` round-trip the table losslessly.

Schema (all rate/weight lists are per source, 1-based in parameter names)::

    name: demo
    spec:
      mu_shared: 8.0
      mu_dedicated: [1.0, 2.0, 3.0]
      weights: [0.2, 0.5, 0.3]
      normalize_weights: false      # optional: accept any positive weights
    sweep:
      parameter: mu_dedicated[1]    # mu_shared | mu_dedicated[i] | weights[i]
                                    #   | p[i] | pattern-k
      values: [1, 2, 3]
    policies: [PS-opt, IS, PAC]     # also UPS, RR, fixed-pmf, fixed-schedule
    evaluation: analytic            # analytic | simulated | both
    sim:                            # optional, only used when simulating
      horizon: 10000.0
      replications: 20
      seed: 0
      warmup_fraction: 0.01
    policy_params:                  # optional, for fixed-* policies
      pmf: [0.5, 0.5]
      schedule: [1, 2]
      pattern_source: 1             # pattern-k sweeps only
      pattern_length: 30
    is_cap: 12                      # optional insertion-search source cap
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace

import yaml

from .cs import BinaryPattern, CyclicSchedule, cs_mean_aoi, project_pattern
from .errors import AoischedError, ScenarioError
from .ps import ps_closed_form
from .schedulers import insertion_search, pac_build, round_robin_schedule, uniform_pmf
from .sim import SimConfig, simulate
from .system import Pmf, SystemSpec
from .waterfill import optimize_ps

POLICIES = ("PS-opt", "UPS", "RR", "IS", "PAC", "fixed-pmf", "fixed-schedule")
EVALUATIONS = ("analytic", "simulated", "both")
DEFAULT_IS_CAP = 12

CSV_HEADER = (
    "scenario", "sweep_param", "sweep_value", "policy", "source",
    "analytic_aoi", "sim_aoi", "ci_halfwidth", "weighted",
)
PMF_CSV_HEADER = ("scenario", "sweep_param", "sweep_value", "policy", "source", "p")


@dataclass(frozen=True)
class SimSettings:
    horizon: float = 10000.0
    replications: int = 20
    seed: int = 0
    warmup_fraction: float = 0.01


@dataclass(frozen=True)
class Scenario:
    name: str
    spec: SystemSpec
    sweep_param: str
    sweep_values: tuple[float, ...]
    policies: tuple[str, ...]
    evaluation: str = "analytic"
    sim: SimSettings = field(default_factory=SimSettings)
    fixed_pmf: Pmf | None = None
    fixed_schedule: CyclicSchedule | None = None
    pattern_source: int = 1
    pattern_length: int = 30
    is_cap: int = DEFAULT_IS_CAP


@dataclass(frozen=True)
class ResultRow:
    """One CSV row; ``source`` is a 1-based index string or ``*`` for aggregates."""

    scenario: str
    sweep_param: str
    sweep_value: float
    policy: str
    source: str
    analytic_aoi: float | None
    sim_aoi: float | None
    ci_halfwidth: float | None
    weighted: float | None


def _require(mapping: dict, key: str, context: str):
    if key not in mapping:
        raise ScenarioError(f"{context}: missing required field {key!r}")
    return mapping[key]


def _parse_sweep_param(param: str, num_sources: int) -> str:
    param = param.strip()
    if param in ("mu_shared", "pattern-k"):
        return param
    for prefix in ("mu_dedicated", "weights", "p"):
        if param.startswith(prefix + "[") and param.endswith("]"):
            try:
                idx = int(param[len(prefix) + 1:-1])
            except ValueError as exc:
                raise ScenarioError(f"sweep parameter {param!r}: bad index") from exc
            if not 1 <= idx <= num_sources:
                raise ScenarioError(
                    f"sweep parameter {param!r}: index out of range 1..{num_sources}"
                )
            return f"{prefix}[{idx}]"
    raise ScenarioError(
        f"unknown sweep parameter {param!r}; expected mu_shared, mu_dedicated[i], "
        "weights[i], p[i] or pattern-k"
    )


def load_scenario(path: str) -> Scenario:
    """Parse and validate a scenario file."""
    try:
        with open(path) as fh:
            doc = yaml.safe_load(fh)
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ScenarioError(f"scenario file {path} is not valid YAML: {exc}") from exc
    if not isinstance(doc, dict):
        raise ScenarioError(f"scenario file {path} must hold a mapping")
    return scenario_from_dict(doc, context=path)


def scenario_from_dict(doc: dict, context: str = "scenario") -> Scenario:
    name = str(_require(doc, "name", context))
    spec_doc = _require(doc, "spec", context)
    try:
        builder = (
            SystemSpec.from_unnormalized
            if spec_doc.get("normalize_weights", False)
            else SystemSpec
        )
        spec = builder(
            float(_require(spec_doc, "mu_shared", f"{context}.spec")),
            tuple(float(x) for x in _require(spec_doc, "mu_dedicated", f"{context}.spec")),
            tuple(float(x) for x in _require(spec_doc, "weights", f"{context}.spec")),
        )
    except (AoischedError, TypeError, ValueError) as exc:
        raise ScenarioError(f"{context}.spec: {exc}") from exc

    sweep_doc = _require(doc, "sweep", context)
    param = _parse_sweep_param(
        str(_require(sweep_doc, "parameter", f"{context}.sweep")), spec.num_sources
    )
    values = tuple(float(v) for v in _require(sweep_doc, "values", f"{context}.sweep"))
    if not values:
        raise ScenarioError(f"{context}.sweep: values list is empty")

    policies = tuple(str(p) for p in _require(doc, "policies", context))
    if not policies:
        raise ScenarioError(f"{context}: policy list is empty")
    for p in policies:
        if p not in POLICIES:
            raise ScenarioError(f"{context}: unknown policy {p!r}; choose from {POLICIES}")

    evaluation = str(doc.get("evaluation", "analytic"))
    if evaluation not in EVALUATIONS:
        raise ScenarioError(f"{context}: evaluation must be one of {EVALUATIONS}")

    sim_doc = doc.get("sim", {}) or {}
    try:
        sim = SimSettings(
            horizon=float(sim_doc.get("horizon", SimSettings.horizon)),
            replications=int(sim_doc.get("replications", SimSettings.replications)),
            seed=int(sim_doc.get("seed", SimSettings.seed)),
            warmup_fraction=float(sim_doc.get("warmup_fraction", SimSettings.warmup_fraction)),
        )
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"{context}.sim: {exc}") from exc

    params = doc.get("policy_params", {}) or {}
    fixed_pmf = None
    if "pmf" in params:
        try:
            fixed_pmf = Pmf(tuple(float(x) for x in params["pmf"]))
        except (AoischedError, TypeError, ValueError) as exc:
            raise ScenarioError(f"{context}.policy_params.pmf: {exc}") from exc
    fixed_schedule = None
    if "schedule" in params:
        try:
            fixed_schedule = CyclicSchedule(tuple(int(s) for s in params["schedule"]))
        except (TypeError, ValueError) as exc:
            raise ScenarioError(f"{context}.policy_params.schedule: {exc}") from exc

    return Scenario(
        name=name,
        spec=spec,
        sweep_param=param,
        sweep_values=values,
        policies=policies,
        evaluation=evaluation,
        sim=sim,
        fixed_pmf=fixed_pmf,
        fixed_schedule=fixed_schedule,
        pattern_source=int(params.get("pattern_source", 1)),
        pattern_length=int(params.get("pattern_length", 30)),
        is_cap=int(doc.get("is_cap", DEFAULT_IS_CAP)),
    )


def _swept_spec(spec: SystemSpec, param: str, value: float) -> SystemSpec:
    if param == "mu_shared":
        return SystemSpec(value, spec.mu_dedicated, spec.weights)
    if param.startswith("mu_dedicated["):
        idx = int(param[len("mu_dedicated["):-1]) - 1
        rates = list(spec.mu_dedicated)
        rates[idx] = value
        return SystemSpec(spec.mu_shared, tuple(rates), spec.weights)
    if param.startswith("weights["):
        idx = int(param[len("weights["):-1]) - 1
        if not 0.0 < value < 1.0:
            raise ScenarioError(f"swept weight must lie in (0, 1), got {value}")
        w = list(spec.weights)
        others = sum(w) - w[idx]
        scale = (1.0 - value) / others
        w = [value if i == idx else x * scale for i, x in enumerate(w)]
        return SystemSpec(spec.mu_shared, spec.mu_dedicated, tuple(w))
    # p[i] and pattern-k sweeps reshape the policy, not the system.
    return spec


def _swept_pmf(base: Pmf, param: str, value: float) -> Pmf:
    if not param.startswith("p["):
        return base
    idx = int(param[len("p["):-1]) - 1
    if not 0.0 <= value <= 1.0:
        raise ScenarioError(f"swept probability must lie in [0, 1], got {value}")
    p = list(base.p)
    others = sum(p) - p[idx]
    if others <= 0.0 and value < 1.0:
        raise ScenarioError(
            "p[i] sweep needs positive mass on the other sources to rescale"
        )
    scale = 0.0 if value == 1.0 else (1.0 - value) / others
    p = [value if i == idx else x * scale for i, x in enumerate(p)]
    return Pmf(tuple(p))


def _pattern_k_schedule(scenario: Scenario, k: int) -> CyclicSchedule:
    m = scenario.pattern_length
    src = scenario.pattern_source
    n = scenario.spec.num_sources
    if not 1 <= src <= n:
        raise ScenarioError(f"pattern_source {src} out of range 1..{n}")
    if not 1 <= k <= m:
        raise ScenarioError(f"pattern-k value {k} out of range 1..{m}")
    others = [s for s in range(1, n + 1) if s != src]
    if not others and k < m:
        raise ScenarioError("pattern-k needs a second source to fill vacation slots")
    serve = BinaryPattern.evenly_spread(m, k).serve
    slots = []
    fill = 0
    for is_serve in serve:
        if is_serve:
            slots.append(src)
        else:
            slots.append(others[fill % len(others)])
            fill += 1
    return CyclicSchedule(tuple(slots))


def resolve_policy(
    scenario: Scenario, policy: str, spec: SystemSpec, value: float
) -> Pmf | CyclicSchedule:
    """Materialize a policy name into scheduling probabilities or a schedule."""
    n = spec.num_sources
    if policy == "PS-opt":
        return optimize_ps(spec)
    if policy == "UPS":
        return uniform_pmf(n)
    if policy == "RR":
        return round_robin_schedule(n)
    if policy == "IS":
        if n > scenario.is_cap:
            raise ScenarioError(
                f"insertion search is disabled for N={n} sources (cap {scenario.is_cap}): "
                "its per-iteration cost grows too quickly; raise is_cap to force it"
            )
        return insertion_search(spec).schedule
    if policy == "PAC":
        return pac_build(spec, optimize_ps(spec)).schedule
    if policy == "fixed-pmf":
        if scenario.fixed_pmf is None:
            raise ScenarioError("policy fixed-pmf needs policy_params.pmf")
        return _swept_pmf(scenario.fixed_pmf, scenario.sweep_param, value)
    if policy == "fixed-schedule":
        if scenario.sweep_param == "pattern-k":
            return _pattern_k_schedule(scenario, int(value))
        if scenario.fixed_schedule is None:
            raise ScenarioError("policy fixed-schedule needs policy_params.schedule")
        return scenario.fixed_schedule
    raise ScenarioError(f"unknown policy {policy!r}")


def _analytic_per_source(spec: SystemSpec, policy: Pmf | CyclicSchedule) -> list[float]:
    if isinstance(policy, Pmf):
        return [
            ps_closed_form(spec.mu_dedicated[i], spec.mu_shared, policy.p[i])
            for i in range(spec.num_sources)
        ]
    return [
        cs_mean_aoi(
            project_pattern(policy, i + 1), spec.mu_dedicated[i], spec.mu_shared
        )
        for i in range(spec.num_sources)
    ]


def run_scenario(scenario: Scenario, sim_overrides: dict | None = None) -> list[ResultRow]:
    """Evaluate every (sweep value, policy) pair and collect the result table.

    Aggregate rows are recomputed from the per-source rows so the two can
    never drift apart.  ``sim_overrides`` may replace horizon, replications
    or seed from the command line.
    """
    settings = scenario.sim
    if sim_overrides:
        settings = replace(settings, **sim_overrides)
    rows: list[ResultRow] = []
    weights = scenario.spec.weights
    for value in scenario.sweep_values:
        spec = _swept_spec(scenario.spec, scenario.sweep_param, value)
        for policy_name in scenario.policies:
            policy = resolve_policy(scenario, policy_name, spec, value)
            analytic = (
                _analytic_per_source(spec, policy)
                if scenario.evaluation in ("analytic", "both")
                else None
            )
            estimate = None
            if scenario.evaluation in ("simulated", "both"):
                estimate = simulate(
                    SimConfig(
                        spec=spec,
                        policy=policy,
                        horizon=settings.horizon,
                        warmup_fraction=settings.warmup_fraction,
                        seed=settings.seed,
                        replications=settings.replications,
                    )
                )
            for i in range(spec.num_sources):
                rows.append(
                    ResultRow(
                        scenario=scenario.name,
                        sweep_param=scenario.sweep_param,
                        sweep_value=value,
                        policy=policy_name,
                        source=str(i + 1),
                        analytic_aoi=None if analytic is None else analytic[i],
                        sim_aoi=None if estimate is None else estimate.per_source_aoi[i],
                        ci_halfwidth=None if estimate is None else estimate.ci_halfwidth[i],
                        weighted=None,
                    )
                )
            agg_analytic = (
                None if analytic is None
                else sum(w * a for w, a in zip(weights, analytic))
            )
            agg_sim = (
                None if estimate is None
                else sum(w * a for w, a in zip(weights, estimate.per_source_aoi))
            )
            rows.append(
                ResultRow(
                    scenario=scenario.name,
                    sweep_param=scenario.sweep_param,
                    sweep_value=value,
                    policy=policy_name,
                    source="*",
                    analytic_aoi=agg_analytic,
                    sim_aoi=agg_sim,
                    ci_halfwidth=None,
                    weighted=agg_analytic if agg_analytic is not None else agg_sim,
                )
            )
    return rows


def optimal_pmf_table(scenario: Scenario) -> list[tuple[str, str, float, str, str, float]]:
    """Per-source scheduling probabilities of every pmf-valued policy in the sweep.

    Kept out of the main result table (whose column set is fixed); the CLI
    writes it next to the main CSV so probability trajectories such as the
    large-shared-rate convergence to 1/N are directly plottable.
    """
    rows = []
    for value in scenario.sweep_values:
        spec = _swept_spec(scenario.spec, scenario.sweep_param, value)
        for policy_name in scenario.policies:
            if policy_name not in ("PS-opt", "UPS", "fixed-pmf"):
                continue
            policy = resolve_policy(scenario, policy_name, spec, value)
            for i, p in enumerate(policy.p, start=1):
                rows.append(
                    (scenario.name, scenario.sweep_param, value, policy_name, str(i), p)
                )
    return rows


def _format_cell(value: float | None) -> str:
    # repr() of a Python float is the shortest string that parses back to
    # the same double, so the CSV round-trips bit-exactly.
    return "" if value is None else repr(float(value))


def emit_csv(rows: list[ResultRow], destination) -> None:
    """Write the result table; numbers keep full double precision."""
    if not rows:
        raise ValueError("refusing to write an empty result table")
    own = isinstance(destination, (str, bytes))
    fh = open(destination, "w", newline="") if own else destination
    try:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for r in rows:
            writer.writerow([
                r.scenario, r.sweep_param, _format_cell(r.sweep_value), r.policy,
                r.source, _format_cell(r.analytic_aoi), _format_cell(r.sim_aoi),
                _format_cell(r.ci_halfwidth), _format_cell(r.weighted),
            ])
    finally:
        if own:
            fh.close()


def emit_pmf_csv(rows, destination) -> None:
    own = isinstance(destination, (str, bytes))
    fh = open(destination, "w", newline="") if own else destination
    try:
        writer = csv.writer(fh)
        writer.writerow(PMF_CSV_HEADER)
        for row in rows:
            writer.writerow([
                row[0], row[1], _format_cell(row[2]), row[3], row[4], _format_cell(row[5]),
            ])
    finally:
        if own:
            fh.close()


def parse_csv(source) -> list[ResultRow]:
    """Inverse of :func:`emit_csv`; round-trips bit-exactly."""
    own = isinstance(source, (str, bytes))
    fh = open(source, newline="") if own else source
    try:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != CSV_HEADER:
            raise ScenarioError(f"unexpected CSV header {header!r}")
        rows = []
        for rec in reader:
            if len(rec) != len(CSV_HEADER):
                raise ScenarioError(f"malformed CSV record {rec!r}")
            def opt(cell: str) -> float | None:
                return None if cell == "" else float(cell)
            rows.append(
                ResultRow(
                    scenario=rec[0], sweep_param=rec[1], sweep_value=float(rec[2]),
                    policy=rec[3], source=rec[4], analytic_aoi=opt(rec[5]),
                    sim_aoi=opt(rec[6]), ci_halfwidth=opt(rec[7]), weighted=opt(rec[8]),
                )
            )
        return rows
    finally:
        if own:
            fh.close()


def rows_to_string(rows: list[ResultRow]) -> str:
    buf = io.StringIO()
    emit_csv(rows, buf)
    return buf.getvalue()
