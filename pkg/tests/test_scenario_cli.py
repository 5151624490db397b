"""Scenario files, the sweep runner, CSV round-trip, and the CLI."""

import glob
import io
import os

import pytest

from aoisched.cli import main
from aoisched.errors import ScenarioError
from aoisched.scenario import (
    ResultRow,
    Scenario,
    SimSettings,
    emit_csv,
    load_scenario,
    optimal_pmf_table,
    parse_csv,
    resolve_policy,
    run_scenario,
    rows_to_string,
    scenario_from_dict,
)
from aoisched.system import Pmf, SystemSpec

SCENARIO_DIR = os.path.join(os.path.dirname(__file__), "..", "scenarios")


def small_scenario(**overrides) -> Scenario:
    base = dict(
        name="mini",
        spec=SystemSpec(4.0, (3.0, 1.0), (0.5, 0.5)),
        sweep_param="p[1]",
        sweep_values=(0.3, 0.7),
        policies=("fixed-pmf",),
        evaluation="both",
        sim=SimSettings(horizon=4000.0, replications=4, seed=5),
        fixed_pmf=Pmf((0.5, 0.5)),
    )
    base.update(overrides)
    return Scenario(**base)


class TestScenarioParsing:
    @pytest.mark.parametrize(
        "path", sorted(glob.glob(os.path.join(SCENARIO_DIR, "*.yaml")))
    )
    def test_bundled_scenarios_parse(self, path):
        scenario = load_scenario(path)
        assert scenario.sweep_values
        assert scenario.policies

    def test_unknown_policy_rejected(self):
        doc = {
            "name": "x",
            "spec": {"mu_shared": 1.0, "mu_dedicated": [1.0], "weights": [1.0]},
            "sweep": {"parameter": "mu_shared", "values": [1.0]},
            "policies": ["definitely-not-a-policy"],
        }
        with pytest.raises(ScenarioError):
            scenario_from_dict(doc)

    def test_missing_field_reported_with_context(self):
        with pytest.raises(ScenarioError, match="mu_shared"):
            scenario_from_dict({
                "name": "x",
                "spec": {"mu_dedicated": [1.0], "weights": [1.0]},
                "sweep": {"parameter": "mu_shared", "values": [1.0]},
                "policies": ["RR"],
            })

    def test_bad_sweep_parameter(self):
        doc = {
            "name": "x",
            "spec": {"mu_shared": 1.0, "mu_dedicated": [1.0], "weights": [1.0]},
            "sweep": {"parameter": "mu_dedicated[4]", "values": [1.0]},
            "policies": ["RR"],
        }
        with pytest.raises(ScenarioError, match="out of range"):
            scenario_from_dict(doc)

    def test_unreadable_file(self):
        with pytest.raises(ScenarioError):
            load_scenario("/nonexistent/scenario.yaml")


class TestSweeps:
    def test_weight_sweep_rescales_others_proportionally(self):
        from aoisched.scenario import _swept_spec

        spec = SystemSpec(1.0, (1.0, 1.0, 1.0, 1.0), (0.25, 0.25, 0.25, 0.25))
        swept = _swept_spec(spec, "weights[1]", 0.7)
        assert swept.weights[0] == pytest.approx(0.7)
        for w in swept.weights[1:]:
            assert w == pytest.approx(0.1)

    def test_probability_sweep_rescales_rest(self):
        scenario = small_scenario()
        policy = resolve_policy(scenario, "fixed-pmf", scenario.spec, 0.3)
        assert policy.p == pytest.approx((0.3, 0.7))

    def test_pattern_k_schedule_composition(self):
        scenario = small_scenario(
            sweep_param="pattern-k",
            sweep_values=(4.0,),
            policies=("fixed-schedule",),
            fixed_pmf=None,
            pattern_source=1,
            pattern_length=30,
        )
        schedule = resolve_policy(scenario, "fixed-schedule", scenario.spec, 4.0)
        assert len(schedule.slots) == 30
        assert schedule.slots.count(1) == 4
        assert set(schedule.slots) == {1, 2}

    def test_insertion_search_refused_above_cap(self):
        n = 14
        spec = SystemSpec(5.0, tuple(float(i) for i in range(1, n + 1)), (1.0 / n,) * n)
        scenario = small_scenario(
            spec=spec, policies=("IS",), sweep_param="mu_shared", sweep_values=(5.0,),
            fixed_pmf=None,
        )
        with pytest.raises(ScenarioError, match="insertion search"):
            resolve_policy(scenario, "IS", spec, 5.0)


class TestRunScenario:
    def test_rows_complete_and_consistent(self):
        scenario = small_scenario()
        rows = run_scenario(scenario)
        # 2 sweep values x 1 policy x (2 sources + aggregate)
        assert len(rows) == 6
        for value in (0.3, 0.7):
            per_source = [
                r for r in rows if r.sweep_value == value and r.source != "*"
            ]
            agg = next(r for r in rows if r.sweep_value == value and r.source == "*")
            recomputed = sum(0.5 * r.analytic_aoi for r in per_source)
            assert agg.weighted == pytest.approx(recomputed, abs=1e-15)
            for r in per_source:
                assert abs(r.sim_aoi - r.analytic_aoi) / r.analytic_aoi < 0.1

    def test_analytic_runs_are_deterministic(self):
        scenario = small_scenario(evaluation="analytic")
        a = rows_to_string(run_scenario(scenario))
        b = rows_to_string(run_scenario(scenario))
        assert a == b

    def test_sim_override_changes_row_values(self):
        scenario = small_scenario()
        rows_a = run_scenario(scenario, sim_overrides={"seed": 1, "horizon": 2000.0})
        rows_b = run_scenario(scenario, sim_overrides={"seed": 2, "horizon": 2000.0})
        assert rows_a != rows_b

    def test_pmf_table_converges_for_fast_shared_server(self):
        scenario = Scenario(
            name="limits",
            spec=SystemSpec(1.0, (4.0, 7.0, 10.0), (1 / 3, 1 / 3, 1 / 3)),
            sweep_param="mu_shared",
            sweep_values=(1.0, 1000.0),
            policies=("PS-opt",),
            evaluation="analytic",
        )
        table = optimal_pmf_table(scenario)
        tail = {row[4]: row[5] for row in table if row[2] == 1000.0}
        assert max(abs(tail[s] - 1 / 3) for s in ("1", "2", "3")) <= 0.02


class TestCsv:
    def test_single_row_is_two_lines(self):
        row = ResultRow("s", "mu_shared", 1.0, "RR", "*", 0.5, None, None, 0.5)
        buf = io.StringIO()
        emit_csv([row], buf)
        lines = buf.getvalue().splitlines()
        assert len(lines) == 2
        assert lines[0] == (
            "scenario,sweep_param,sweep_value,policy,source,"
            "analytic_aoi,sim_aoi,ci_halfwidth,weighted"
        )
        assert lines[1] == "s,mu_shared,1.0,RR,*,0.5,,,0.5"

    def test_round_trip_is_exact(self):
        scenario = small_scenario(evaluation="both")
        rows = run_scenario(scenario)
        text = rows_to_string(rows)
        assert parse_csv(io.StringIO(text)) == rows

    def test_empty_table_rejected(self):
        with pytest.raises(ValueError):
            emit_csv([], io.StringIO())

    def test_full_precision_round_trip_of_awkward_floats(self):
        value = 0.1 + 0.2  # 0.30000000000000004
        row = ResultRow("s", "p[1]", value, "UPS", "1", value, value, value, value)
        buf = io.StringIO()
        emit_csv([row], buf)
        parsed = parse_csv(io.StringIO(buf.getvalue()))[0]
        assert parsed == row


class TestCli:
    def test_optimize_verb(self, capsys):
        code = main([
            "optimize", "--mu", "2.0", "--rates", "1.5,1.5", "--weights", "0.5,0.5",
        ])
        assert code == 0
        out = capsys.readouterr().out
        assert "p[1]" in out and "weighted age" in out

    def test_analyze_ps_and_cs(self, capsys):
        assert main([
            "analyze-ps", "--mu", "1.0", "--rates", "1.0", "--pmf", "1.0",
        ]) == 0
        assert "1.25" in capsys.readouterr().out
        assert main([
            "analyze-cs", "--mu", "1.0", "--rates", "1.0,2.0", "--schedule", "1,2",
        ]) == 0

    def test_weight_normalization_flag(self, capsys):
        args = [
            "analyze-ps", "--mu", "8.0", "--rates", "1,2,3",
            "--weights", "0.3,0.5,0.3", "--pmf", "0.4,0.3,0.3",
        ]
        assert main(args) == 1  # weights sum to 1.1
        assert main(args + ["--normalize-weights"]) == 0

    def test_bad_flags_exit_code_one(self, capsys):
        assert main(["optimize", "--rates", "1.0"]) == 1
        assert main(["no-such-verb"]) == 1
        assert main(["optimize", "--mu", "1.0", "--rates", "1.0", "--weights", "0.4,0.6"]) == 1

    def test_unreadable_scenario_exit_code_one(self, capsys):
        assert main(["run", "/nonexistent.yaml"]) == 1

    def test_runtime_failure_exit_code_two(self, monkeypatch, capsys):
        import aoisched.cli as cli_mod

        def boom(*args, **kwargs):
            raise RuntimeError("synthetic failure")

        monkeypatch.setattr(cli_mod, "optimize_ps", boom)
        assert main(["optimize", "--mu", "1.0", "--rates", "1.0"]) == 2

    def test_run_writes_csv_and_pmf_sidecar(self, tmp_path, capsys):
        out = tmp_path / "fig12.csv"
        code = main([
            "run", os.path.join(SCENARIO_DIR, "fig12.yaml"), "--out", str(out),
        ])
        assert code == 0
        rows = parse_csv(str(out))
        assert rows and all(r.scenario == "fig12" for r in rows)
        sidecar = str(out) + ".pmf.csv"
        assert os.path.exists(sidecar)
        with open(sidecar) as fh:
            header = fh.readline().strip()
        assert header == "scenario,sweep_param,sweep_value,policy,source,p"

    def test_simulate_verb_with_event_log(self, tmp_path, capsys):
        log = tmp_path / "events.log"
        code = main([
            "simulate", "--mu", "1.0", "--rates", "1.0", "--pmf", "1.0",
            "--horizon", "200", "--reps", "2", "--seed", "3",
            "--event-log", str(log),
        ])
        assert code == 0
        assert log.exists() and log.read_text().count("\n") > 10

    def test_simulate_requires_exactly_one_policy(self):
        assert main([
            "simulate", "--mu", "1.0", "--rates", "1.0",
        ]) == 1
        assert main([
            "simulate", "--mu", "1.0", "--rates", "1.0",
            "--pmf", "1.0", "--schedule", "1",
        ]) == 1

    def test_time_policies_verb(self, capsys):
        assert main(["time-policies", "2", "3"]) == 0
        out = capsys.readouterr().out
        assert "PS-opt" in out and "PAC" in out and "IS" in out

    def test_build_verbs(self, capsys):
        assert main([
            "build-is", "--mu", "4.0", "--rates", "1.0,2.0", "--trace",
        ]) == 0
        assert main([
            "build-pac", "--mu", "4.0", "--rates", "1.0,2.0",
        ]) == 0


class TestBundledScenariosRun:
    @pytest.mark.parametrize(
        "path", sorted(glob.glob(os.path.join(SCENARIO_DIR, "*.yaml")))
    )
    def test_end_to_end_at_reduced_scale(self, path):
        scenario = load_scenario(path)
        # Shrink to one sweep point and a short horizon so the whole bundle
        # stays fast; full-scale runs live in the acceptance suite.
        from dataclasses import replace

        reduced = replace(scenario, sweep_values=scenario.sweep_values[:1])
        rows = run_scenario(reduced, sim_overrides={"horizon": 300.0, "replications": 2})
        assert rows
        per_policy = {r.policy for r in rows}
        assert per_policy == set(scenario.policies)

    def test_twenty_source_sweep_keeps_orderings_and_baselines(self):
        # Two points of the large-system sweep: the probability-aided
        # schedule dominates the optimal probabilities, and the baseline
        # policies come along for comparison.
        scenario = load_scenario(os.path.join(SCENARIO_DIR, "fig11.yaml"))
        from dataclasses import replace

        reduced = replace(scenario, sweep_values=scenario.sweep_values[:2])
        rows = run_scenario(reduced)
        assert {r.policy for r in rows} == {"PS-opt", "PAC", "UPS", "RR"}
        for value in reduced.sweep_values:
            agg = {
                r.policy: r.weighted
                for r in rows if r.source == "*" and r.sweep_value == value
            }
            assert agg["PAC"] <= agg["PS-opt"]

    def test_dedicated_rate_sweep_policy_ordering(self):
        # Full run of the three-source dedicated-rate sweep: at every grid
        # point the insertion search beats the probability-aided schedule,
        # which beats the optimal probabilities; and the emitted CSV
        # round-trips bit-exactly.
        scenario = load_scenario(os.path.join(SCENARIO_DIR, "fig8.yaml"))
        rows = run_scenario(scenario)
        by_point = {}
        for r in rows:
            if r.source == "*":
                by_point.setdefault(r.sweep_value, {})[r.policy] = r.weighted
        assert len(by_point) == len(scenario.sweep_values)
        for values in by_point.values():
            assert values["IS"] <= values["PAC"] + 1e-12
            assert values["PAC"] <= values["PS-opt"]
        assert parse_csv(io.StringIO(rows_to_string(rows))) == rows
