import json
import math
import statistics

import numpy as np
import pytest

from mmpass import cli
from mmpass.errors import InvalidConfigError
from mmpass.harness import (
    CSV_COLUMNS,
    LEAKAGE_DBETA_GRID,
    LEAKAGE_MU_GRID,
    SCHEMES_2PA,
    ExperimentSpec,
    aggregate,
    default_schemes,
    emit_results,
    read_csv,
    run_experiment,
    trial_seed,
)
from mmpass.scenario import default_scenario

FAST = dict(particles=8, iterations=4)


def rows_without_time(result):
    out = []
    for r in result.records:
        row = r.row()
        row.pop("wall_time_s")
        out.append((row, tuple(r.trace)))
    return out


def test_trial_seeds_are_distinct_and_stable():
    seeds = [trial_seed(0, t) for t in range(50)]
    assert len(set(seeds)) == 50
    assert trial_seed(0, 3) == trial_seed(0, 3)
    assert trial_seed(1, 3) != trial_seed(0, 3)


def test_spec_validation():
    with pytest.raises(InvalidConfigError):
        ExperimentSpec("rate_vs_everything")
    with pytest.raises(InvalidConfigError):
        ExperimentSpec("rate_vs_pmax_2pa", trials=0)
    with pytest.raises(InvalidConfigError):
        ExperimentSpec("rate_vs_pmax_2pa", overrides={"antenna_colour": 1})


def test_overrides_merge_into_scenario():
    spec = ExperimentSpec("rate_vs_pmax_2pa", overrides={"geometry": {"height": 3.0}})
    assert spec.base_scenario().geometry.height == 3.0


def test_determinism_and_grid_completeness():
    spec = ExperimentSpec("rate_vs_pmax_2pa", trials=2, seed=11, sweep_values=(20.0, 27.0), **FAST)
    a, b = run_experiment(spec), run_experiment(spec)
    assert rows_without_time(a) == rows_without_time(b)
    assert len(a.records) == 2 * 2 * len(SCHEMES_2PA)
    cells = {(r.trial, r.sweep_value, r.scheme) for r in a.records}
    assert len(cells) == len(a.records)


def test_scheme_sets_per_experiment():
    assert default_schemes("rate_vs_pmax_2pa") == ("mm_nl", "mm_wl", "tdma", "miso_fd")
    assert set(default_schemes("rate_vs_pmax_multipa")) == {"mm_nl", "mm_wl", "tdma", "miso_fd", "miso_hybrid", "de_zf"}
    assert set(default_schemes("rate_vs_antennas")) == set(default_schemes("rate_vs_pmax_multipa"))


def test_csv_round_trip_and_traces(tmp_path):
    spec = ExperimentSpec("rate_vs_pmax_2pa", trials=3, seed=2, sweep_values=(27.0,), **FAST)
    res = run_experiment(spec)
    written = emit_results(res, "csv", tmp_path / "out.csv")
    rows = read_csv(written[0])
    assert list(rows[0]) == list(CSV_COLUMNS)
    assert len(rows) == len(res.records)
    mem = aggregate([r.row() for r in res.records])
    disk = aggregate(rows)
    assert mem.keys() == disk.keys()
    for k in mem:
        for x, y in zip(mem[k], disk[k]):
            assert x == pytest.approx(y, abs=1e-12, nan_ok=True)
    trace_lines = (tmp_path / "out_traces.csv").read_text().strip().splitlines()
    n_trace = sum(len(r.trace) for r in res.records)
    assert len(trace_lines) - 1 == n_trace
    assert all(not r.trace for r in res.records if r.scheme in ("tdma", "miso_fd", "mm_nl"))
    assert not any(",tdma," in line for line in trace_lines)


def test_aggregate_matches_independent_recomputation():
    rows = [
        {"scheme": "s", "sweep_var": "v", "sweep_value": 1.0, "sum_rate_bpshz": x}
        for x in (1.0, 2.5, 4.0, math.nan, 3.5)
    ]
    mean, half, n = aggregate(rows)[("s", "v", 1.0)]
    vals = [1.0, 2.5, 4.0, 3.5]
    assert n == 4
    assert mean == pytest.approx(statistics.mean(vals), abs=1e-12)
    assert half == pytest.approx(1.96 * statistics.stdev(vals) / 2.0, abs=1e-12)


def test_failing_scheme_becomes_error_row():
    spec = ExperimentSpec("rate_vs_pmax_2pa", trials=1, schemes=("tdma", "no_such_scheme"), sweep_values=(27.0,))
    res = run_experiment(spec)
    assert len(res.records) == 2
    bad = [r for r in res.records if r.scheme == "no_such_scheme"][0]
    assert bad.error and not bad.feasible and math.isnan(bad.sum_rate)
    good = [r for r in res.records if r.scheme == "tdma"][0]
    assert good.error is None and good.feasible


def test_json_output_has_metadata(tmp_path):
    spec = ExperimentSpec("rate_vs_pmax_2pa", trials=1, schemes=("tdma", "miso_fd"), sweep_values=(27.0,))
    path = emit_results(run_experiment(spec), "json", tmp_path / "r.json")[0]
    doc = json.loads(path.read_text())
    meta = doc["metadata"]
    for key in ("twopa", "pso", "de", "tdma", "miso", "grids", "trials_default", "seed_rule"):
        assert key in meta
    assert meta["tdma"]["power_per_slot"] == "P_max"
    assert meta["pso"]["trust_radius"] == {"rand": 2.0, "topt": 0.5}
    assert len(doc["records"]) == 2
    assert doc["traces"] == []


def test_leakage_sweep_table():
    res = run_experiment(ExperimentSpec("leakage_sweep", trials=1))
    assert len(res.records) == len(LEAKAGE_MU_GRID) * len(LEAKAGE_DBETA_GRID)
    for r in res.records:
        assert r.eta_sq <= r.eta_sq_bound + 1e-15
        assert r.eta_sq <= r.eta_sq_bound_tight + 1e-15
    assert res.metadata["actual_delta_beta_21"] == pytest.approx(360.2, abs=1.0)


def test_user_spread_sweep_layout():
    spec = ExperimentSpec("rate_vs_users", trials=1, schemes=("tdma",), sweep_values=(0.0, 4.0))
    res = run_experiment(spec)
    assert len(res.records) == 2 * 3
    assert {r.sweep_var for r in res.records} == {"delta_a[y_offset=0]", "delta_a[y_offset=2]", "delta_a[y_offset=4]"}


def test_multi_pa_sweep_runs_every_scheme():
    spec = ExperimentSpec("rate_vs_antennas", trials=1, sweep_values=(4,), particles=6, iterations=3)
    res = run_experiment(spec)
    assert {r.scheme for r in res.records} == set(default_schemes("rate_vs_antennas"))
    assert all(r.error is None for r in res.records)


def test_convergence_traces_have_iteration_count():
    spec = ExperimentSpec("convergence_nl", trials=1, sweep_values=(6,), iterations=5, pa_count=4)
    res = run_experiment(spec)
    for r in res.records:
        assert len(r.trace) == 5
        assert np.all(np.diff(r.trace) >= 0)


def test_parallel_trials_match_serial():
    kw = dict(trials=3, seed=5, schemes=("mm_nl", "tdma"), sweep_values=(27.0,))
    a = run_experiment(ExperimentSpec("rate_vs_pmax_2pa", **kw))
    b = run_experiment(ExperimentSpec("rate_vs_pmax_2pa", workers=3, **kw))
    assert rows_without_time(a) == rows_without_time(b)


def test_cli_success_and_byte_stable(tmp_path):
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["two-pa", "--trials", "2", "--particles", "6", "--iterations", "3", "--no-timing"]
    assert cli.main(args + ["--out", str(out1)]) == 0
    assert cli.main(args + ["--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    assert (tmp_path / "a_traces.csv").exists()


def test_cli_regime_filter(tmp_path):
    out = tmp_path / "nl.csv"
    assert cli.main(["two-pa", "--trials", "1", "--regime", "nl", "--out", str(out)]) == 0
    schemes = {r["scheme"] for r in read_csv(out)}
    assert "mm_wl" not in schemes and "mm_nl" in schemes


def test_cli_infeasible_everywhere_exits_2(tmp_path):
    cfg = default_scenario(min_rate=60.0)
    path = tmp_path / "hard.json"
    cfg.save(path)
    out = tmp_path / "x.csv"
    code = cli.main(["two-pa", "--trials", "1", "--config", str(path), "--regime", "nl", "--particles", "4", "--iterations", "2", "--out", str(out)])
    assert code == 2


def test_cli_error_exits_1(tmp_path, capsys):
    assert cli.main(["two-pa", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path / "o.csv")]) == 1
    assert "error" in capsys.readouterr().err


def test_cli_leakage_json(tmp_path):
    out = tmp_path / "leak.json"
    assert cli.main(["leakage-sweep", "--format", "json", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert len(doc["records"]) == len(LEAKAGE_MU_GRID) * len(LEAKAGE_DBETA_GRID)
