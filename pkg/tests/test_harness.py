import json
import math

import numpy as np
import pytest
import yaml

from rabsplan.energy import CALIBRATED, PAPER_LITERAL, EnergyParams
from rabsplan.exact import solve_labels
from rabsplan.harness import cli
from rabsplan.harness.config import ExperimentConfig, config_from_dict, load_config
from rabsplan.harness.experiments import (
    IDEAL,
    RABS,
    compare,
    contiguous_intervals,
    read_csv,
    run_sweep,
    write_sweep,
)
from rabsplan.instance import Instance, build_instance
from rabsplan.lagrangian import solve
from rabsplan.traffic import GridSpec, TrafficParams, sample_field


def write_config(tmp_path, **traffic):
    doc = {
        "traffic": {"sigmas": [1.3], "horizons": "1-3", "seed_count": 1, **traffic},
        "output_dir": str(tmp_path / "out"),
    }
    path = tmp_path / "cfg.yaml"
    path.write_text(yaml.safe_dump(doc))
    return path


def test_config_defaults():
    cfg = ExperimentConfig()
    assert cfg.horizons == tuple(range(1, 49))
    assert cfg.seeds == list(range(100))
    assert cfg.energy.accounting == CALIBRATED
    assert cfg.energy.E_max == 333792.0


def test_config_parsing(tmp_path):
    cfg = load_config(write_config(tmp_path, base_seed=7))
    assert cfg.sigmas == (1.3,)
    assert cfg.horizons == (1, 2, 3)
    assert cfg.seeds == [7]
    cfg = config_from_dict({"energy": {"policy": "paper_literal", "E_max": 1e6}, "baselines": {"k": [2]}})
    assert cfg.energy.accounting == PAPER_LITERAL and cfg.energy.E_max == 1e6
    assert cfg.bs_counts == (2,)
    assert cfg.with_overrides(seed=3, policy="calibrated").seeds[0] == 3
    with pytest.raises(ValueError):
        config_from_dict({"plots": {}})
    with pytest.raises(ValueError):
        config_from_dict({"energy": {"warp": 9}})


def test_contiguous_intervals():
    assert contiguous_intervals([7, 1, 2, 3]) == [(1, 3), (7, 7)]
    assert contiguous_intervals([]) == []


def test_generate_is_reproducible(tmp_path):
    cfg = write_config(tmp_path)
    assert cli.main(["generate", "--config", str(cfg)]) == 0
    files = sorted((tmp_path / "out" / "instances").iterdir())
    assert [f.name for f in files] == [f"sigma1.3_N{n}_seed0.json" for n in (1, 2, 3)]
    first = {f.name: f.read_bytes() for f in files}
    assert cli.main(["generate", "--config", str(cfg)]) == 0
    assert {f.name: f.read_bytes() for f in files} == first
    doc = json.loads(first["sigma1.3_N3_seed0.json"])
    assert len(doc["candidates"]) == 121
    inst = Instance.load(files[2])
    assert inst.n_epochs == 3


def test_solve_twice_identical(tmp_path, capsys):
    cfg = write_config(tmp_path)
    cli.main(["generate", "--config", str(cfg)])
    path = tmp_path / "out" / "instances" / "sigma1.3_N3_seed0.json"
    outputs = []
    for run in ("a", "b"):
        out = tmp_path / run
        assert cli.main(["solve", str(path), "--out", str(out)]) == 0
        outputs.append(
            {f.name: f.read_bytes() for f in out.iterdir() if f.suffix in (".json", ".csv")}
        )
    assert outputs[0] == outputs[1]
    assert "Policy in effect: calibrated" in capsys.readouterr().out


def test_solve_exhaustive_guard(tmp_path, capsys):
    n = 21
    inst = Instance(np.ones(n), np.zeros((n, 2)), EnergyParams(accounting=CALIBRATED))
    path = inst.save(tmp_path / "big.json")
    assert cli.main(["solve", str(path), "--solver", "exhaustive"]) == cli.EXIT_USAGE
    assert "N <= 20" in capsys.readouterr().err


def test_solve_paper_literal_rejected(tmp_path, capsys):
    grid = GridSpec()
    field = sample_field(grid, TrafficParams(1.3, 2, seed=1))
    path = build_instance(field, grid, EnergyParams(accounting=CALIBRATED)).save(tmp_path / "i.json")
    code = cli.main(["solve", str(path), "--policy", "paper_literal", "--out", str(tmp_path)])
    assert code == cli.EXIT_INFEASIBLE
    assert "352800.0 J exceeds E_max = 333792.0" in capsys.readouterr().err


def test_missing_instance_is_usage_error(tmp_path, capsys):
    assert cli.main(["solve", str(tmp_path / "nope.json")]) == cli.EXIT_USAGE


@pytest.fixture(scope="module")
def small_sweep():
    cfg = config_from_dict(
        {"traffic": {"sigmas": [1.0, 2.0], "horizons": "1-6", "seed_count": 3}, "baselines": {"k": [1, 2, 121]}}
    )
    return run_sweep(cfg)


def test_sweep_records(small_sweep):
    recs = small_sweep.records
    assert len(recs) == 2 * 6 * 3 * 5
    assert all(r["status"] == "ok" for r in recs)
    for sigma in (1.0, 2.0):
        for n in range(1, 7):
            rabs = small_sweep.series_values(sigma, n, RABS)
            ideal = small_sweep.series_values(sigma, n, IDEAL)
            assert np.all(rabs <= ideal + 1e-9)
            if n == 1:
                assert np.array_equal(rabs, ideal)


def test_ideal_non_decreasing_in_horizon(small_sweep):
    for sigma in (1.0, 2.0):
        means = [small_sweep.series_values(sigma, n, IDEAL) for n in range(1, 7)]
        for a, b in zip(means, means[1:]):
            assert np.all(b >= a)


def test_sweep_matches_direct_solve(small_sweep):
    cfg = small_sweep.config
    grid = cfg.grid
    field = sample_field(grid, TrafficParams(2.0, 6, seed=1))
    inst = build_instance(field, grid, cfg.energy, n_epochs=4)
    assert small_sweep.series_values(2.0, 4, RABS)[1] == solve(inst, cfg.solver).objective


def test_energy_shares_sum_to_one(small_sweep):
    for row in small_sweep.share_rows():
        assert math.isclose(row["share_prop"] + row["share_comm"] + row["share_grasp"], 1.0, abs_tol=1e-9)


def test_sweep_files_and_compare(small_sweep, tmp_path):
    paths = write_sweep(small_sweep, tmp_path)
    assert (tmp_path / "baselines_sigma2.csv").exists()
    assert "Policy in effect: calibrated" in paths["text"].read_text()
    result = compare(read_csv(paths["summary"]), read_csv(paths["per_seed"]))
    by_k = {(r["sigma"], r["k"]): r for r in result.crossovers}
    # every candidate always on serves the whole field, so RABS never wins
    assert by_k[(1.0, 121)]["intervals"] == ""
    assert {g["N"] for g in result.gains} == set(range(1, 7))
    assert not result.missing
    assert cli.main(["compare", str(tmp_path)]) == 0
    text = (tmp_path / "crossover.txt").read_text()
    assert "k=121: RABS ahead for N in none" in text
    assert "Policy in effect: calibrated" in text


def test_compare_reports_missing_series():
    summary = [{"sigma": "1", "N": "2", "series": "bs_k1", "mean_served": "3.0"}]
    result = compare(summary)
    assert any("rabs" in m for m in result.missing)


def test_larger_budget_serves_at_least_as_much():
    grid = GridSpec()
    field = sample_field(grid, TrafficParams(2.0, 24, seed=11))
    served = []
    for e_max in (5e4, 1e5, 2e5, 4e5):
        inst = build_instance(field, grid, EnergyParams(accounting=CALIBRATED, E_max=e_max))
        served.append(solve_labels(inst).objective)
    assert served == sorted(served)
