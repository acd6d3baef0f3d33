import json

import pytest

from navsearch.cli import main
from navsearch.harness import (
    ExperimentConfig,
    nonmetric_cost_bound,
    parse_instance,
    rank_policy_cost_bound,
    run_forward_experiment,
    run_learn_experiment,
    run_lowerbound,
    run_search_experiment,
    run_verify,
)


def test_parse_grid_instance():
    space, demand, local, spec = parse_instance("grid:4x4")
    assert space.n == 16
    assert spec.sides == (4, 4)
    assert local is not None


def test_parse_line_and_random():
    space, _, _, _ = parse_instance("line:0,1,3")
    assert space.distance(0, 2) == 3
    space, demand, _, _ = parse_instance("random:n=12,dims=3,skew=0.5,seed=4")
    assert space.n == 12
    assert demand.all_pairs_positive()


def test_parse_file_instance(tmp_path):
    from navsearch.datafiles import Dataset, dump_dataset
    from navsearch.instances import line_space
    from navsearch.demand import Demand
    path = tmp_path / "d.json"
    dump_dataset(Dataset(space=line_space([0, 2]), demand=Demand.uniform(2)), path)
    space, demand, _, _ = parse_instance(f"file:{path}")
    assert space.n == 2


def test_bad_instance_spec():
    with pytest.raises(ValueError):
        parse_instance("blob:1")


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(instance="line:0,1", trials=0, seed=1)


def test_two_point_search_record():
    config = ExperimentConfig(instance="line:0,1", trials=500, seed=3)
    record = run_search_experiment(config)
    assert record.summary["mean"] == 1.0
    assert record.bound_ok


def test_bound_recomputed_from_instance():
    config = ExperimentConfig(instance="line:0,1,3", trials=200, seed=5)
    record = run_search_experiment(config)
    expected = rank_policy_cost_bound(record.structure["doubling"],
                                      record.structure["entropy_bits"],
                                      record.structure["max_entropy_bits"])
    assert record.bound == expected


def test_search_records_byte_identical():
    config = ExperimentConfig(instance="random:n=24,dims=2,skew=0.8", trials=400, seed=11)
    a = run_search_experiment(config).to_json_line()
    b = run_search_experiment(config).to_json_line()
    assert a == b
    assert "wall_time" not in a


def test_forward_records_byte_identical():
    config = ExperimentConfig(instance="grid:4x4", trials=300, seed=13)
    a = run_forward_experiment(config).to_json_line()
    b = run_forward_experiment(config).to_json_line()
    assert a == b


def test_forward_requires_grid():
    with pytest.raises(ValueError):
        run_forward_experiment(ExperimentConfig(instance="line:0,1", trials=10, seed=1))


def test_forward_resample_vs_frozen_bound_status():
    base = dict(instance="grid:6x6", trials=400, seed=17)
    resampled = run_forward_experiment(ExperimentConfig(**base, resample_shortcuts=True))
    frozen = run_forward_experiment(ExperimentConfig(**base, resample_shortcuts=False))
    assert resampled.bound_ok and frozen.bound_ok
    assert resampled.summary["mean"] != frozen.summary["mean"]


def test_learn_runs_on_full_support_instance():
    config = ExperimentConfig(instance="line:0,1,3", trials=10, seed=1, timeslots=20)
    record = run_learn_experiment(config)
    assert record.summary["timeslots"] == 20
    assert len(record.extra["trace"]) > 0


def test_learn_rejects_partial_demand(tmp_path):
    from navsearch.datafiles import Dataset, dump_dataset
    from navsearch.demand import Demand
    from navsearch.instances import line_space
    path = tmp_path / "partial.json"
    dump_dataset(Dataset(space=line_space([0, 1, 3]),
                         demand=Demand.from_pairs(3, [(0, 1, 1.0)])), path)
    config = ExperimentConfig(instance=f"file:{path}", trials=10, seed=1, timeslots=20)
    with pytest.raises(ValueError):
        run_learn_experiment(config)


def test_learn_two_objects_constant_trace():
    config = ExperimentConfig(instance="line:0,1", trials=10, seed=2, timeslots=300)
    record = run_learn_experiment(config)
    assert record.bound_ok
    assert record.summary["window_mean"] <= 1.0


def test_verify_passes_on_generated_instances():
    for instance in ("grid:5x5", "random:n=20,dims=2,skew=1.0", "hier:3x3"):
        record = run_verify(ExperimentConfig(instance=instance, trials=1, seed=1))
        assert record.bound_ok, instance


def test_verify_flags_broken_grid(tmp_path):
    # a 4x4 grid with an interior hole: radius-1 local edges break the
    # closer-neighbor property
    from navsearch.datafiles import Dataset, dump_dataset
    from navsearch.smallworld import GridSpec, grid_space
    from navsearch.space import MetricSpace
    space, _ = grid_space(GridSpec((4, 4)))
    keep = [x for x in range(16) if x != 5]
    holed = MetricSpace.from_points(space.coords()[keep], metric="manhattan")
    path = tmp_path / "holed.json"
    dump_dataset(Dataset(space=holed, demand=None, name="holed"), path)
    record = run_verify(ExperimentConfig(instance=f"file:{path}", trials=1, seed=1),
                        local_radius=1.0)
    assert record.summary["local_edges"] is False
    assert record.bound_ok is False


def test_lowerbound_record():
    record = run_lowerbound(ExperimentConfig(instance="hier:2x2", trials=400, seed=9))
    assert record.summary["doubling"] == 2.0
    assert record.bound == 1.0
    assert record.bound_ok


def test_cli_end_to_end(tmp_path, capsys):
    out = tmp_path / "records.jsonl"
    rc = main(["search", "--instance", "line:0,1,3", "--trials", "300",
               "--seed", "21", "--output", str(out)])
    assert rc == 0
    rc = main(["search", "--instance", "line:0,1,3", "--trials", "300",
               "--seed", "21", "--output", str(out)])
    assert rc == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 2
    assert lines[0] == lines[1]  # byte-identical records for identical config+seed
    assert json.loads(lines[0])["command"] == "search"


def test_cli_config_file(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"trials": 150}))
    out = tmp_path / "r.jsonl"
    rc = main(["search", "--instance", "line:0,1", "--trials", "99", "--seed", "2",
               "--config", str(cfg), "--output", str(out)])
    assert rc == 0
    assert json.loads(out.read_text())["config"]["trials"] == 150


def test_cli_error_exit_code(tmp_path):
    rc = main(["search", "--instance", "blob:9", "--seed", "1",
               "--output", str(tmp_path / "x.jsonl")])
    assert rc == 2


def test_nonmetric_bound_helper():
    assert nonmetric_cost_bound(2.0, 16) == pytest.approx(7 * 2 * 16.0)
