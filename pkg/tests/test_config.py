import json

import pytest

from spatial_trees.config import (
    ConfigError,
    load_config,
    parse_config,
    preset_names,
    preset_path,
)

BASE = {
    "dataset": {"generator": "sinusoid", "params": {"n": 100, "D": 10}},
    "trees": [{"rule": "kd"}],
    "tasks": ["profile"],
    "seed": 1,
}


def make(**over):
    raw = json.loads(json.dumps(BASE))
    raw.update(over)
    return raw


def test_defaults():
    conf = parse_config(make())
    assert conf.folds == 10 and conf.slope_window == [8, 13] and conf.version == 1
    assert conf.trees[0].min_size == 10 and conf.trees[0].c == 10.0
    assert conf.covdim.epsilon == [0.1, 0.01]


def test_rule_shorthand_and_labels():
    conf = parse_config(make(trees=["kd", {"rule": "kd", "min_size": 3, "label": "kd3"}]))
    assert [t.name for t in conf.trees] == ["kd", "kd3"]
    with pytest.raises(ConfigError, match="unique"):
        parse_config(make(trees=["kd", "kd"]))


@pytest.mark.parametrize(
    "over, path",
    [
        ({"seed": None}, "$.seed"),
        ({"tasks": []}, "$.tasks"),
        ({"tasks": ["plot"]}, "$.tasks[0]"),
        ({"trees": [{"rule": "ball"}]}, "$.trees[0].rule"),
        ({"trees": [{"rule": "kd", "c": 3}]}, "$.trees[0].c"),
        ({"trees": [{"rule": "kd", "depth": 3}]}, "$.trees[0].depth"),
        ({"folds": 1}, "$.folds"),
        ({"colour": "red"}, "$.colour"),
        ({"dataset": {"generator": "teapot"}}, "$.dataset.generator"),
        ({"covdim": {"epsilon": [1.5]}}, "$.covdim.epsilon"),
        ({"slope_window": [5, 5]}, "$.slope_window"),
        ({"version": 2}, "$.version"),
    ],
)
def test_errors_carry_field_paths(over, path):
    raw = make(**over)
    if over.get("seed", 0) is None:
        del raw["seed"]
    with pytest.raises(ConfigError) as err:
        parse_config(raw)
    assert err.value.path == path


def test_trees_required_for_tree_tasks():
    with pytest.raises(ConfigError):
        parse_config(make(trees=[]))
    assert parse_config(make(trees=[], tasks=["dimest"])).trees == []


def test_dataset_variants_expand_lists():
    conf = parse_config(make(dataset={"generator": "sinusoid", "params": {"n": 50, "D": [10, 30]}}))
    assert [v["params"]["D"] for v in conf.dataset_variants()] == [10, 30]
    conf = parse_config(make(dataset={"path": "x.csv"}))
    assert conf.dataset_variants() == [{"path": "x.csv"}]


def test_load_config_reports_location(tmp_path):
    p = tmp_path / "c.json"
    p.write_text('{"seed": 1,\n "tasks": [}')
    with pytest.raises(ConfigError) as err:
        load_config(p)
    assert ":2:" in str(err.value)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")


def test_report_json_is_accepted():
    conf = parse_config(make())
    assert parse_config({"config": conf.to_dict(), "profiles": []}) == conf


def test_presets_parse():
    assert set(preset_names()) >= {"fig4_dimest", "fig5_slopes", "swissroll_dimest"}
    for name in preset_names():
        load_config(preset_path(name))
    fig5 = load_config(preset_path("fig5_slopes"))
    assert [t.rule for t in fig5.trees] == ["dyadic", "kd", "rp", "pd", "2m"]
    assert [v["params"]["D"] for v in fig5.dataset_variants()] == [10, 30, 50, 80]
    with pytest.raises(ConfigError):
        preset_path("nope")
