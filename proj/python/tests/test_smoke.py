import json
import math

import pytest

import valuemap as vm


def test_modal_diversity_worked_value():
    modes = [7] * 6 + [5] * 2 + [8] * 2 + [10] * 2
    assert vm.modal_diversity(modes, 10) == pytest.approx(0.53959, abs=1e-5)
    assert vm.modal_diversity(modes, 10, "distinct_modes") == pytest.approx(0.89624, abs=1e-5)
    assert vm.modal_diversity([3, 3, 3], 5) == 0.0


def test_wasserstein():
    assert vm.ordinal_wasserstein({1: 1}, {4: 1}, 1, 4) == 1.0
    assert vm.ordinal_wasserstein({1: 1, 2: 1}, {3: 1, 4: 1}, 1, 4) == pytest.approx(2 / 3, abs=1e-12)


def test_parse_numeric():
    assert vm.parse_numeric("Answer: 7", 1, 10) == "value(7)"
    assert vm.parse_numeric("I cannot answer that request.", 1, 10) == "refusal(no_number)"
    assert vm.parse_numeric("Answer: 15", 1, 10) == "refusal(out_of_range)"


def test_judge_helpers():
    v = vm.parse_verdict('ok {"persona_winner": "A", "value_winner": "Tie", "overall_winner": "A"}')
    assert (v["persona"], v["value"], v["overall"]) == ("A", "Tie", "A")
    tie = {"persona": "Tie", "value": "Tie", "overall": "Tie"}
    win = {"persona": "A", "value": "A", "overall": "A"}
    assert vm.score_pair(win, tie)["value"] == 0.75
    assert vm.score_pair(win, None)["single_pass"]


def test_statistics():
    assert vm.normalized_range([0.8, 0.6]) == 0.25
    assert vm.coefficient_of_variation([4, 6]) == pytest.approx(0.2)
    d, lo, hi = vm.paired_bootstrap_ci([0.1] * 20, [0.4] * 20)
    assert lo == hi == d
    rho, _ = vm.spearman([1, 2, 3], [3, 2, 1])
    assert rho == pytest.approx(-1.0)
    assert vm.weighted_kappa(["A", "B", "Tie"], ["A", "B", "Tie"]) == pytest.approx(1.0)
    ranks = vm.improvement_ranks({"a": 0.4, "b": 0.5, "c": 0.3}, {"a": 0.607, "b": 0.707, "c": 0.5}, True, 3)
    assert [ranks[k][1] for k in "abc"] == [1, 1, 3]


def test_errors_carry_codes():
    with pytest.raises(vm.Error) as info:
        vm.modal_diversity([], 4)
    assert info.value.code == "EmptyModes"
    with pytest.raises(vm.Error) as info:
        vm.enumerate_strata(["sex", "sex"])
    assert info.value.code == "DuplicateAxis"


def test_offline_pipeline(tmp_path):
    vm.write_synthetic_survey(tmp_path)
    cfg = json.loads(vm.example_config_json())
    cfg["strata"] = {"train": ["sex"], "ood": ["sex_x_religion"]}
    cfg["bootstrap"]["resamples"] = 100
    (tmp_path / "config.json").write_text(json.dumps(cfg))
    config = vm.load_config(tmp_path / "config.json")
    assert "oracle" in config.models

    vm.landscape(config)
    vm.build_dataset(config)
    vm.eval_numeric(config, "oracle")
    vm.eval_numeric(config, "base")
    overall = json.loads((tmp_path / "out/runs/oracle/eval_ood/numeric/overall.json").read_text())
    assert overall["accuracy"] == 1.0
    assert overall["nmae"] == 0.0
    assert overall["n_refusals"] == 0
    result = vm.compare(config, "base", "oracle")
    assert result["written"]
    assert not math.isnan(json.loads((tmp_path / "out/runs/base/eval_ood/numeric/overall.json").read_text())["accuracy"])

    table = vm.apply_filters(
        vm.load_responses(tmp_path / "responses.csv", vm.load_codebook(tmp_path / "codebook.json")),
        vm.expand_question_range("Q7-Q26"),
    )
    assert len(table.active_question_ids) == 214
    assert dict(vm.valid_subgroups(table, ["sex"]))["Female"] > 600
