import xml.etree.ElementTree as ET

import numpy as np
import pytest

from serforge.bench import (
    CSV_COLUMNS,
    ExperimentConfig,
    ExperimentReport,
    attack_success_rate,
    config_from_dict,
    emit_report,
    parse_report_csv,
    prepare_run,
    run_adversarial_training_curve,
    run_defense_comparison,
    run_epsilon_sweep,
)
from serforge.corpus import CorpusSpec
from serforge.errors import ConfigError


def tiny_config(**overrides):
    defaults = dict(
        corpus=CorpusSpec(
            num_speakers=3, utterances_per_speaker=4, duration_s=0.6
        ),
        epsilons=(0.0, 2.0),
        seeds=(0, 1),
        max_epochs=2,
        hidden_sizes=(8, 8),
        noise_duration_s=2.0,
        mix_fractions=(0.0, 1.0),
        gan_max_steps=6,
        gan_pretrain_epochs=1,
    )
    defaults.update(overrides)
    return ExperimentConfig(**defaults)


def test_config_validation():
    with pytest.raises(ConfigError):
        tiny_config(epsilons=())
    with pytest.raises(ConfigError):
        tiny_config(epsilons=(-1.0,))
    with pytest.raises(ConfigError):
        tiny_config(seeds=())
    with pytest.raises(ConfigError):
        tiny_config(mix_fractions=(1.5,))
    with pytest.raises(ConfigError):
        tiny_config(noise_kinds=("traffic",))


def test_config_hash_stable_and_sensitive():
    a = tiny_config()
    b = tiny_config()
    c = tiny_config(epsilons=(0.0, 1.0))
    assert a.config_hash() == b.config_hash()
    assert a.config_hash() != c.config_hash()


def test_config_from_dict_roundtrip():
    config = tiny_config()
    assert config_from_dict(config.to_dict()) == config
    with pytest.raises(ConfigError):
        config_from_dict({"no_such_key": 1})


def test_report_row_invariants():
    row = {
        "dataset_tag": "synthetic",
        "noise_kind": "cafe",
        "epsilon": 1.0,
        "defense": "none",
        "error_rate": 30.0,
        "ua": 70.0,
        "attack_success_rate": 10.0,
        "seed": 0,
    }
    ExperimentReport([row], {})
    with pytest.raises(ValueError):
        ExperimentReport([row, dict(row)], {})  # duplicate key
    bad = dict(row, error_rate=31.0)
    with pytest.raises(ValueError):
        ExperimentReport([bad], {})


def test_attack_success_rate_definition():
    labels = np.array([0, 1, 0, 1])
    clean = np.array([0, 1, 1, 1])  # 3 clean-correct
    attacked = np.array([1, 1, 0, 0])  # flips items 0 and 3
    assert attack_success_rate(clean, attacked, labels) == pytest.approx(
        2.0 / 3.0 * 100.0
    )
    all_wrong = np.array([1, 0, 1, 0])
    assert attack_success_rate(all_wrong, attacked, labels) == 0.0


@pytest.fixture(scope="module")
def sweep_state():
    config = tiny_config()
    prepared = [prepare_run(config, seed) for seed in config.seeds]
    report = run_epsilon_sweep(config, prepared)
    return config, prepared, report


def test_sweep_report_shape(sweep_state):
    config, _, report = sweep_state
    per_seed = [r for r in report.rows if r["seed"] != "mean"]
    assert len(per_seed) == len(config.seeds) * 3 * len(config.epsilons)
    means = [r for r in report.rows if r["seed"] == "mean"]
    assert len(means) == 3 * len(config.epsilons)
    assert report.metadata["config_hash"] == config.config_hash()


def test_sweep_epsilon_zero_matches_clean(sweep_state):
    from serforge.classifier import evaluate

    config, prepared, report = sweep_state
    for run in prepared:
        clean_error = evaluate(run.params, run.features_test).error_rate
        for row in report.rows:
            if row["seed"] == run.seed and row["epsilon"] == 0.0:
                assert row["error_rate"] == clean_error
                assert row["attack_success_rate"] == 0.0


def test_sweep_mean_rows_are_means(sweep_state):
    config, _, report = sweep_state
    for mean_row in (r for r in report.rows if r["seed"] == "mean"):
        members = [
            r
            for r in report.rows
            if r["seed"] != "mean"
            and r["noise_kind"] == mean_row["noise_kind"]
            and r["epsilon"] == mean_row["epsilon"]
        ]
        assert len(members) == len(config.seeds)
        assert mean_row["ua"] == pytest.approx(
            np.mean([r["ua"] for r in members]), abs=1e-12
        )


def test_csv_roundtrip_and_determinism(tmp_path, sweep_state):
    _, _, report = sweep_state
    paths = emit_report(report, tmp_path / "a")
    csv_path = [p for p in paths if p.suffix == ".csv"][0]
    parsed = parse_report_csv(csv_path)
    assert parsed == report
    emit_report(report, tmp_path / "b")
    assert (tmp_path / "a" / "report.csv").read_bytes() == (
        tmp_path / "b" / "report.csv"
    ).read_bytes()


def test_sweep_svg_wellformed(tmp_path, sweep_state):
    config, _, report = sweep_state
    paths = emit_report(report, tmp_path)
    svg_paths = [p for p in paths if p.suffix == ".svg"]
    assert [p.name for p in svg_paths] == ["epsilon_sweep.svg"]
    root = ET.parse(svg_paths[0]).getroot()
    polylines = root.findall(".//{http://www.w3.org/2000/svg}polyline")
    assert len(polylines) == len(config.noise_kinds)


def test_svg_labels_match_csv_values(tmp_path, sweep_state):
    _, _, report = sweep_state
    paths = emit_report(report, tmp_path)
    svg_text = next(p for p in paths if p.suffix == ".svg").read_text()
    csv_text = next(p for p in paths if p.suffix == ".csv").read_text()
    mean_rows = [r for r in report.rows if r["seed"] == "mean"]
    for row in mean_rows:
        assert repr(row["error_rate"]) in svg_text
        assert repr(row["error_rate"]) in csv_text


def test_training_curve_fraction_zero_is_baseline(sweep_state):
    from serforge.classifier import evaluate

    config, prepared, _ = sweep_state
    report = run_adversarial_training_curve(config, prepared)
    per_seed = [r for r in report.rows if r["seed"] != "mean"]
    assert len(per_seed) == len(config.seeds) * 3 * len(config.mix_fractions)
    assert {r["epsilon"] for r in per_seed} == {config.attack_epsilon}
    fractions = {r["defense"] for r in per_seed}
    assert fractions == {
        "advtrain(fraction=0.0)",
        "advtrain(fraction=1.0)",
    }


def test_defense_comparison_rows(tmp_path, sweep_state):
    config, prepared, _ = sweep_state
    report = run_defense_comparison(config, prepared)
    per_seed = [r for r in report.rows if r["seed"] != "mean"]
    families = {r["defense"] for r in per_seed}
    assert families == {
        "none",
        f"randnoise(std={config.noise_std!r})",
        "advtrain(fraction=1.0)",
        "gan",
    }
    assert len(per_seed) == len(config.seeds) * 3 * 4
    paths = emit_report(report, tmp_path)
    names = sorted(p.name for p in paths)
    assert names == ["defense_comparison.svg", "report.csv"]
    ET.parse(tmp_path / "defense_comparison.svg")  # well-formed


def test_emit_empty_report_rejected(tmp_path):
    with pytest.raises(ValueError):
        emit_report(ExperimentReport([], {}), tmp_path)
