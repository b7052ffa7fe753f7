import json
from pathlib import Path

import numpy as np
import pytest

import gasfl

SCENARIOS = Path(__file__).resolve().parents[2] / "scenarios"


def test_normalize_reference_ratios():
    shares, warnings = gasfl.normalize({"A": 0.0459, "B": 0.8443})
    assert shares["A"] == pytest.approx(0.0516, abs=5e-3)
    assert shares["B"] == pytest.approx(0.9484, abs=5e-3)
    assert warnings == []


def test_normalize_all_nonpositive_splits_equally():
    shares, warnings = gasfl.normalize({"A": -1.0, "B": 0.0})
    assert shares == {"A": 0.5, "B": 0.5}
    assert warnings


def test_smape_relationship():
    rng = np.random.default_rng(0)
    f, a = rng.uniform(0, 100, 20), rng.uniform(0, 100, 20)
    assert gasfl.smape(f, a) == pytest.approx(2 * gasfl.smape_new(f, a), abs=1e-12)
    assert gasfl.smape_new(np.zeros(3), np.zeros(3)) == 0.0


def test_corr_score_matches_numpy():
    rng = np.random.default_rng(1)
    x, y = rng.normal(size=50), rng.normal(size=50)
    assert gasfl.corr_score(x.reshape(-1, 1), y) == pytest.approx(np.corrcoef(x, y)[0, 1], abs=1e-12)


def test_allocate_conserves_pools():
    cards = gasfl.allocate([("A", 0.0459, 0.0251), ("B", 0.8443, 0.1112)], 100.0, 50.0)
    assert sum(c["r_quality"] for c in cards) == pytest.approx(100.0)
    assert sum(c["r_contribution"] for c in cards) == pytest.approx(50.0)
    assert cards[0]["corr_score"] is None


def test_train_linear_recovers_line():
    x = np.linspace(0, 1, 50).reshape(-1, 1)
    w, b = gasfl.train_linear(x, 2 * x[:, 0] + 1, learning_rate=0.5, epochs=2000)
    assert w[0] == pytest.approx(2.0, abs=1e-6)
    assert b == pytest.approx(1.0, abs=1e-6)
    with pytest.raises(gasfl.ShapeError):
        gasfl.train_linear(x, np.zeros(3))


def test_simulate_bundled_scenario_is_deterministic():
    path = str(SCENARIOS / "truthful_vs_random.json")
    first = gasfl.simulate(path)
    assert first["checks"]["passed"]
    assert gasfl.simulate_json(path) == gasfl.simulate_json(path)
    assert gasfl.simulate(path) == first
    assert "scorecards" in first["vfl"]["C"]
    assert "hfl cohort" not in gasfl.render_report(json.dumps(first))


def test_simulate_from_dict_and_errors(tmp_path):
    config = json.loads((SCENARIOS / "truthful_vs_random.json").read_text())
    report = gasfl.simulate(config, seed=3)
    assert report["seed"] == 3
    config["bogus"] = True
    with pytest.raises(gasfl.ConfigError):
        gasfl.simulate(config)
    with pytest.raises(gasfl.GasflError):
        gasfl.simulate(str(tmp_path / "missing.json"))


def test_gen_data_writes_files(tmp_path):
    files = gasfl.gen_data(str(SCENARIOS / "default.json"), tmp_path / "data")
    assert len(files) == 6
    assert (tmp_path / "data" / "manifest.json").exists()
