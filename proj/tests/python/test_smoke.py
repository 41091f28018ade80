import json
import math

import numpy as np
import pytest

import choir


def test_version_and_classes():
    assert choir.__version__
    names = choir.class_names()
    assert len(names) == 12
    assert "grasp" in names and "sit" in names


def test_generate_sample_shapes_and_labels():
    s = choir.generate_sample("sit", seed=3, T=4, H1=2, W1=2, N=64, V=192)
    assert s["class_name"] == "sit"
    assert s["mode"] == "body"
    frames = s["grid"].shape[0]
    assert s["grid"].shape == (frames, 2, 2, 4)
    assert s["trajectory"].shape == (frames, 12)
    assert s["cloud"].shape == (64, 3)
    assert s["contact"].shape == (frames, 192)
    aff = s["affordance"]
    assert aff.min() >= 0.0 and aff.max() <= 1.0
    assert all(aff[i] == 1.0 for i in s["red"])
    again = choir.generate_sample("sit", seed=3, T=4, H1=2, W1=2, N=64, V=192)
    assert np.array_equal(s["grid"], again["grid"])


def test_metrics_match_hand_values():
    p, r, f1 = choir.precision_recall(3, 1, 2)
    assert (p, r) == (0.75, 0.6)
    assert math.isclose(f1, 2 / 3, rel_tol=1e-12)
    assert choir.auc([0.9, 0.8, 0.1], [1, 1, 0]) == 1.0
    assert math.isclose(choir.sim([0.5, 0.5], [0.75, 0.25]), 0.75)
    assert math.isclose(choir.aiou([0.6, 0.4, 0.0], [1, 0, 0]), 40 / 99)
    with pytest.raises(ValueError):
        choir.auc([0.1, 0.2], [1, 1])


def test_propagation_alpha_zero_is_indicator():
    rng = np.random.default_rng(0)
    pts = rng.uniform(-1, 1, size=(20, 3))
    s = choir.propagate_affordance(pts, red=[0, 1], blue=list(range(2, 10)), alpha=0.0)
    assert list(s[:2]) == [1.0, 1.0]
    assert not s[2:].any()
    s = choir.propagate_affordance(pts, red=[0, 1], blue=list(range(2, 10)))
    assert s.max() == 1.0 and s.min() >= 0.0
    with pytest.raises(ValueError):
        choir.propagate_affordance(pts, red=[0], blue=[25])


def test_cli_pipeline(tmp_path):
    data = tmp_path / "data"
    code, out, _ = choir.cli("gen-data", "--out", data, "--seed", 2, "--train", 12, "--val", 12,
                             "--T", 4, "--H1", 2, "--W1", 2, "--N", 64, "--V", 192)
    assert code == 0 and "grasp" in out
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"model": {"C": 16, "heads": 2, "st_depth": 1}}))
    ckpt = tmp_path / "model.ckpt"
    code, _, err = choir.cli("train", "--data", data, "--no-motion-ckpt", "--out", ckpt,
                             "--epochs", 1, "--config", config)
    assert code == 0, err
    report = json.loads((tmp_path / "model.ckpt.json").read_text())
    assert len(report["epochs"]) == 1

    predictor = choir.Predictor(str(ckpt))
    assert choir.predictor_config(predictor)["C"] == 16
    pred = predictor.predict(str(data / "val" / "000000.bin"))
    assert pred["affordance"].shape == (64,)
    assert pred["contact"].shape == (4, 192)
    assert pred["logits"].shape == (12,)
    assert choir.load_sample(str(data / "val" / "000000.bin"))["class_name"] == "grasp"

    code, _, _ = choir.cli("eval", "--data", tmp_path / "missing", "--oracle")
    assert code == 2
    code, _, _ = choir.cli("gen-data")
    assert code == 1
