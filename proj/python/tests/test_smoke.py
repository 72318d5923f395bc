import math

import numpy as np
import pytest

import snecl

SMALL = {"epochs": 3, "hidden": "8", "data.n": 60, "data.test_n": 60, "seed": 2}


def test_sample_gmm_is_deterministic_and_labelled():
    x, y = snecl.sample_gmm({"data.seed": 4})
    x2, y2 = snecl.sample_gmm({"data.seed": 4})
    assert x.shape == (250, 2)
    assert np.array_equal(x, x2) and list(y) == list(y2)
    assert set(y) == set(range(5))
    xt, _ = snecl.sample_gmm({"data.seed": 4}, split="test")
    assert not np.array_equal(x, xt)


def test_infonce_matches_positive_pair_kl_up_to_log_2n():
    rng = np.random.default_rng(0)
    a = rng.standard_normal((8, 3))
    b = rng.standard_normal((8, 3))
    kl = snecl.positive_pair_kl(a, b)
    assert abs(kl - snecl.infonce(a, b) - math.log(1 / 16)) < 1e-10


def test_train_embed_and_checkpoint_round_trip(tmp_path):
    model = snecl.train(SMALL)
    assert len(model.history) == 3
    x, _ = snecl.sample_gmm(SMALL)
    z = model.embed(x)
    assert z.shape == (60, 2)
    assert np.allclose(np.linalg.norm(z, axis=1), 1.0)
    path = str(tmp_path / "model.snecl")
    model.save(path)
    again = snecl.load(path)
    assert np.array_equal(again.embed(x), z)
    assert again.config["epochs"] == "3"


def test_evaluate_reports_accuracies():
    model = snecl.train(SMALL)
    report = snecl.evaluate(model, dict(SMALL, **{"eval.shift": [1, 1], "eval.lipschitz_pairs": 100}))
    for key in ("knn_accuracy", "probe_accuracy", "ood_probe_accuracy", "ood_retrained_probe_accuracy"):
        assert 0.0 <= float(report[key]) <= 1.0
    assert report["heatmap"].shape == (5, 5)


def test_train_on_given_data_needs_a_non_resampling_augmentation():
    x, y = snecl.sample_gmm(SMALL)
    with pytest.raises(snecl.ValidationError):
        snecl.train_on(x, y, SMALL)
    model = snecl.train_on(x, y, dict(SMALL, augment="gaussian_noise"))
    assert model.embed(x).shape == (60, 2)


def test_validation_errors_surface_as_value_errors():
    with pytest.raises(ValueError):
        snecl.train({"loss": "t_simclr", "normalize": "sphere"})
    with pytest.raises(snecl.FormatError):
        snecl.load("/nonexistent/model.snecl")


def test_verify_and_tammes():
    assert "theorem1" in snecl.verify_suites()
    passed, lines = snecl.verify("equivalence")
    assert passed and lines
    pent = snecl.tammes(5, 2)
    cos = pent @ pent.T
    assert abs(cos[0, 1] - math.cos(2 * math.pi / 5)) < 1e-12
