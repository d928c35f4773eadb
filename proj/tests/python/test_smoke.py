import math

import numpy as np
import pytest

import faceq


def test_z_score_direct():
    imp = [0.1, 0.2, 0.3, 0.2]
    mu = sum(imp) / len(imp)
    sd = math.sqrt(sum((v - mu) ** 2 for v in imp) / len(imp))
    assert faceq.z_score(0.9, imp) == pytest.approx((0.9 - mu) / sd, rel=1e-12)


def test_error_carries_code():
    with pytest.raises(faceq.FaceqError) as info:
        faceq.z_score(0.9, [0.2])
    assert info.value.code == "E_TOO_FEW_IMPOSTORS"


def test_spearman_ties():
    assert faceq.spearman([1, 2, 3, 4], [10, 20, 30, 40]) == pytest.approx(1.0)
    assert faceq.spearman([1, 2, 3, 4], [4, 3, 2, 1]) == pytest.approx(-1.0)


def test_synth_mqv_tracks_latent():
    s = faceq.synth_corpus(n_subjects=40, images_per_subject=4, seed=3, comparisons_per_worker=200)
    quality, failures = faceq.mqv(s["scores"], s["corpus"], s["gallery_ids"], s["probe_ids"])
    assert not failures
    assert list(quality) == s["probe_ids"]
    latent = [s["latent"][p] for p in s["probe_ids"]]
    assert faceq.spearman(list(quality.values()), latent) > 0.9


def test_train_predict_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    x = rng.normal(size=(60, 3))
    y = np.sin(x[:, 0]) + 0.1 * x[:, 1]
    model = faceq.train(x, y.tolist(), faceq.SvrParams(C=10, epsilon=0.01, gamma=0.5))
    pred = np.array(model.predict(x))
    assert np.corrcoef(pred, y)[0, 1] > 0.95
    path = tmp_path / "m.json"
    model.save(path)
    again = faceq.load_model(path)
    assert np.array_equal(np.array(again.predict(x)), pred)


def test_human_quality_and_evr():
    s = faceq.synth_corpus(n_subjects=30, images_per_subject=4, seed=5, n_workers=6, comparisons_per_worker=400)
    hqv = faceq.human_quality(s["comparisons"], rank=3, seed=1)
    ids = list(hqv["quality"])
    assert faceq.spearman([hqv["quality"][i] for i in ids], [s["latent"][i] for i in ids]) > 0.8
    assert hqv["matrix"].shape == (6, len(ids))

    quality, _ = faceq.mqv(s["scores"], s["corpus"], s["gallery_ids"], s["probe_ids"])
    curve = faceq.evr_curve(s["scores"], s["corpus"], quality, "fnmr", 0.1)
    assert curve["reject_fractions"][0] == 0.0
    assert len(curve["error_values"]) == 51
    assert curve["error_values"][-1] <= curve["error_values"][0]


def test_load_features(tmp_path):
    s = faceq.synth_corpus(n_subjects=5, images_per_subject=3, seed=1, comparisons_per_worker=10)
    path = tmp_path / "f.csv"
    s["corpus"].save(path)
    c = faceq.load_features(path)
    assert len(c) == 15 and c.dim == 8
    assert np.allclose(c.features(), s["corpus"].features())
