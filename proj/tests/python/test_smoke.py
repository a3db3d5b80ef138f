import math

import numpy as np
import pytest

import hpiln


def test_version():
    assert hpiln.version() == "0.1.0"


def test_pairwise_distances():
    pts = np.array([[0.0, 0.0], [3.0, 0.0], [3.0, 4.0]])
    d = hpiln.pairwise_distances(pts)
    assert d.shape == (3, 3)
    assert d[0, 1] == 3.0
    assert d[1, 2] == 4.0
    assert d[0, 2] == 5.0
    assert np.all(d == d.T)
    assert np.all(np.diag(d) == 0.0)


def test_mine_batch_hand_case():
    # P=2, K=1 on a line: blocks {0, 2} and {2.1, 5}.
    emb = np.array([[0.0], [2.0], [2.1], [5.0]])
    mined = hpiln.mine_batch(2, 1, emb)
    assert [m["anchor"] for m in mined] == [0, 1, 2, 3]
    a0 = mined[0]
    assert a0["global_pos"] == 1 and a0["cross_pos"] == 1
    assert a0["global_neg"] == 2 and a0["cross_neg"] == 3
    assert a0["d_global_neg"] == pytest.approx(2.1)
    assert a0["d_cross_neg"] == pytest.approx(5.0)


def test_degenerate_pentaplet_loss():
    # Identical embeddings: every hinge is exactly the margin.
    out = hpiln.hard_pentaplet_loss(2, 1, np.zeros((4, 3)), margin=0.25)
    assert out["value"] == 0.5
    assert out["global_value"] == 1.0
    assert out["cross_value"] == 1.0
    assert out["active_count"] == 8
    assert np.all(out["grad"] == 0.0)


def test_identity_loss_uniform():
    out = hpiln.identity_loss(np.zeros((2, 4)), [0, 3])
    assert out["value"] == pytest.approx(math.log(4.0), rel=1e-12)
    assert out["grad"].shape == (2, 4)
    assert abs(out["grad"].sum()) < 1e-14


def test_hpi_composition():
    rng = np.random.default_rng(7)
    emb = rng.normal(size=(8, 4))
    logits = rng.normal(size=(8, 2))
    labels = [0, 0, 0, 0, 1, 1, 1, 1]
    hp = hpiln.hard_pentaplet_loss(2, 2, emb)
    ident = hpiln.identity_loss(logits, labels)
    hpi = hpiln.hpi_loss(2, 2, emb, logits, labels, identity_weight=0.5)
    assert hpi["value"] == hp["value"] + 0.5 * ident["value"]
    assert np.array_equal(hpi["grad_embeddings"], hp["grad"])
    assert np.allclose(hpi["grad_logits"], 0.5 * ident["grad"])


def test_generate_synthetic_shape():
    ds = hpiln.generate_synthetic(num_identities=5, samples=10, dim=8, seed=3)
    assert ds["vectors"].shape == (100, 8)
    assert len(ds["identities"]) == 100
    assert ds["modalities"].count("RGB") == 50
    assert ds["modalities"].count("IR") == 50
    again = hpiln.generate_synthetic(num_identities=5, samples=10, dim=8, seed=3)
    assert np.array_equal(ds["vectors"], again["vectors"])


def test_train_and_evaluate():
    ds = hpiln.generate_synthetic(num_identities=5, samples=8, dim=6, seed=1)
    out = hpiln.train(
        ds["vectors"], ds["identities"], ds["modalities"], ds["cameras"],
        p=4, k=2, iterations=400, output_dim=2, seed=5,
    )
    assert out["vectors"].shape == (80, 2)
    assert len(out["loss_history"]) == 400
    assert out["loss_history"][-1] < out["loss_history"][0]
    report = hpiln.evaluate(
        out["vectors"], out["identities"], out["modalities"], out["cameras"],
        trials=3, seed=9,
    )
    assert report["rank1"] >= 0.6
    cmc = report["cmc"]
    assert all(b >= a for a, b in zip(cmc, cmc[1:]))
    assert cmc[-1] == 1.0


def test_error_types():
    assert issubclass(hpiln.DataError, RuntimeError)
    assert issubclass(hpiln.NumericError, ArithmeticError)
    ds = hpiln.generate_synthetic(num_identities=3, samples=4, dim=4, seed=2)
    with pytest.raises(hpiln.DataError):
        hpiln.train(
            ds["vectors"], ds["identities"], ds["modalities"], ds["cameras"],
            p=8, k=2, iterations=1,
        )
    with pytest.raises(hpiln.NumericError):
        hpiln.train(
            ds["vectors"], ds["identities"], ds["modalities"], ds["cameras"],
            p=2, k=2, iterations=1, identity_weight=float("inf"),
        )
    with pytest.raises(ValueError):
        hpiln.mine_batch(2, 1, np.zeros((3, 2)))
