import json

import numpy as np
import pytest

import intent_pred as ip

FAST = {"n_trees": 15, "n_rounds": 20}
TINY_NET = {"embeddings": "random", "embed_dim": 8, "filters": 6, "dense": 8, "max_len": 60,
            "context_filters": 4, "context_dense": 4, "max_epochs": 1, "batch_size": 32}


@pytest.fixture(scope="module")
def prepared():
    raw = ip.synth_corpus(dialogs=120, seed=5)
    prep = ip.prepare_labels(raw, top_k=32, seed=1)
    train, val, test = ip.split(prep.corpus, seed=1)
    return raw, prep, train, val, test


def test_text_helpers():
    assert ip.tokenize("Printer won't print!") == ["printer", "won", "t", "print"]
    assert ip.stem("running") == "run"
    assert len(ip.feature_names()) == 24
    assert "cnn-context-rep" in ip.model_kinds()


def test_metrics():
    assert ip.sample_accuracy(["PA", "FD"], ["PA"]) == pytest.approx(0.5)
    p, r, f = ip.micro_prf([["PA"], ["OQ", "FD"]], [["PA"], ["OQ"]])
    assert (p, r) == pytest.approx((2 / 3, 1.0))
    assert f == pytest.approx(0.8)
    t, pval = ip.paired_ttest([0.9, 0.8, 0.7, 1.0], [0.5, 0.6, 0.4, 0.5])
    assert t > 0 and 0 < pval < 0.05
    with pytest.raises(ip.IntentError):
        ip.sample_accuracy(["XX"], ["PA"])


def test_prepare_and_split(prepared):
    raw, prep, train, val, test = prepared
    assert prep.stats["utterances"] == len(raw)
    assert 0 < prep.stats["coverage"] <= 1
    assert len(train) + len(val) + len(test) == len(prep.corpus)
    assert all(g for g in prep.corpus.gold())
    again = ip.prepare_labels(raw, seed=1, plan_json=prep.plan_json)
    assert again.fingerprint == prep.fingerprint


def test_features(prepared):
    _, _, train, _, test = prepared
    X = ip.features(test, tfidf_corpus=train)
    assert X.shape == (len(test), 24)
    assert np.isfinite(X).all()


def test_train_predict_evaluate(prepared, tmp_path):
    _, prep, train, val, test = prepared
    model = ip.train(train, val, prep.fingerprint, model="rf-chain", config=FAST)
    preds = ip.predict(model, test)
    assert len(preds) == len(test)
    assert all(p["labels"] for p in preds)
    report = ip.evaluate(model, test, prep.fingerprint)
    assert report["samples"] == len(test)
    assert report["accuracy"] > 0.5

    model.save(str(tmp_path / "m"))
    loaded = ip.load_model(tmp_path / "m")
    assert [p["labels"] for p in ip.predict(loaded, test)] == [p["labels"] for p in preds]

    with pytest.raises(ip.IntentError):
        ip.evaluate(model, test, "not-the-plan")


def test_neural_model(prepared):
    _, prep, train, val, test = prepared
    model = ip.train(train, val, prep.fingerprint, model="cnn", config=TINY_NET)
    assert model.kind == "cnn"
    assert all(p["labels"] for p in ip.predict(model, test))


def test_importance(prepared):
    _, _, train, _, _ = prepared
    rows = ip.importance(train, config=FAST)
    assert len(rows) == 24
    scores = [s for _, s in rows]
    assert scores == sorted(scores, reverse=True)


def test_bad_config(prepared):
    _, prep, train, val, _ = prepared
    with pytest.raises(ip.IntentError):
        ip.train(train, val, prep.fingerprint, config={"no_such_key": 1})


def test_report_is_json_serializable(prepared):
    _, prep, train, val, test = prepared
    model = ip.train(train, val, prep.fingerprint, model="nb-chain")
    json.dumps(ip.evaluate(model, test, prep.fingerprint))
