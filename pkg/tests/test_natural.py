import json

import numpy as np
import pytest

from softtype.errors import CheckpointError, MatrixFormatError
from softtype.logic import IdentifierSet, TypeUniverse
from softtype.natural import (
    CharVocab,
    LabelledCorpus,
    LstmModel,
    TrainConfig,
    check_natural_matrix,
    fit,
    load_matrix,
    predict_matrix,
    read_corpus,
    save_matrix,
    write_corpus,
)
from softtype.natural.matrix import matrix_to_json
from softtype.natural.train import accuracy, nll, nll_and_grads
from softtype.synth import DEFAULT_TYPES

TYPES = TypeUniverse(DEFAULT_TYPES)
NUM = 0


def small_model(seed=0, hidden=4, embed=3):
    return LstmModel.initialise(DEFAULT_TYPES, embed_dim=embed, hidden_dim=hidden, seed=seed)


def loss_fd(model, names, labels, key, h=1e-6):
    fd = np.zeros_like(model.params[key])
    for idx in np.ndindex(fd.shape):
        old = model.params[key][idx]
        model.params[key][idx] = old + h
        up = nll(model, names, labels)
        model.params[key][idx] = old - h
        down = nll(model, names, labels)
        model.params[key][idx] = old
        fd[idx] = (up - down) / (2 * h)
    return fd


def test_vocab_has_oov_slot():
    vocab = CharVocab()
    assert len(vocab) == 96
    assert vocab.encode("aé") == [vocab.encode("a")[0], CharVocab.OOV]


def test_forward_is_a_log_distribution():
    model = small_model()
    for name in ("x", "count", "isValid", "café", "a_b$c"):
        logp = model.forward(name)
        assert np.all(logp <= 0)
        assert abs(np.exp(logp).sum() - 1.0) < 1e-6
    np.testing.assert_array_equal(model.forward("count"), model.forward("count"))


def test_zero_model_is_uniform():
    model = LstmModel.zeros(DEFAULT_TYPES, embed_dim=5, hidden_dim=6)
    np.testing.assert_allclose(model.forward("anything"), np.log(np.full(4, 0.25)), atol=1e-15)


def test_empty_name_is_rejected():
    with pytest.raises(ValueError):
        small_model().forward("")


def test_batched_forward_matches_single_names():
    model = small_model(hidden=5)
    names = ["a", "count", "isNextPage", "xy"]
    batch = model.forward_batch(names)
    for i, n in enumerate(names):
        np.testing.assert_allclose(batch[i], model.forward(n), atol=1e-14)


@pytest.mark.parametrize("key", ["embedding", "w_input", "w_hidden", "b_gates", "w_out", "b_out"])
def test_backprop_through_time_matches_finite_differences(key):
    model = small_model(seed=3, hidden=4)
    names, labels = ["abc"], np.array([2])
    _, grads = nll_and_grads(model, names, labels)
    fd = loss_fd(model, names, labels, key)
    rows = sorted(set(model.vocab.encode("abc")))
    if key == "embedding":  # only rows of characters that occur can be nonzero
        np.testing.assert_array_equal(np.delete(grads[key], rows, axis=0), 0.0)
        grads, fd = {key: grads[key][rows]}, fd[rows]
    err = np.max(np.abs(grads[key] - fd)) / max(np.max(np.abs(fd)), 1e-8)
    assert err < 1e-3


def test_masked_batch_gradients_match_finite_differences():
    model = small_model(seed=4, hidden=4)
    names, labels = ["ab", "count", "x"], np.array([0, 1, 2])
    _, grads = nll_and_grads(model, names, labels)
    for key in ("w_hidden", "w_input", "b_gates"):
        fd = loss_fd(model, names, labels, key)
        assert np.max(np.abs(grads[key] - fd)) < 1e-7


def test_single_example_is_memorised():
    corpus = LabelledCorpus((("x", 0),), TYPES)
    run = fit(corpus, TrainConfig(epochs=500, max_steps=500, val_fraction=0.0))
    assert run.steps <= 500
    assert nll(run.model, ["x"], [0]) < 0.01


def test_training_is_reproducible():
    corpus = LabelledCorpus((("cnt", 0), ("msg", 1), ("isOk", 2), ("idx", 0), ("name", 1)), TYPES)
    cfg = TrainConfig(epochs=3, embed_dim=4, hidden_dim=4, batch_size=2, val_fraction=0.4)
    a, b = fit(corpus, cfg), fit(corpus, cfg)
    assert a.train_nll == b.train_nll
    for k in a.model.params:
        assert np.array_equal(a.model.params[k], b.model.params[k])


def test_trained_model_learns_conventions(trained_run, name_split):
    model = trained_run.model
    assert all(b < a for a, b in zip(trained_run.train_nll[:5], trained_run.train_nll[1:5]))
    test = name_split[1]
    assert accuracy(model, test.names, test.labels) >= 0.85
    probs = np.exp(model.forward("count"))
    assert np.argmax(probs) == NUM and probs[NUM] > 0.8


def test_predicted_matrix_for_the_add_example(toy_model):
    m = predict_matrix(toy_model, IdentifierSet(("start", "end", "addNum")))
    check_natural_matrix(m)
    assert list(np.argmax(m, axis=1)) == [NUM, NUM, NUM]


def test_predicted_rows_are_normalised_and_deterministic(toy_model):
    m = predict_matrix(toy_model, ["q", "value", "value", "isThere", "x" * 40])
    np.testing.assert_allclose(m.sum(axis=1), 1.0, atol=1e-6)
    np.testing.assert_array_equal(m[1], m[2])


def test_prediction_aligns_columns_to_a_universe(toy_model):
    universe = TypeUniverse(("string", "number", "date"))
    m = predict_matrix(toy_model, ["count"], universe)
    assert m[0, 2] == 0.0
    assert np.argmax(m[0]) == 1
    np.testing.assert_allclose(m.sum(axis=1), 1.0)


def test_matrix_file_round_trip_is_exact(tmp_path):
    ids = IdentifierSet(("f.a", "f"))
    m = np.array([[0.1, 0.2, 0.3, 0.4], [1 / 3, 1 / 3, 1 / 6, 1 / 6]])
    save_matrix(m, ids, TYPES, tmp_path / "m.json")
    assert np.array_equal(load_matrix(tmp_path / "m.json", ids, TYPES), m)


def test_exported_prediction_loads_back(toy_model, tmp_path):
    ids = IdentifierSet(("f.start", "f.msg", "f"))
    m = predict_matrix(toy_model, ["start", "msg", "f"], TYPES)
    save_matrix(m, ids, TYPES, tmp_path / "m.json")
    np.testing.assert_allclose(load_matrix(tmp_path / "m.json", ids, TYPES), m, atol=1e-9)


def test_matrix_columns_are_reordered_by_name():
    ids = IdentifierSet(("x",))
    doc = {"types": ["string", "number"], "rows": {"x": [0.25, 0.75]}}
    from softtype.natural.matrix import matrix_from_json

    np.testing.assert_array_equal(matrix_from_json(doc, ids, TYPES), [[0.75, 0.25, 0.0, 0.0]])


@pytest.mark.parametrize(
    "doc,match",
    [
        ({"types": ["number", "string"], "rows": {"x": [0.25, 0.25]}}, "sums to"),
        ({"types": ["number", "date"], "rows": {"x": [0.5, 0.5]}}, "unknown type"),
        ({"types": ["number", "number"], "rows": {"x": [0.5, 0.5]}}, "duplicate"),
        ({"types": ["number", "string"], "rows": {}}, "no row"),
        ({"types": ["number", "string"], "rows": {"x": [1.0]}}, "entries"),
        ({"types": ["number", "string"], "rows": {"x": [1.5, -0.5]}}, "outside"),
        ({"types": ["number", "string"], "rows": {"x": ["a", "b"]}}, "numeric"),
        ([1, 2], "object"),
    ],
)
def test_bad_matrix_files_are_rejected(tmp_path, doc, match):
    path = tmp_path / "m.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(MatrixFormatError, match=match):
        load_matrix(path, IdentifierSet(("x",)), TYPES)


def test_missing_rows_can_be_filled_uniformly(tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps({"types": list(DEFAULT_TYPES), "rows": {}}))
    m = load_matrix(path, IdentifierSet(("x",)), TYPES, allow_missing=True)
    np.testing.assert_array_equal(m, [[0.25] * 4])


def test_loose_rows_are_renormalised(tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps({"types": ["number", "string"], "rows": {"x": [0.5004, 0.5]}}))
    m = load_matrix(path, IdentifierSet(("x",)), TYPES)
    assert abs(m.sum() - 1.0) < 1e-12


def test_matrix_json_shape_is_checked():
    with pytest.raises(MatrixFormatError):
        matrix_to_json(np.ones((2, 4)) / 4, IdentifierSet(("x",)), TYPES)


def test_checkpoint_round_trip_is_exact(tmp_path):
    model = small_model(seed=9, hidden=6, embed=5)
    model.save(tmp_path / "m.ckpt")
    back = LstmModel.load(tmp_path / "m.ckpt")
    assert back.types == model.types and back.vocab.alphabet == model.vocab.alphabet
    for k in model.params:
        assert np.array_equal(back.params[k], model.params[k])
    assert np.array_equal(back.forward("idx"), model.forward("idx"))


def test_checkpoint_rejects_mismatched_dimensions(tmp_path):
    doc = small_model().to_json()
    doc["dims"]["hidden"] = 99
    with pytest.raises(CheckpointError):
        LstmModel.from_json(doc)
    doc = small_model().to_json()
    doc["params"]["w_out"]["shape"] = [4, 3]
    doc["params"]["w_out"]["data"] = doc["params"]["w_out"]["data"][:12]
    with pytest.raises(CheckpointError):
        LstmModel.from_json(doc)
    doc = small_model().to_json()
    doc["version"] = 7
    with pytest.raises(CheckpointError):
        LstmModel.from_json(doc)
    (tmp_path / "bad.ckpt").write_text("{")
    with pytest.raises(CheckpointError):
        LstmModel.load(tmp_path / "bad.ckpt")


def test_corpus_round_trip(tmp_path):
    corpus = LabelledCorpus((("cnt", 0), ("msg", 1), ("isOk", 2)), TYPES)
    write_corpus(corpus, tmp_path / "c.tsv")
    assert read_corpus(tmp_path / "c.tsv", TYPES).pairs == corpus.pairs
    inferred = read_corpus(tmp_path / "c.tsv")
    assert inferred.universe.names == ("number", "string", "boolean")


def test_corpus_rejects_bad_lines(tmp_path):
    (tmp_path / "c.tsv").write_text("cnt number extra\n")
    with pytest.raises(ValueError, match="c.tsv:1"):
        read_corpus(tmp_path / "c.tsv")
    (tmp_path / "c.tsv").write_text("cnt\tdate\n")
    with pytest.raises(ValueError):
        read_corpus(tmp_path / "c.tsv", TYPES)
    with pytest.raises(ValueError):
        LabelledCorpus((("x", 9),), TYPES)


def test_empty_corpus_cannot_be_trained():
    with pytest.raises(ValueError):
        fit(LabelledCorpus((), TYPES))
