import numpy as np
import pytest

from serforge.classifier import (
    Metrics,
    ModelParams,
    TrainConfig,
    evaluate,
    forward,
    init_model,
    load_model,
    loss_and_gradients,
    save_model,
    train,
)
from serforge.errors import (
    DimensionMismatch,
    EmptyDataset,
    SingleClassTrainingSet,
)
from serforge.kernels import lstm_gates_forward


def small_model(seed=0, input_dim=4, hidden=(5, 5)):
    return init_model(np.random.default_rng(seed), input_dim, hidden)


def zero_model(input_dim=4, hidden=(5, 5)):
    params = small_model(0, input_dim, hidden)
    for part in (params.lstm1, params.lstm2, params.dense):
        for k in part:
            part[k][...] = 0.0
    return params


def test_zero_weights_give_uniform_probabilities():
    params = zero_model()
    probs = forward(params, np.random.default_rng(1).normal(size=(7, 4)))
    np.testing.assert_allclose(probs, [0.5, 0.5], atol=1e-12)


def test_probabilities_sum_to_one():
    rng = np.random.default_rng(2)
    for _ in range(1000):
        params = init_model(rng, 3, (4, 4))
        seq = rng.normal(size=(int(rng.integers(1, 6)), 3))
        probs = forward(params, seq)
        assert probs.sum() == pytest.approx(1.0, abs=1e-9)
        assert np.all(probs > 0) and np.all(probs < 1)


def test_single_frame_matches_cell_step_oracle():
    rng = np.random.default_rng(3)
    params = small_model(3)
    x = rng.normal(size=(1, 4))

    def cell(p, inp):
        hidden = p["Wh"].shape[0]
        pre = inp @ p["Wx"] + np.zeros(hidden) @ p["Wh"] + p["b"]
        _, c, h = lstm_gates_forward(pre[None, :], np.zeros((1, hidden)))
        return h[0]

    h1 = cell(params.lstm1, x[0])
    h2 = cell(params.lstm2, h1)
    logits = h2 @ params.dense["W"] + params.dense["b"]
    expected = np.exp(logits) / np.exp(logits).sum()
    np.testing.assert_allclose(forward(params, x), expected, atol=1e-12)


def test_dimension_mismatch():
    params = small_model()
    with pytest.raises(DimensionMismatch):
        forward(params, np.zeros((3, 7)))


def test_gradients_match_finite_differences():
    rng = np.random.default_rng(4)
    params = small_model(5, input_dim=4, hidden=(5, 5))
    batch = [(rng.normal(size=(3, 4)), 0), (rng.normal(size=(3, 4)), 1)]
    loss, grads = loss_and_gradients(params, batch)
    eps = 1e-5
    parts = (("lstm1", params.lstm1), ("lstm2", params.lstm2), ("dense", params.dense))
    for part_name, part in parts:
        for key, arr in part.items():
            flat = arr.reshape(-1)
            picks = rng.choice(flat.size, size=min(12, flat.size), replace=False)
            for j in picks:
                old = flat[j]
                flat[j] = old + eps
                up, _ = loss_and_gradients(params, batch)
                flat[j] = old - eps
                down, _ = loss_and_gradients(params, batch)
                flat[j] = old
                fd = (up - down) / (2 * eps)
                g = grads[part_name][key].reshape(-1)[j]
                if abs(fd) < 1e-7:
                    assert g == pytest.approx(fd, abs=1e-7)
                else:
                    assert g == pytest.approx(fd, rel=1e-4, abs=1e-7)


def test_confident_correct_prediction_saturates():
    params = small_model(6)
    params.dense["b"][...] = [50.0, -50.0]
    seq = np.zeros((2, 4))
    loss, grads = loss_and_gradients(params, [(seq, 0)])
    assert loss < 1e-6
    norms = [
        np.linalg.norm(g)
        for part in grads.values()
        for g in part.values()
    ]
    assert max(norms) < 1e-4


def test_duplicated_batch_entry_is_mean():
    rng = np.random.default_rng(7)
    params = small_model(8)
    item = (rng.normal(size=(4, 4)), 1)
    loss1, grads1 = loss_and_gradients(params, [item])
    loss2, grads2 = loss_and_gradients(params, [item, item])
    assert loss1 == pytest.approx(loss2, abs=1e-12)
    for part in grads1:
        for k in grads1[part]:
            np.testing.assert_allclose(grads1[part][k], grads2[part][k], atol=1e-12)


def _separable_dataset(rng, n=40, steps=6, dim=4, gap=3.0):
    data = []
    for i in range(n):
        label = i % 2
        center = gap if label else -gap
        data.append((rng.normal(center, 1.0, (steps, dim)), label))
    return data


def test_separable_data_reaches_high_train_ua():
    rng = np.random.default_rng(9)
    data = _separable_dataset(rng)
    # logistic-regression oracle on sequence means confirms separability
    means = np.array([seq.mean(axis=0) for seq, _ in data])
    labels = np.array([lab for _, lab in data])
    from sklearn.linear_model import LogisticRegression

    oracle = LogisticRegression().fit(means, labels)
    assert oracle.score(means, labels) >= 0.95

    params, _ = train(
        data, data, TrainConfig(seed=0, max_epochs=30), hidden_sizes=(8, 8)
    )
    assert evaluate(params, data).unweighted_accuracy >= 95.0


def test_shuffled_labels_give_chance_level():
    rng = np.random.default_rng(10)
    data = _separable_dataset(rng, n=40)
    shuffled = [(seq, int(rng.integers(0, 2))) for seq, _ in data]
    eval_data = _separable_dataset(np.random.default_rng(11), n=40)
    eval_shuffled = [(seq, int(rng.integers(0, 2))) for seq, _ in eval_data]
    params, _ = train(
        shuffled, eval_shuffled, TrainConfig(seed=1, max_epochs=10), hidden_sizes=(6, 6)
    )
    ua = evaluate(params, eval_shuffled).unweighted_accuracy
    assert 40.0 <= ua <= 60.0


def test_training_determinism():
    rng = np.random.default_rng(12)
    data = _separable_dataset(rng, n=20, steps=4)
    a, _ = train(data, data, TrainConfig(seed=5, max_epochs=5), hidden_sizes=(6, 6))
    b, _ = train(data, data, TrainConfig(seed=5, max_epochs=5), hidden_sizes=(6, 6))
    for part in ("lstm1", "lstm2", "dense"):
        for k, v in getattr(a, part).items():
            assert np.array_equal(v, getattr(b, part)[k])


def test_lr_schedule_is_halving_sequence():
    rng = np.random.default_rng(13)
    data = [(rng.normal(size=(3, 4)), i % 2) for i in range(8)]
    _, history = train(
        data, data, TrainConfig(seed=2, max_epochs=40), hidden_sizes=(4, 4)
    )
    lrs = [h["lr"] for h in history]
    assert all(b <= a for a, b in zip(lrs, lrs[1:]))
    for lr in lrs:
        k = np.log2(0.002 / lr)
        assert k == pytest.approx(round(k), abs=1e-9)


def test_single_class_training_set_raises():
    rng = np.random.default_rng(14)
    data = [(rng.normal(size=(3, 4)), 0) for _ in range(6)]
    with pytest.raises(SingleClassTrainingSet):
        train(data, data, TrainConfig(seed=0, max_epochs=2))


def test_evaluate_perfect_and_degenerate():
    params = zero_model()
    # zero model predicts argmax of equal probs -> class 0 for everyone
    rng = np.random.default_rng(15)
    balanced = [(rng.normal(size=(3, 4)), i % 2) for i in range(10)]
    metrics = evaluate(params, balanced)
    assert metrics.unweighted_accuracy == pytest.approx(50.0)
    assert metrics.error_rate == pytest.approx(50.0)


def test_evaluate_confusion_arithmetic():
    # confusion {{8,2},{3,7}} -> UA 75
    confusion = np.array([[8, 2], [3, 7]])
    recalls = confusion.diagonal() / confusion.sum(axis=1)
    assert recalls.mean() * 100 == pytest.approx(75.0)
    metrics = Metrics(75.0, 25.0, confusion)
    assert metrics.error_rate == 100 - metrics.unweighted_accuracy


def test_evaluate_order_invariant():
    rng = np.random.default_rng(16)
    params = small_model(17)
    data = [(rng.normal(size=(int(rng.integers(2, 6)), 4)), i % 2) for i in range(12)]
    a = evaluate(params, data)
    b = evaluate(params, data[::-1])
    assert a.unweighted_accuracy == b.unweighted_accuracy


def test_evaluate_empty_raises():
    with pytest.raises(EmptyDataset):
        evaluate(small_model(), [])


def test_checkpoint_roundtrip(tmp_path):
    params = small_model(18)
    path = tmp_path / "model.npz"
    save_model(params, path)
    back = load_model(path)
    assert back.input_dim == params.input_dim
    assert back.hidden_sizes == params.hidden_sizes
    for part in ("lstm1", "lstm2", "dense"):
        for k, v in getattr(params, part).items():
            assert np.array_equal(v, getattr(back, part)[k])
