import numpy as np
import pytest

from syncup.errors import TooFewSamples, UntrainedModel, VersionMismatch
from syncup.pose_similarity import bpd_max
from syncup.regressors import (
    NN_ARCHS,
    RegressorModel,
    _init_params,
    make_addition_model,
    model_from_text,
    model_to_text,
    nn_loss_and_grads,
    ops_predict,
    train_nn,
    train_svr,
)
from syncup.metrics import rmse


def linear_dataset(n, rng, lam=0.885):
    """Noise-free linear labels: y = clamp(1 - mean(x), 0, 1)."""
    x = rng.uniform(0.0, bpd_max(lam), size=(n, 13))
    y = np.clip(1.0 - x.mean(axis=1), 0.0, 1.0)
    return x, y


SVR_HYPER = dict(c=20.0, epsilon=0.01, epochs=6000, lr=0.08, lr_decay=0.01)


# --- addition -------------------------------------------------------------------

def test_addition_perfect_sync_is_one():
    model = make_addition_model(0.885)
    assert ops_predict(model, np.zeros(13)) == 1.0


def test_addition_maximal_distance_is_zero():
    lam = 1.3
    model = make_addition_model(lam)
    assert ops_predict(model, np.full(13, bpd_max(lam))) == 0.0


def test_addition_linear_midpoint():
    lam = 1.0
    model = make_addition_model(lam)
    assert ops_predict(model, np.full(13, 1.0)) == pytest.approx(0.5)


def test_ops_predict_clamps(rng):
    model = RegressorModel(method="svr", lam=1.0,
                           params={"w": np.full(13, 10.0), "b": np.array([5.0])})
    assert ops_predict(model, rng.uniform(0, 1, 13)) == 1.0


def test_ops_predict_imputes_missing_with_mean():
    model = make_addition_model(1.0)
    x = np.array([0.4] * 12 + [np.nan])
    # imputed to the mean of present entries -> same as all 0.4
    assert ops_predict(model, x) == pytest.approx(ops_predict(model, np.full(13, 0.4)))


def test_ops_predict_all_missing_raises():
    with pytest.raises(ValueError):
        ops_predict(make_addition_model(1.0), np.full(13, np.nan))


def test_untrained_model_raises():
    with pytest.raises(UntrainedModel):
        RegressorModel(method="svr", lam=1.0).predict(np.zeros(13))


# --- SVR ------------------------------------------------------------------------

def test_svr_fits_linear_oracle(rng):
    x, y = linear_dataset(480, rng)
    model = train_svr(x[:360], y[:360], lam=0.885, **SVR_HYPER)
    pred = np.clip(model.predict(x[360:]), 0.0, 1.0)
    assert rmse(pred, y[360:]) < 0.02


def test_svr_training_predictions_inside_tube(rng):
    x, y = linear_dataset(300, rng)
    eps = 0.01
    model = train_svr(x, y, lam=0.885, **SVR_HYPER)
    resid = np.abs(model.predict(x) - y)
    # epsilon-insensitive training keeps most samples within eps + slack
    assert np.mean(resid <= eps + 0.03) >= 0.8


def test_svr_duplicated_dataset_equivalence(rng):
    """train(dup, C/2) matches train(orig, C): identical subgradients."""
    x, y = linear_dataset(120, rng)
    a = train_svr(x, y, lam=0.885, c=4.0, epsilon=0.01, epochs=800)
    b = train_svr(np.concatenate([x, x]), np.concatenate([y, y]),
                  lam=0.885, c=2.0, epsilon=0.01, epochs=800)
    np.testing.assert_allclose(a.params["w"], b.params["w"], atol=1e-10)
    np.testing.assert_allclose(a.params["b"], b.params["b"], atol=1e-10)


def test_svr_constant_labels(rng):
    x = rng.uniform(0.0, 1.8, size=(200, 13))
    y = np.full(200, 0.5)
    model = train_svr(x, y, lam=0.885, **SVR_HYPER)
    assert float(np.linalg.norm(model.params["w"])) < 0.05
    pred = model.predict(x)
    assert np.all(np.abs(pred - 0.5) < 0.1)


def test_svr_loss_curve_non_increasing_in_blocks(rng):
    x, y = linear_dataset(200, rng)
    model = train_svr(x, y, lam=0.885, **SVR_HYPER)
    curve = np.array(model.loss_curve)
    blocks = curve.reshape(20, -1).mean(axis=1)
    assert np.all(np.diff(blocks) <= 1e-9)


def test_svr_deterministic(rng):
    x, y = linear_dataset(100, rng)
    a = train_svr(x, y, lam=0.885, epochs=300)
    b = train_svr(x, y, lam=0.885, epochs=300)
    np.testing.assert_array_equal(a.params["w"], b.params["w"])


def test_svr_too_few_samples(rng):
    x, y = linear_dataset(10, rng)
    with pytest.raises(TooFewSamples):
        train_svr(x, y, lam=0.885)


# --- neural networks --------------------------------------------------------------

def central_difference_grads(params, x, y, layout, h=1e-6):
    """Finite-difference oracle for the analytic gradients."""
    grads = {}
    for key, arr in params.items():
        g = np.zeros_like(arr)
        it = np.nditer(arr, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            keep = arr[idx]
            arr[idx] = keep + h
            up, _ = nn_loss_and_grads(params, x, y, layout)
            arr[idx] = keep - h
            down, _ = nn_loss_and_grads(params, x, y, layout)
            arr[idx] = keep
            g[idx] = (up - down) / (2.0 * h)
        grads[key] = g
    return grads


@pytest.mark.parametrize("arch", ["nn_short", "nn_long"])
def test_nn_gradients_match_finite_differences(arch, rng):
    layout = NN_ARCHS[arch]
    params = _init_params(layout, rng)
    x = rng.normal(0.5, 0.4, size=(10, 13))
    y = rng.uniform(0.0, 1.0, size=10)
    _, analytic = nn_loss_and_grads(params, x, y, layout)
    numeric = central_difference_grads(params, x, y, layout)
    for key in params:
        rel = np.abs(analytic[key] - numeric[key]) / np.maximum(
            1e-8, np.abs(analytic[key]) + np.abs(numeric[key]))
        assert rel.max() < 1e-4, f"{key}: {rel.max()}"


def test_nn_first_adam_step_descends(rng):
    """Zero init on centered data: the first step moves against the gradient."""
    x = rng.normal(0.0, 1.0, size=(64, 13))
    y = x.mean(axis=1)
    zero = {"w0": np.zeros((1, 13)), "b0": np.zeros(1)}
    _, grads = nn_loss_and_grads(zero, x[:32], y[:32], NN_ARCHS["nn_short"])
    model = train_nn(x, y, arch="nn_short", lam=1.0, seed=0, epochs=1,
                     batch_size=len(x), init_params=zero)
    step = model.params["w0"] - zero["w0"]
    moved = np.abs(grads["w0"]) > 1e-12
    assert np.all(np.sign(step[moved]) == -np.sign(grads["w0"][moved]))


@pytest.mark.parametrize("arch,bound", [("nn_short", 0.05), ("nn_long", 0.05)])
def test_nn_fits_linear_oracle(arch, bound, rng):
    x, y = linear_dataset(1200, rng)
    model = train_nn(x[:1000], y[:1000], arch=arch, lam=0.885, seed=0)
    pred = np.clip(model.predict(x[1000:]), 0.0, 1.0)
    assert rmse(pred, y[1000:]) < bound


def test_nn_deterministic(rng):
    x, y = linear_dataset(100, rng)
    a = train_nn(x, y, arch="nn_long", lam=0.885, seed=11)
    b = train_nn(x, y, arch="nn_long", lam=0.885, seed=11)
    for key in a.params:
        np.testing.assert_array_equal(a.params[key], b.params[key])


def test_nn_loss_improves_over_training(rng):
    x, y = linear_dataset(400, rng)
    model = train_nn(x, y, arch="nn_short", lam=0.885, seed=2)
    assert model.loss_curve[-1] <= model.loss_curve[0]


def test_nn_too_few_samples(rng):
    x, y = linear_dataset(5, rng)
    with pytest.raises(TooFewSamples):
        train_nn(x, y, arch="nn_short", lam=0.885)


# --- serialization -----------------------------------------------------------------

@pytest.mark.parametrize("maker", [
    lambda rng: make_addition_model(0.885),
    lambda rng: train_svr(*linear_dataset(50, rng), lam=0.885, epochs=50),
    lambda rng: train_nn(*linear_dataset(50, rng), arch="nn_long", lam=0.885, epochs=3),
])
def test_model_round_trips_exactly(maker, rng):
    model = maker(rng)
    restored = model_from_text(model_to_text(model))
    assert restored.method == model.method
    assert restored.lam == model.lam
    assert restored.seed == model.seed
    assert restored.loss_curve == model.loss_curve
    for key in model.params:
        np.testing.assert_array_equal(restored.params[key], model.params[key])
        assert restored.params[key].shape == model.params[key].shape


def test_model_version_mismatch():
    text = model_to_text(make_addition_model(1.0)).replace('"version": 1', '"version": 99')
    with pytest.raises(VersionMismatch):
        model_from_text(text)


def test_ops_series_values_always_in_unit_interval(rng):
    """Clamping contract: every method yields values in [0, 1]."""
    from syncup.eval_harness import SyntheticSpec, generate
    from syncup.pose_similarity import bpd_series
    from syncup.regressors import ops_series

    spec = SyntheticSpec(dancer_count=3, fps=30, duration_ms=4000, bpm=120,
                         angular_noise_sd=0.5, dropout_prob=0.1, shuffle=False)
    streams = generate(spec, seed=31)
    series = bpd_series(streams.tracked(), 0.885)
    x, y = linear_dataset(120, rng)
    models = [
        make_addition_model(0.885),
        train_svr(x, y, lam=0.885, epochs=200),
        train_nn(x, y, arch="nn_short", lam=0.885, epochs=5),
        train_nn(x, y, arch="nn_long", lam=0.885, epochs=5),
    ]
    for model in models:
        ops = ops_series(model, series)
        assert np.all(ops.values >= 0.0) and np.all(ops.values <= 1.0)
        assert ops.values.shape[0] == series.n_frames
