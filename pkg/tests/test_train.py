import math

import numpy as np
import pytest

from fvtrain.ansatz import CircuitSpec, FilterParams, GateTemplate
from fvtrain.data import Dataset
from fvtrain.errors import CalibrationError, ConfigurationError, NumericDivergenceError
from fvtrain.grad import param_shift_feature_grad
from fvtrain.qcnn import ModelParams, init_model
from fvtrain.train import (
    TrainConfig,
    build_model,
    calibrate_initial_fidelity,
    dataset_fidelity,
    evaluate,
    train,
)


def toy_dataset(n=12, seed=0, shape=(4, 4)):
    rng = np.random.default_rng(seed)
    labels = np.arange(n) % 2
    images = rng.uniform(size=(n,) + shape) * 0.5 + labels[:, None, None] * 0.5
    return Dataset(images, labels, {0: 0, 1: 1}, np.arange(n))


def small_config(**kw):
    base = dict(epochs=2, batch_size=4, learning_rate=0.2, lam=0.3, fv_form="similarity", seed=1)
    base.update(kw)
    return TrainConfig(**base)


def params_bytes(model):
    return b"".join(p.angles.tobytes() for _, p in model.filters) + model.fc_weights.tobytes() + model.fc_bias.tobytes()


def test_zero_learning_rate_keeps_parameters():
    data = toy_dataset()
    cfg = small_config(learning_rate=0.0)
    final, records = train(cfg, data, data)
    assert params_bytes(final) == params_bytes(build_model(cfg, data))
    assert len(records) == 2


def test_vanilla_and_fv_share_initialization():
    data = toy_dataset()
    vanilla, fv = small_config(lam=0.0), small_config(lam=0.5)
    assert params_bytes(build_model(vanilla, data)) == params_bytes(build_model(fv, data))
    m0, _ = train(small_config(lam=0.0, epochs=1), data, data)
    m1, _ = train(small_config(lam=0.5, epochs=1), data, data)
    assert params_bytes(m0) != params_bytes(m1)


def test_single_sgd_step_on_cosine():
    # <Z> of Rx(theta)|0> is cos(theta); one step of theta - lr * d/dtheta
    spec = CircuitSpec(1, (GateTemplate("RX", 0, param_index=0),), 1)
    theta = 1.0
    g = param_shift_feature_grad(spec, FilterParams([theta]), [0.0], 0, 0)
    assert theta - 0.1 * g == pytest.approx(1.0 + 0.1 * math.sin(1.0), abs=1e-15)
    assert theta - 0.1 * g == pytest.approx(1.0841, abs=5e-5)


def test_evaluate_uniform_model_ties_to_first_class():
    data = toy_dataset()
    m = build_model(small_config(), data)
    m = m.with_params([p.angles for _, p in m.filters], np.zeros_like(m.fc_weights), np.zeros(2))
    acc, _ = evaluate(m, data)
    assert acc == 0.5


def test_identical_filters_full_fidelity():
    data = toy_dataset()
    m = build_model(small_config(), data)
    twin = ModelParams((m.filters[0], m.filters[0]), m.fc_weights, m.fc_bias, m.image_shape, m.patch, m.stride)
    _, fid = evaluate(twin, data)
    assert fid == pytest.approx(1.0, abs=1e-12)


def test_accuracy_complement_on_flipped_labels():
    data = toy_dataset(n=15)
    m = build_model(small_config(), data)
    flipped = Dataset(data.images, 1 - data.labels, data.class_map, data.source_index)
    assert evaluate(m, data)[0] + evaluate(m, flipped)[0] == pytest.approx(1.0)


def test_evaluate_empty():
    data = toy_dataset()
    with pytest.raises(ConfigurationError):
        evaluate(build_model(small_config(), data), data.subset(np.array([], dtype=int)))


def test_records_consistent_and_deterministic():
    data = toy_dataset()
    cfg = small_config(epochs=3, batch_size=5)  # last batch is partial
    _, r1 = train(cfg, data, data)
    _, r2 = train(cfg, data, data)
    assert r1 == r2
    for r in r1:
        assert r.train_loss == pytest.approx(r.ce_loss + cfg.lam * r.fv_loss, abs=1e-10)
        assert 0 <= r.mean_fidelity <= 1 and 0 <= r.test_accuracy <= 1


def test_linear_schedule():
    cfg = small_config(epochs=4, learning_rate=0.4, lr_schedule="linear")
    assert [cfg.lr_at(e) for e in range(1, 5)] == pytest.approx([0.4, 0.3, 0.2, 0.1])
    assert small_config().lr_at(3) == 0.2


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_divergence_reported_with_context():
    data = toy_dataset()
    with pytest.raises(NumericDivergenceError) as info:
        train(small_config(learning_rate=1e308, lam=1e308), data, data)
    assert info.value.epoch == 1 and info.value.batch is not None


@pytest.mark.parametrize(
    "kw", [dict(epochs=0), dict(batch_size=0), dict(lam=-1.0), dict(fv_form="x"), dict(n_filters=1)]
)
def test_config_validation(kw):
    with pytest.raises(ConfigurationError):
        small_config(**kw)


def test_empty_training_set():
    data = toy_dataset()
    with pytest.raises(ConfigurationError):
        train(small_config(), data.subset(np.array([], dtype=int)), data)


def test_calibration_exact_target():
    data = toy_dataset()
    m = init_model(3, image_shape=(4, 4))
    target = float(np.mean(dataset_fidelity(m, data.images)))
    seed, fid = calibrate_initial_fidelity(target, 0.0, [3], data.images)
    assert (seed, fid) == (3, target)


def test_calibration_failure_reports_closest():
    data = toy_dataset()
    with pytest.raises(CalibrationError) as info:
        calibrate_initial_fidelity(1.0, 0.0, range(5), data.images)
    assert info.value.best_seed in range(5)
    assert info.value.best_fidelity < 1.0
