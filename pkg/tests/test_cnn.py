import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import finite_difference_check
from tfbench import cnn
from tfbench.cnn import ModelConfig, TrainConfig, build_model

TINY = ModelConfig(input_height=22, input_width=22, conv_filters=(2, 3, 4), dense_units=(5, 6))


def images(n, cfg=TINY, seed=0):
    rng = np.random.default_rng(seed)
    return rng.integers(0, 256, (n, cfg.input_height, cfg.input_width, 3)).astype(float)


class TestArchitecture:
    def test_shape_chain_128(self):
        cfg = ModelConfig(input_height=128, input_width=128)
        sizes = [h for h, _ in cfg.feature_shapes()]
        assert sizes == [126, 63, 61, 30, 28, 14]
        assert cfg.flatten_size == 12544

    def test_layer_list(self):
        layers = ModelConfig().layers()
        assert layers[0] == "rescale(1/255)"
        assert layers[-1] == "dense(2, softmax)"
        assert sum(l.startswith("conv2d") for l in layers) == 3
        assert sum(l.startswith("dropout") for l in layers) == 2

    def test_eight_by_eight_rejected(self):
        with pytest.raises(ValueError, match="too small"):
            build_model(ModelConfig(input_height=8, input_width=8))

    def test_smallest_admissible(self):
        build_model(ModelConfig(input_height=22, input_width=22))
        with pytest.raises(ValueError):
            build_model(ModelConfig(input_height=21, input_width=21))

    def test_init(self):
        m = build_model(ModelConfig(), seed=3)
        for name, v in m.params.items():
            if name.endswith(".b"):
                assert np.all(v == 0)
            else:
                assert v.std() > 0
        limit = math.sqrt(6 / (27 + 144))
        assert np.abs(m.params["conv0.w"]).max() <= limit

    def test_seed_determinism(self):
        a, b, c = build_model(TINY, 1), build_model(TINY, 1), build_model(TINY, 2)
        assert all(np.array_equal(a.params[k], b.params[k]) for k in a.params)
        assert not np.array_equal(a.params["conv0.w"], c.params["conv0.w"])


class TestPrimitives:
    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=2), st.floats(-800, 800))
    def test_softmax_sums_to_one(self, z, shift):
        p = cnn.softmax(np.array([z]) + shift)
        assert p.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.all(np.isfinite(p))

    def test_softmax_extreme(self):
        p = cnn.softmax(np.array([[1000.0, -1000.0]]))
        np.testing.assert_allclose(p, [[1.0, 0.0]])

    def test_zero_weights_uniform(self):
        m = build_model(TINY)
        for k in m.params:
            m.params[k][:] = 0
        probs, _ = cnn.forward(m, images(3))
        np.testing.assert_allclose(probs, 0.5)
        loss, _ = cnn.loss_and_gradients(m, images(3), [0, 1, 1], training=False)
        assert loss == pytest.approx(math.log(2), abs=1e-9)

    def test_conv_matches_loops(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((2, 5, 6, 3))
        w = rng.standard_normal((3, 3, 3, 4))
        b = rng.standard_normal(4)
        out, _ = cnn.conv2d_forward(x, w, b)
        ref = np.zeros((2, 3, 4, 4))
        for n in range(2):
            for i in range(3):
                for j in range(4):
                    for f in range(4):
                        ref[n, i, j, f] = np.sum(x[n, i : i + 3, j : j + 3, :] * w[..., f]) + b[f]
        np.testing.assert_allclose(out, ref, atol=1e-12)

    def test_maxpool_grad_routes_to_first_max(self):
        x = np.array([[1.0, 3.0], [3.0, 0.0]]).reshape(1, 2, 2, 1)
        out, idx = cnn.maxpool_forward(x)
        assert out.item() == 3.0
        dx = cnn.maxpool_backward(np.ones((1, 1, 1, 1)), idx, x.shape)
        np.testing.assert_array_equal(dx.reshape(2, 2), [[0, 1], [0, 0]])

    def test_maxpool_grad_sum(self):
        x = np.random.default_rng(1).standard_normal((2, 7, 5, 3))
        out, idx = cnn.maxpool_forward(x)
        assert out.shape == (2, 3, 2, 3)
        g = np.random.default_rng(2).standard_normal(out.shape)
        dx = cnn.maxpool_backward(g, idx, x.shape)
        assert dx.sum() == pytest.approx(g.sum())
        assert np.all(dx[:, 6, :, :] == 0) and np.all(dx[:, :, 4, :] == 0)

    def test_dropout_mean(self):
        mask = cnn.dropout_mask((200, 1000), 0.25, np.random.default_rng(0))
        assert abs(mask.mean() - 1.0) < 0.02
        assert set(np.unique(mask)) == {0.0, 1 / 0.75}


class TestGradients:
    def test_finite_differences(self):
        m = build_model(TINY, seed=4)
        x = images(4, seed=1)
        res = finite_difference_check(m, x, [0, 1, 1, 0], seed=9)
        assert res["checked"] + res["on_kink"] == m.n_params()
        assert res["kink_violations"] == 0
        assert res["max_rel_error"] <= 1e-4

    def test_dropout_off_at_inference(self):
        m = build_model(TINY, seed=4)
        x = images(2)
        a, _ = cnn.forward(m, x, training=False, seed=1)
        b, _ = cnn.forward(m, x, training=False, seed=2)
        np.testing.assert_array_equal(a, b)

    def test_nan_loss_raises(self):
        m = build_model(TINY)
        m.params["dense2.b"][0] = np.nan
        with pytest.raises(FloatingPointError):
            cnn.loss_and_gradients(m, images(2), [0, 1])


class TestTraining:
    def test_epochs_zero_rejected(self):
        with pytest.raises(ValueError):
            TrainConfig(epochs=0)

    def test_bad_batch_shape(self):
        with pytest.raises(ValueError):
            cnn.forward(build_model(TINY), np.zeros((1, 8, 8, 3)))

    def test_deterministic(self):
        x, y = images(12, seed=3), np.array([0, 1] * 6)
        cfg = TrainConfig(epochs=2, batch_size=4, seed=5)
        a, ra = cnn.train(build_model(TINY, 1), x, y, cfg, x, y)
        b, rb = cnn.train(build_model(TINY, 1), x, y, cfg, x, y)
        assert ra.epoch_loss == rb.epoch_loss
        assert all(a.params[k].tobytes() == b.params[k].tobytes() for k in a.params)

    def test_loss_decreases(self):
        x = images(16, seed=2)
        y = np.array([0, 1] * 8)
        x[y == 1, :, :, 0] = 255.0
        _, report = cnn.train(build_model(TINY, 0), x, y, TrainConfig(epochs=30, batch_size=8, learning_rate=1e-2))
        assert report.epoch_loss[-1] < report.epoch_loss[0]
        assert report.train_accuracy == 1.0

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_diverged_report(self):
        m = build_model(TINY)
        m.params["dense2.w"][:] = np.inf
        _, report = cnn.train(m, images(4), [0, 1, 0, 1], TrainConfig(epochs=3, batch_size=2))
        assert report.diverged and report.epoch_loss == []


def test_weights_roundtrip(tmp_path):
    m = build_model(TINY, seed=8)
    cnn.save_model(tmp_path / "w.bin", m)
    raw = (tmp_path / "w.bin").read_bytes()
    assert raw[:4] == b"CNNW"
    back = cnn.load_model(tmp_path / "w.bin")
    assert back.config == m.config and back.seed == 8
    assert all(back.params[k].tobytes() == m.params[k].tobytes() for k in m.params)
    x = images(2)
    np.testing.assert_array_equal(cnn.predict(back, x), cnn.predict(m, x))
