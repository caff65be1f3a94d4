import numpy as np
import pytest

from tempoproj.autoencoder import (
    CnnGruConfig,
    DenseDaeConfig,
    build_cnn_gru,
    build_dense_dae,
    encode,
    load_model,
    reconstruct,
    save_model,
    train,
    write_loss_history,
)
from tempoproj.errors import ConfigError, DivergenceError, ShapeError


class TestBuildCnnGru:
    def test_projection_input_gives_latent_10(self):
        model = build_cnn_gru((16, 1, 1))
        z = encode(model, np.random.default_rng(0).normal(size=(4, 16, 1)))
        assert z.shape == (4, 10)

    @pytest.mark.parametrize("shape", [(16, 1, 1), (12, 3, 1), (7, 2, 1), (30, 4, 1)])
    def test_decoder_restores_input_shape(self, shape):
        model = build_cnn_gru(shape, CnnGruConfig(seed=1, epochs=1))
        rng = np.random.default_rng(1)
        x = rng.normal(size=(3,) + shape)
        out = reconstruct(model, x)
        assert out.shape == x.shape

    def test_kernels_and_pools_clamped(self):
        model = build_cnn_gru((16, 1, 1))
        plan = model.meta["plan"]
        assert plan[0]["kernel"] == (4, 1)
        assert plan[0]["pool"] == (5, 1)
        assert [lv["prepool"] for lv in plan] == [(16, 1), (4, 1), (1, 1)]

    def test_same_seed_same_init(self):
        a = build_cnn_gru((16, 1, 1), CnnGruConfig(seed=9))
        b = build_cnn_gru((16, 1, 1), CnnGruConfig(seed=9))
        for name in a.params:
            assert np.array_equal(a.params[name].data, b.params[name].data)

    def test_different_seed_differs(self):
        a = build_cnn_gru((16, 1, 1), CnnGruConfig(seed=1))
        b = build_cnn_gru((16, 1, 1), CnnGruConfig(seed=2))
        assert any(
            not np.array_equal(a.params[n].data, b.params[n].data) for n in a.params
        )

    def test_default_hyperparameters(self):
        cfg = CnnGruConfig()
        assert cfg.filters == (16, 32, 64)
        assert cfg.kernel == (4, 4)
        assert cfg.pool == (5, 5)
        assert cfg.latent_dim == 10
        assert cfg.lrelu_alpha == 0.1
        assert cfg.lr == 0.001
        assert cfg.batch_size == 256
        assert cfg.epochs == 200

    def test_bad_input_shape(self):
        with pytest.raises(ConfigError):
            build_cnn_gru((0, 1, 1))

    def test_bad_config(self):
        with pytest.raises(ConfigError):
            CnnGruConfig(latent_dim=0)


class TestBuildDenseDae:
    def test_latent_is_5(self):
        model = build_dense_dae(140)
        z = encode(model, np.zeros((3, 140)))
        assert z.shape == (3, 5)

    def test_defaults(self):
        cfg = DenseDaeConfig()
        assert cfg.hidden_dims == (500, 500, 2000)
        assert cfg.latent_dim == 5

    def test_encode_deterministic(self):
        model = build_dense_dae(20, DenseDaeConfig(seed=3, hidden_dims=(16, 16, 32)))
        x = np.random.default_rng(2).normal(size=(5, 20))
        assert np.array_equal(encode(model, x), encode(model, x))

    def test_input_dim_validation(self):
        with pytest.raises(ConfigError):
            build_dense_dae(0)


class TestTrain:
    def test_cnn_constant_dataset_converges(self):
        # a flat constant is exactly representable (zero kernels, bias carries it)
        const = np.full((300, 12, 1), 0.15)
        cfg = CnnGruConfig(seed=1, epochs=200)
        model = build_cnn_gru((12, 1, 1), cfg)
        model, history = train(model, const, cfg)
        assert len(history) == 200
        assert min(history) < 1e-6

    def test_dense_constant_dataset_converges(self):
        rng = np.random.default_rng(3)
        const = np.tile(0.2 * rng.normal(size=12), (300, 1))
        cfg = DenseDaeConfig(seed=1, epochs=200, noise_std=0.0,
                             hidden_dims=(32, 32, 64))
        model = build_dense_dae(12, cfg)
        model, history = train(model, const, cfg)
        assert min(history) < 1e-6

    def test_loss_improves_on_structured_data(self, small_dataset):
        # the model must be expressive enough to learn the projected samples:
        # the reconstruction loss has to sink well below its starting value
        from tempoproj.metrics import SBD
        from tempoproj.projection import gen_proj_space, select_pivots

        pm = gen_proj_space(small_dataset, select_pivots(small_dataset, 8, seed=7), SBD)
        cfg = CnnGruConfig(seed=7, epochs=40)
        model = build_cnn_gru((8, 1, 1), cfg)
        model, history = train(model, pm.values, cfg)
        assert history[-1] < history[0]
        assert history[-1] < 0.5 * history[0]

    def test_batch_larger_than_n_still_trains(self):
        rng = np.random.default_rng(4)
        data = rng.normal(size=(10, 8, 1)) * 0.1
        cfg = CnnGruConfig(seed=0, epochs=3, batch_size=256)
        model = build_cnn_gru((8, 1, 1), cfg)
        model, history = train(model, data, cfg)
        assert len(history) == 3

    def test_seeded_trajectory_bit_identical(self):
        rng = np.random.default_rng(5)
        data = rng.normal(size=(20, 8, 1)) * 0.3

        def run():
            cfg = CnnGruConfig(seed=5, epochs=5, filters=(4, 6, 8), latent_dim=4)
            model = build_cnn_gru((8, 1, 1), cfg)
            _, history = train(model, data, cfg)
            return history

        assert run() == run()

    def test_dense_noise_corrupts_training_only(self):
        rng = np.random.default_rng(6)
        data = rng.normal(size=(30, 10))
        cfg = DenseDaeConfig(seed=2, epochs=2, hidden_dims=(8, 8, 16), noise_std=0.5)
        model = build_dense_dae(10, cfg)
        model, _ = train(model, data, cfg)
        assert np.array_equal(encode(model, data), encode(model, data))

    def test_divergence_raises_with_epoch(self):
        rng = np.random.default_rng(7)
        data = rng.normal(size=(16, 8, 1))
        cfg = CnnGruConfig(seed=0, epochs=5, lr=1e154)  # guaranteed overflow
        model = build_cnn_gru((8, 1, 1), cfg)
        with pytest.raises(DivergenceError) as err:
            train(model, data, cfg)
        assert err.value.epoch is not None

    def test_shape_mismatch_rejected(self):
        model = build_cnn_gru((8, 1, 1))
        with pytest.raises(ShapeError):
            train(model, np.zeros((4, 9, 1)))


class TestCheckpoint:
    def test_round_trip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(8)
        data = rng.normal(size=(12, 8, 1)) * 0.2
        cfg = CnnGruConfig(seed=3, epochs=4, filters=(4, 6, 8), latent_dim=4)
        model = build_cnn_gru((8, 1, 1), cfg)
        model, _ = train(model, data, cfg)
        before = encode(model, data)
        path = tmp_path / "model.tpae"
        save_model(model, path)
        back = load_model(path)
        after = encode(back, data)
        assert np.array_equal(before, after)
        assert back.config == model.config
        assert back.architecture == model.architecture

    def test_dense_round_trip(self, tmp_path):
        cfg = DenseDaeConfig(seed=4, hidden_dims=(6, 6, 8), latent_dim=3)
        model = build_dense_dae(9, cfg)
        x = np.random.default_rng(9).normal(size=(5, 9))
        save_model(model, tmp_path / "d.tpae")
        back = load_model(tmp_path / "d.tpae")
        assert np.array_equal(encode(model, x), encode(back, x))

    def test_loss_history_csv(self, tmp_path):
        path = tmp_path / "loss.csv"
        write_loss_history([0.5, 0.25], path)
        assert path.read_text() == "epoch,mean_loss\n0,0.5\n1,0.25\n"
