import numpy as np
import pytest

from densehawk import dataset, nn


def tiny_config(**overrides):
    defaults = dict(
        input_dim=6,
        hidden_widths=(5, 4),
        output_classes=3,
        input_dropout_rate=0.0,
        weight_init_seed=0,
    )
    defaults.update(overrides)
    return nn.NetworkConfig(**defaults)


def loss_at(model, x, y, frozen=True):
    probs, _ = nn.forward(model, x, mode="train", dropout_seed=0, frozen_stats=frozen)
    return nn.cross_entropy_loss(probs, y)


def numerical_grads(model, x, y, h=1e-4, frozen=True):
    grads = []
    for p in nn.trainable_parameters(model):
        g = np.zeros_like(p)
        it = np.nditer(p, flags=["multi_index"])
        while not it.finished:
            idx = it.multi_index
            orig = p[idx]
            p[idx] = orig + h
            lp = loss_at(model, x, y, frozen)
            p[idx] = orig - h
            lm = loss_at(model, x, y, frozen)
            p[idx] = orig
            g[idx] = (lp - lm) / (2 * h)
            it.iternext()
        grads.append(g)
    return grads


def max_rel_err(analytic, numeric):
    worst = 0.0
    for a, g in zip(analytic, numeric):
        denom = np.maximum(np.maximum(np.abs(a), np.abs(g)), 1e-6)
        worst = max(worst, float(np.max(np.abs(a - g) / denom)))
    return worst


class TestInit:
    def test_parameter_counts_table_shape(self):
        # shape arithmetic: sum of (out*in + out) over the dense stack,
        # plus gamma+beta per hidden width
        config = nn.NetworkConfig(512, (256, 128, 64), 3, weight_init_seed=1)
        model = nn.init_network(config)
        dims = [512, 256, 128, 64, 3]
        expected_dense = sum(o * i + o for i, o in zip(dims[:-1], dims[1:]))
        expected_bn = sum(2 * w for w in (256, 128, 64))
        assert expected_dense == 172675 and expected_bn == 896
        assert nn.parameter_counts(model) == (expected_dense, expected_bn)

    def test_batchnorm_initial_state(self):
        model = nn.init_network(tiny_config())
        for _, bn in model.hidden:
            assert np.all(bn.gamma == 1.0) and np.all(bn.beta == 0.0)
            assert np.all(bn.running_mean == 0.0) and np.all(bn.running_var == 1.0)

    def test_seed_determinism(self):
        a = nn.init_network(tiny_config(weight_init_seed=5))
        b = nn.init_network(tiny_config(weight_init_seed=5))
        c = nn.init_network(tiny_config(weight_init_seed=6))
        for (da, _), (db, _) in zip(a.hidden, b.hidden):
            np.testing.assert_array_equal(da.weights, db.weights)
        assert not np.array_equal(a.hidden[0][0].weights, c.hidden[0][0].weights)

    def test_single_neuron_network(self):
        model = nn.init_network(tiny_config(hidden_widths=(1,)))
        probs = nn.forward(model, np.zeros((2, 6)), mode="infer")
        assert probs.shape == (2, 3)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            nn.NetworkConfig(4, (0,), 3)
        with pytest.raises(ValueError):
            nn.NetworkConfig(4, (3,), 1)
        with pytest.raises(ValueError):
            nn.NetworkConfig(4, (3,), 3, input_dropout_rate=1.0)


class TestForward:
    def test_equal_logits_give_uniform_probs(self):
        model = nn.init_network(tiny_config())
        model.output.weights[...] = 0.0
        model.output.biases[...] = 0.0
        probs = nn.forward(model, np.random.default_rng(0).standard_normal((4, 6)), "infer")
        np.testing.assert_allclose(probs, 1.0 / 3.0, atol=1e-15)

    def test_rows_are_simplex_points(self):
        rng = np.random.default_rng(2)
        model = nn.init_network(tiny_config())
        probs = nn.forward(model, rng.standard_normal((17, 6)), "infer")
        assert np.all(probs >= 0.0) and np.all(probs <= 1.0)
        assert np.max(np.abs(probs.sum(axis=1) - 1.0)) < 1e-9

    def test_infer_is_deterministic(self):
        model = nn.init_network(tiny_config(input_dropout_rate=0.5))
        x = np.random.default_rng(1).standard_normal((5, 6))
        np.testing.assert_array_equal(nn.forward(model, x, "infer"), nn.forward(model, x, "infer"))

    def test_dropout_mask_reproducible_and_calibrated(self):
        model = nn.init_network(tiny_config(input_dim=512, input_dropout_rate=0.5))
        x = np.ones((4, 512))
        _, cache_a = nn.forward(model, x, "train", dropout_seed=77)
        _, cache_b = nn.forward(model, x, "train", dropout_seed=77)
        np.testing.assert_array_equal(cache_a.dropout_mask, cache_b.dropout_mask)
        zero_fraction = float(np.mean(cache_a.dropout_mask == 0.0))
        assert abs(zero_fraction - 0.5) < 0.05

    def test_train_batch_of_one_rejected(self):
        model = nn.init_network(tiny_config())
        with pytest.raises(ValueError, match="size >= 2"):
            nn.forward(model, np.zeros((1, 6)), "train", dropout_seed=0)

    def test_dimension_mismatch(self):
        model = nn.init_network(tiny_config())
        with pytest.raises(ValueError, match="batch must be"):
            nn.forward(model, np.zeros((3, 7)), "infer")

    def test_train_mode_does_not_mutate_running_stats(self):
        model = nn.init_network(tiny_config())
        before = model.hidden[0][1].running_mean.copy()
        nn.forward(model, np.random.default_rng(0).standard_normal((8, 6)), "train", dropout_seed=1)
        np.testing.assert_array_equal(model.hidden[0][1].running_mean, before)


class TestBatchNorm:
    def test_train_output_moments_match_gamma_beta(self):
        rng = np.random.default_rng(4)
        model = nn.init_network(tiny_config(hidden_widths=(8,)))
        _, bn = model.hidden[0]
        bn.gamma = 0.5 + rng.random(8)
        bn.beta = rng.standard_normal(8)
        x = rng.standard_normal((64, 6)) * 2.0 + 1.0
        _, cache = nn.forward(model, x, "train", dropout_seed=0)
        out = cache.layers[0].bn_output
        np.testing.assert_allclose(out.mean(axis=0), bn.beta, atol=1e-6)
        np.testing.assert_allclose(out.var(axis=0), bn.gamma**2, atol=1e-6)

    def test_running_stats_update_rule(self):
        model = nn.init_network(tiny_config(hidden_widths=(4,), batchnorm_momentum=0.75))
        x = np.random.default_rng(5).standard_normal((16, 6))
        _, cache = nn.forward(model, x, "train", dropout_seed=0)
        layer = cache.layers[0]
        expected_mean = 0.75 * 0.0 + 0.25 * layer.bn_mean
        expected_var = 0.75 * 1.0 + 0.25 * layer.bn_var
        nn.apply_batchnorm_updates(model, cache)
        np.testing.assert_allclose(model.hidden[0][1].running_mean, expected_mean, atol=1e-15)
        np.testing.assert_allclose(model.hidden[0][1].running_var, expected_var, atol=1e-15)


class TestDropout:
    def test_inverted_dropout_preserves_expectation(self):
        rng = np.random.default_rng(8)
        x = rng.random(200) + 0.5
        total = np.zeros_like(x)
        n_masks = 10000
        for _ in range(n_masks):
            dropped, _ = nn.inverted_dropout(x, 0.5, rng)
            total += dropped
        ratio = total.mean() / (n_masks * x.mean())
        assert abs(ratio - 1.0) < 0.02

    def test_rate_zero_identity(self):
        x = np.arange(12.0).reshape(3, 4)
        dropped, mask = nn.inverted_dropout(x, 0.0, np.random.default_rng(0))
        np.testing.assert_array_equal(dropped, x)
        np.testing.assert_array_equal(mask, np.ones_like(x))


class TestLossAndBackward:
    def test_uniform_probs_loss(self):
        probs = np.full((5, 3), 1.0 / 3.0)
        assert nn.cross_entropy_loss(probs, np.zeros(5, dtype=int)) == pytest.approx(
            np.log(3.0), abs=1e-12
        )

    def test_certain_prediction_zero_loss(self):
        probs = np.array([[0.0, 1.0, 0.0]])
        assert nn.cross_entropy_loss(probs, np.array([1])) == 0.0

    def test_hand_computed_mean(self):
        probs = np.array([[0.5, 0.5], [0.25, 0.75]])
        expected = (np.log(2.0) + np.log(4.0)) / 2.0
        assert nn.cross_entropy_loss(probs, np.array([0, 0])) == pytest.approx(expected, abs=1e-12)

    def test_logit_gradient_and_zero_weight_bias(self):
        # with a zeroed output layer the bias IS the logit, so the bias
        # gradient equals mean(probs - onehot); craft logits for
        # probs (0.2, 0.5, 0.3)
        model = nn.init_network(tiny_config())
        model.output.weights[...] = 0.0
        model.output.biases[...] = np.log([0.2, 0.5, 0.3])
        x = np.random.default_rng(0).standard_normal((2, 6))
        probs, cache = nn.forward(model, x, "train", dropout_seed=0)
        np.testing.assert_allclose(probs, [[0.2, 0.5, 0.3]] * 2, atol=1e-12)
        grads = nn.backward(model, cache, np.array([1, 1]))
        np.testing.assert_allclose(grads[-1], [0.2, -0.5, 0.3], atol=1e-12)

    def test_gradients_match_finite_differences_frozen(self):
        worst = 0.0
        for seed in range(5):
            rng = np.random.default_rng(seed)
            config = tiny_config(weight_init_seed=seed, batchnorm_after_activation=seed % 2 == 0)
            model = nn.init_network(config)
            for _, bn in model.hidden:
                bn.running_mean = 0.3 * rng.standard_normal(bn.running_mean.size)
                bn.running_var = 0.5 + rng.random(bn.running_var.size)
            x = rng.standard_normal((3, 6))
            y = rng.integers(0, 3, size=3)
            probs, cache = nn.forward(model, x, "train", dropout_seed=0, frozen_stats=True)
            analytic = nn.backward(model, cache, y)
            worst = max(worst, max_rel_err(analytic, numerical_grads(model, x, y)))
        assert worst < 1e-4

    def test_gradients_match_finite_differences_batch_stats(self):
        # batch-statistics path; h=1e-5 keeps finite-difference truncation
        # below the check threshold
        worst = 0.0
        for seed in range(5):
            rng = np.random.default_rng(seed + 50)
            model = nn.init_network(tiny_config(weight_init_seed=seed))
            x = rng.standard_normal((4, 6))
            y = rng.integers(0, 3, size=4)
            probs, cache = nn.forward(model, x, "train", dropout_seed=0)
            analytic = nn.backward(model, cache, y)
            numeric = numerical_grads(model, x, y, h=1e-5, frozen=False)
            worst = max(worst, max_rel_err(analytic, numeric))
        assert worst < 1e-3

    def test_backward_requires_train_cache(self):
        model = nn.init_network(tiny_config())
        with pytest.raises(ValueError, match="train-mode"):
            nn.backward(model, None, np.array([0]))


class TestAdam:
    def test_first_step_closed_form(self):
        param = np.array([1.0])
        grad = np.array([0.5])
        state = nn.init_adam([param])
        nn.adam_step(state, [param], [grad], lr=0.01)
        expected = 1.0 - 0.01 * 0.5 / (0.5 + 1e-8)
        assert param[0] == pytest.approx(expected, abs=1e-15)
        assert state.t == 1

    def test_zero_gradient_is_noop(self):
        param = np.array([3.0, -2.0])
        state = nn.init_adam([param])
        nn.adam_step(state, [param], [np.zeros(2)], lr=0.1)
        np.testing.assert_array_equal(param, [3.0, -2.0])

    def test_descends_quadratic(self):
        x = np.array([1.0])
        state = nn.init_adam([x])
        losses = [x[0] ** 2]
        for _ in range(2):
            nn.adam_step(state, [x], [2.0 * x], lr=0.1)
            losses.append(x[0] ** 2)
        assert losses[1] < losses[0] and losses[2] < losses[1]

    def test_moment_invariants(self):
        param = np.array([0.0])
        state = nn.init_adam([param])
        assert state.t == 0 and np.all(state.m[0] == 0.0) and np.all(state.v[0] == 0.0)
        nn.adam_step(state, [param], [np.array([-2.0])], lr=0.01)
        assert np.all(state.v[0] >= 0.0)


class TestPlateau:
    def schedule(self, **kw):
        defaults = dict(initial_lr=1e-3, plateau_factor=0.5, plateau_patience=5, min_lr=1e-6)
        defaults.update(kw)
        return nn.TrainingSchedule(**defaults)

    def test_five_flat_epochs_halve_lr(self):
        history = [0.8] + [0.8] * 5
        assert nn.reduce_lr_on_plateau(history, self.schedule()) == pytest.approx(5e-4)

    def test_monotone_improvement_keeps_lr(self):
        history = [0.1 * i for i in range(1, 20)]
        assert nn.reduce_lr_on_plateau(history, self.schedule()) == 1e-3

    def test_min_lr_floor(self):
        sched = self.schedule(min_lr=4e-4)
        history = [0.5] + [0.5] * 25
        assert nn.reduce_lr_on_plateau(history, sched) == 4e-4

    def test_counter_resets_after_reduction(self):
        sched = self.schedule(plateau_patience=2)
        s = nn.PlateauScheduler(sched)
        s.step(0.9)
        assert s.step(0.9) == 1e-3
        assert s.step(0.9) == 5e-4  # patience hit
        assert s.step(0.9) == 5e-4  # counter restarted
        assert s.step(0.9) == 2.5e-4

    def test_never_raises_lr(self):
        rng = np.random.default_rng(12)
        s = nn.PlateauScheduler(self.schedule(plateau_patience=2))
        last = s.lr
        for _ in range(200):
            lr = s.step(float(rng.random()))
            assert lr <= last + 1e-18 and lr >= s.schedule.min_lr
            last = lr

    def test_tiny_improvement_counts_as_plateau(self):
        s = nn.PlateauScheduler(self.schedule(plateau_patience=3, plateau_min_delta=1e-2))
        s.step(0.5)
        for _ in range(2):
            s.step(0.505)  # below min_delta
        assert s.step(0.509) == 5e-4

    def test_empty_history_rejected(self):
        with pytest.raises(ValueError, match="non-empty"):
            nn.reduce_lr_on_plateau([], self.schedule())


def separable_split(n_per_class=100, dim=16, seed=7):
    ds = dataset.synthesize_blobs(n_per_class, dim, 3, separation=9.0, noise_sigma=1.0, seed=seed)
    return dataset.split(ds, (0.8, 0.1, 0.1), seed=seed)


class TestTrain:
    def test_separable_blobs_reach_95(self):
        split = separable_split()
        config = nn.NetworkConfig(16, (32, 16, 8), 3, input_dropout_rate=0.2, weight_init_seed=7)
        schedule = nn.TrainingSchedule(max_epochs=30, batch_size=32)
        model = nn.train(config, schedule, split, seed=7)
        assert nn.best_epoch(model).val_acc >= 0.95

    def test_zero_epochs_returns_initialized_model(self):
        split = separable_split(20)
        config = nn.NetworkConfig(16, (4,), 3, weight_init_seed=3)
        model = nn.train(config, nn.TrainingSchedule(max_epochs=0), split, seed=3)
        assert model.history == []
        fresh = nn.init_network(config)
        np.testing.assert_array_equal(model.hidden[0][0].weights, fresh.hidden[0][0].weights)

    def test_bit_reproducible(self):
        split = separable_split(40)
        config = nn.NetworkConfig(16, (8, 4), 3, input_dropout_rate=0.3, weight_init_seed=11)
        schedule = nn.TrainingSchedule(max_epochs=8, batch_size=16)
        a = nn.train(config, schedule, split, seed=11)
        b = nn.train(config, schedule, split, seed=11)
        assert [(s.train_loss, s.val_acc, s.lr) for s in a.history] == [
            (s.train_loss, s.val_acc, s.lr) for s in b.history
        ]
        np.testing.assert_array_equal(a.output.weights, b.output.weights)

    def test_divergence_reported_with_location(self):
        split = separable_split(30)
        config = nn.NetworkConfig(16, (8,), 3, weight_init_seed=0)
        schedule = nn.TrainingSchedule(initial_lr=1e307, max_epochs=4, batch_size=16)
        with np.errstate(all="ignore"):
            with pytest.raises(nn.TrainingDivergedError, match="epoch"):
                nn.train(config, schedule, split, seed=0)

    def test_best_epoch_snapshot_restored(self):
        # prefix determinism: a run stopped right after the best epoch must
        # hold identical parameters to the long run's returned snapshot
        split = separable_split(60)
        config = nn.NetworkConfig(16, (16, 8), 3, input_dropout_rate=0.2, weight_init_seed=5)
        long = nn.train(config, nn.TrainingSchedule(max_epochs=12, batch_size=32), split, seed=5)
        best = nn.best_epoch(long)
        short = nn.train(
            config, nn.TrainingSchedule(max_epochs=best.epoch + 1, batch_size=32), split, seed=5
        )
        np.testing.assert_array_equal(long.output.weights, short.output.weights)
        np.testing.assert_array_equal(
            long.hidden[0][1].running_mean, short.hidden[0][1].running_mean
        )

    def test_empty_parts_rejected(self):
        split = separable_split(30)
        empty = split.train.subset(np.zeros(0, dtype=int))
        bad = dataset.DatasetSplit(split.train, empty, split.test, split.ratios, split.seed)
        config = nn.NetworkConfig(16, (4,), 3)
        with pytest.raises(ValueError, match="non-empty"):
            nn.train(config, nn.TrainingSchedule(max_epochs=1), bad, seed=0)


class TestPredict:
    def test_argmax_and_tie_rule(self):
        model = nn.init_network(tiny_config())
        model.output.weights[...] = 0.0
        model.output.biases[...] = np.log([0.5, 0.5, 1e-9])  # tie between 0 and 1
        ds = dataset.FeatureDataset(
            np.zeros((3, 6)),
            np.zeros(3, dtype=int),
            [dataset.ClassLabel(i, n) for i, n in enumerate("abc")],
        )
        probs, labels = nn.predict(model, ds)
        assert list(labels) == [0, 0, 0]

    def test_one_hot_like_row(self):
        probs = np.array([[0.01, 0.98, 0.01]])
        assert int(np.argmax(probs, axis=1)[0]) == 1

    def test_dim_mismatch(self):
        model = nn.init_network(tiny_config())
        ds = dataset.FeatureDataset(
            np.zeros((2, 4)), np.zeros(2, dtype=int), [dataset.ClassLabel(0, "a")]
        )
        with pytest.raises(ValueError, match="dim"):
            nn.predict(model, ds)

    def test_predict_deterministic(self):
        split = separable_split(30)
        config = nn.NetworkConfig(16, (8,), 3, weight_init_seed=2)
        model = nn.train(config, nn.TrainingSchedule(max_epochs=3, batch_size=16), split, seed=2)
        a = nn.predict(model, split.test)
        b = nn.predict(model, split.test)
        np.testing.assert_array_equal(a[0], b[0])
        np.testing.assert_array_equal(a[1], b[1])


class TestCheckpoint:
    def test_round_trip(self, tmp_path):
        split = separable_split(40)
        config = nn.NetworkConfig(16, (8, 4), 3, input_dropout_rate=0.25, weight_init_seed=9)
        schedule = nn.TrainingSchedule(max_epochs=5, batch_size=16)
        model = nn.train(config, schedule, split, seed=9)
        scaler = dataset.Scaler("zscore", np.arange(16.0), np.ones(16))
        path = tmp_path / "model.lymm"
        nn.save_checkpoint(model, path, ["CLL", "FL", "MCL"], scaler)
        ckpt = nn.load_checkpoint(path)
        assert ckpt.class_names == ["CLL", "FL", "MCL"]
        assert ckpt.model.config == config
        assert ckpt.training_accuracy == pytest.approx(nn.best_epoch(model).train_acc)
        np.testing.assert_array_equal(ckpt.scaler.mean, scaler.mean)
        for (da, ba), (db, bb) in zip(model.hidden, ckpt.model.hidden):
            np.testing.assert_array_equal(da.weights, db.weights)
            np.testing.assert_array_equal(ba.running_var, bb.running_var)
        probs_a, _ = nn.predict(model, split.test)
        probs_b, _ = nn.predict(ckpt.model, split.test)
        np.testing.assert_array_equal(probs_a, probs_b)

    def test_magic_check(self, tmp_path):
        path = tmp_path / "junk.lymm"
        path.write_bytes(b"JUNKJUNKJUNK")
        with pytest.raises(ValueError, match="checkpoint"):
            nn.load_checkpoint(path)

    def test_history_csv(self, tmp_path):
        history = [nn.EpochStats(0, 1.5, 0.3, 1.2, 0.4, 1e-3)]
        path = tmp_path / "history.csv"
        nn.write_history_csv(history, path)
        assert path.read_text() == "epoch,train_loss,train_acc,val_loss,val_acc,lr\n0,1.5,0.3,1.2,0.4,0.001\n"
