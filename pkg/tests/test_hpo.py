import math

import numpy as np
import pytest

from densehawk import dataset, hho, hpo, nn


def small_split(n_per_class=30, dim=8, seed=3):
    ds = dataset.synthesize_blobs(n_per_class, dim, 3, separation=8.0, noise_sigma=1.0, seed=seed)
    return dataset.split(ds, (0.7, 0.15, 0.15), seed=seed)


def random_valid_params(rng, space=None):
    space = space or hpo.default_hyperspace()
    widths = tuple(int(rng.integers(32, 513)) for _ in range(3))
    lr = float(10.0 ** rng.uniform(-5, -1))
    dropout = float(rng.uniform(0.1, 0.7))
    batch = int(2 ** rng.integers(4, 9))
    return hpo.HyperParams(widths, lr, dropout, batch)


class TestHyperspace:
    def test_six_dimensions(self):
        space = hpo.default_hyperspace()
        assert len(space.dims) == 6
        assert space.names == ["h1", "h2", "h3", "learning_rate", "dropout", "batch"]

    def test_learning_rate_bounds_decode(self):
        space = hpo.default_hyperspace()
        lo = hpo.decode(np.array([32, 32, 32, -5.0, 0.1, 4]), space)
        hi = hpo.decode(np.array([32, 32, 32, -1.0, 0.1, 4]), space)
        assert lo.learning_rate == pytest.approx(1e-5)
        assert hi.learning_rate == pytest.approx(1e-1)

    def test_batch_bounds_decode_to_powers_of_two(self):
        space = hpo.default_hyperspace()
        seen = set()
        for exponent in np.linspace(4.0, 8.0, 33):
            p = hpo.decode(np.array([32, 32, 32, -3.0, 0.3, exponent]), space)
            seen.add(p.batch_size)
        assert seen == {16, 32, 64, 128, 256}

    def test_search_space_bounds(self):
        sspace = hpo.default_hyperspace().search_space()
        np.testing.assert_array_equal(sspace.lower, [32, 32, 32, -5.0, 0.1, 4])
        np.testing.assert_array_equal(sspace.upper, [512, 512, 512, -1.0, 0.7, 8])

    def test_dimension_validation(self):
        with pytest.raises(ValueError):
            hpo.HyperDimension("x", "exp", 0.0, 1.0)
        with pytest.raises(ValueError):
            hpo.HyperDimension("x", "linear", 1.0, 1.0)


class TestCodec:
    def test_integer_rounding(self):
        space = hpo.default_hyperspace()
        p = hpo.decode(np.array([137.6, 32, 32, -3.0, 0.3, 5]), space)
        assert p.hidden_widths[0] == 138

    def test_round_half_to_even(self):
        space = hpo.default_hyperspace()
        assert hpo.decode(np.array([136.5, 32, 32, -3.0, 0.3, 5]), space).hidden_widths[0] == 136
        assert hpo.decode(np.array([137.5, 32, 32, -3.0, 0.3, 5]), space).hidden_widths[0] == 138

    def test_log10_decode(self):
        space = hpo.default_hyperspace()
        p = hpo.decode(np.array([64, 64, 64, -3.0, 0.5, 6]), space)
        assert p.learning_rate == pytest.approx(1e-3, abs=1e-18)

    def test_pow2_decode(self):
        space = hpo.default_hyperspace()
        p = hpo.decode(np.array([64, 64, 64, -3.0, 0.5, 5.7]), space)
        assert p.batch_size == 64

    def test_encode_baseline_round_trip(self):
        space = hpo.default_hyperspace()
        baseline = hpo.baseline_hyperparams()
        assert hpo.decode(hpo.encode(baseline, space), space) == baseline

    def test_encode_boundary_values(self):
        space = hpo.default_hyperspace()
        p = hpo.HyperParams((32, 512, 100), 1e-5, 0.1, 16)
        encoded = hpo.encode(p, space)
        assert encoded[3] == -5.0
        assert encoded[5] == 4.0

    def test_encode_rejects_out_of_bounds(self):
        space = hpo.default_hyperspace()
        with pytest.raises(ValueError, match="outside bounds"):
            hpo.encode(hpo.HyperParams((16, 64, 64), 1e-3, 0.5, 64), space)
        with pytest.raises(ValueError, match="power of two"):
            hpo.encode(hpo.HyperParams((64, 64, 64), 1e-3, 0.5, 48), space)

    def test_round_trip_property(self):
        rng = np.random.default_rng(0)
        space = hpo.default_hyperspace()
        for _ in range(1000):
            p = random_valid_params(rng)
            assert hpo.decode(hpo.encode(p, space), space) == p

    def test_random_positions_decode_within_bounds(self):
        rng = np.random.default_rng(1)
        space = hpo.default_hyperspace()
        sspace = space.search_space()
        for _ in range(1000):
            x = sspace.lower + rng.random(6) * (sspace.upper - sspace.lower)
            p = hpo.decode(x, space)
            assert all(32 <= w <= 512 for w in p.hidden_widths)
            assert 1e-5 - 1e-18 <= p.learning_rate <= 1e-1 + 1e-18
            assert 0.1 <= p.dropout_rate <= 0.7
            assert p.batch_size in {16, 32, 64, 128, 256}


class TestFitness:
    def test_score_formula(self):
        assert hpo.fitness_score(1.0, 0.0, 0.1) == 0.0
        # illustrative accuracy/loss pair: 0.0244 + 0.1 * 0.023
        assert hpo.fitness_score(0.9756, 0.023, 0.1) == pytest.approx(0.0267, abs=1e-12)

    def test_trial_respects_formula(self):
        split = small_split()
        space = hpo.default_hyperspace()
        config = hpo.FitnessConfig(lambda_loss=0.1, epoch_budget=3, train_seed=3)
        position = hpo.encode(hpo.HyperParams((32, 32, 32), 1e-3, 0.2, 16), space)
        trial = hpo.fitness(position, space, split, config)
        expected = (1.0 - trial.val_accuracy) + 0.1 * trial.val_loss
        assert trial.fitness == pytest.approx(expected, abs=1e-12)
        assert trial.epochs == 3

    def test_fitness_deterministic(self):
        split = small_split()
        space = hpo.default_hyperspace()
        config = hpo.FitnessConfig(epoch_budget=2, train_seed=5)
        position = hpo.encode(hpo.HyperParams((48, 32, 32), 3e-3, 0.3, 32), space)
        a = hpo.fitness(position, space, split, config)
        b = hpo.fitness(position, space, split, config)
        assert a.fitness == b.fitness
        assert a.val_accuracy == b.val_accuracy

    def test_divergence_maps_to_inf(self, monkeypatch):
        split = small_split()
        space = hpo.default_hyperspace()

        def explode(*args, **kwargs):
            raise nn.TrainingDivergedError("boom", epoch=1, batch=2)

        monkeypatch.setattr(hpo, "_train_once", explode)
        trial = hpo.fitness(
            hpo.encode(hpo.baseline_hyperparams(), space), space, split,
            hpo.FitnessConfig(epoch_budget=2),
        )
        assert math.isinf(trial.fitness)
        assert math.isnan(trial.val_accuracy)

    def test_seed_averaging(self):
        split = small_split()
        space = hpo.default_hyperspace()
        position = hpo.encode(hpo.HyperParams((32, 32, 32), 1e-3, 0.2, 16), space)
        single = hpo.fitness(position, space, split, hpo.FitnessConfig(epoch_budget=2, train_seed=0))
        averaged = hpo.fitness(
            position, space, split,
            hpo.FitnessConfig(epoch_budget=2, train_seed=0, average_seeds=3),
        )
        assert averaged.epochs == 3 * single.epochs
        assert averaged.fitness == pytest.approx(
            (1 - averaged.val_accuracy) + 0.1 * averaged.val_loss, abs=1e-12
        )


class TestSearch:
    def test_minimal_budget_returns_best_of_trials(self):
        split = small_split()
        space = hpo.default_hyperspace()
        best, trials, trace = hpo.optimize_hyperparameters(
            split, space, hho.HHOParams(n_hawks=2, max_iters=1, seed=1),
            hpo.FitnessConfig(epoch_budget=1, train_seed=1),
        )
        assert len(trials) >= 2
        best_trial = min(trials, key=lambda t: t.fitness)
        assert best == best_trial.params or best_trial.fitness == min(t.fitness for t in trials)
        assert len(trace) == 1

    def test_trials_are_tagged_and_logged(self):
        split = small_split()
        space = hpo.default_hyperspace()
        best, trials, trace = hpo.optimize_hyperparameters(
            split, space, hho.HHOParams(n_hawks=3, max_iters=2, seed=7),
            hpo.FitnessConfig(epoch_budget=1, train_seed=7),
        )
        assert [t.trial for t in trials] == list(range(len(trials)))
        assert all(0 <= t.iteration < 2 for t in trials)
        assert all(0 <= t.hawk < 3 for t in trials)
        assert trace.best_fitness == sorted(trace.best_fitness, reverse=True)
        assert min(t.fitness for t in trials) == trace.best_fitness[-1]

    def test_beats_baseline_under_same_budget(self):
        split = small_split(40)
        space = hpo.default_hyperspace()
        config = hpo.FitnessConfig(epoch_budget=4, train_seed=11)
        baseline_trial = hpo.fitness(hpo.encode(hpo.baseline_hyperparams(), space), space, split, config)
        best, trials, _ = hpo.optimize_hyperparameters(
            split, space, hho.HHOParams(n_hawks=5, max_iters=4, seed=11), config
        )
        assert min(t.fitness for t in trials) <= baseline_trial.fitness


class TestFinalTrain:
    def test_delegation_identity_with_baseline(self):
        split = small_split(40)
        baseline = hpo.baseline_hyperparams()
        schedule = nn.TrainingSchedule(max_epochs=4)
        via_hpo = hpo.final_train(baseline, split, schedule, seed=13)
        config = nn.NetworkConfig(
            input_dim=split.train.dim,
            hidden_widths=baseline.hidden_widths,
            output_classes=3,
            input_dropout_rate=baseline.dropout_rate,
            weight_init_seed=13,
        )
        direct = nn.train(
            config,
            nn.TrainingSchedule(initial_lr=1e-3, batch_size=64, max_epochs=4),
            split,
            seed=13,
        )
        assert [s.val_acc for s in via_hpo.history] == [s.val_acc for s in direct.history]
        np.testing.assert_array_equal(via_hpo.output.weights, direct.output.weights)

    def test_generalization_on_separable_data(self):
        split = small_split(60, dim=16, seed=21)
        space = hpo.default_hyperspace()
        config = hpo.FitnessConfig(epoch_budget=5, train_seed=21)
        position = hpo.encode(hpo.HyperParams((64, 48, 32), 3e-3, 0.2, 32), space)
        trial = hpo.fitness(position, space, split, config)
        model = hpo.final_train(trial.params, split, nn.TrainingSchedule(max_epochs=20), seed=21)
        _, predicted = nn.predict(model, split.test)
        test_acc = float(np.mean(predicted == split.test.labels))
        assert test_acc >= trial.val_accuracy - 0.05

    def test_end_to_end_reproducible(self):
        split = small_split(30)
        space = hpo.default_hyperspace()
        results = []
        for _ in range(2):
            best, trials, _ = hpo.optimize_hyperparameters(
                split, space, hho.HHOParams(n_hawks=2, max_iters=2, seed=17),
                hpo.FitnessConfig(epoch_budget=1, train_seed=17),
            )
            model = hpo.final_train(best, split, nn.TrainingSchedule(max_epochs=3), seed=17)
            results.append((best, [t.fitness for t in trials], model.output.weights.copy()))
        assert results[0][0] == results[1][0]
        assert results[0][1] == results[1][1]
        np.testing.assert_array_equal(results[0][2], results[1][2])


class TestArtifacts:
    def test_trials_csv_layout(self, tmp_path):
        trials = [
            hpo.TrialResult(
                hpo.HyperParams((64, 48, 32), 1e-3, 0.25, 32),
                0.125, 0.9, 0.25, 5, 1.5, trial=0, iteration=0, hawk=1,
            ),
            hpo.TrialResult(
                hpo.HyperParams((32, 32, 32), 1e-2, 0.5, 16),
                math.inf, math.nan, math.nan, 2, 0.4, trial=1, iteration=0, hawk=0,
            ),
        ]
        path = tmp_path / "trials.csv"
        hpo.write_trials_csv(trials, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "trial,iter,hawk,h1,h2,h3,lr,dropout,batch,val_acc,val_loss,fitness,epochs,seconds"
        assert lines[1].startswith("0,0,1,64,48,32,0.001,0.25,32,0.9,0.25,0.125,5,")
        assert ",inf," in lines[2]

    def test_best_config_round_trip(self, tmp_path):
        best = hpo.HyperParams((300, 200, 100), 2.5e-4, 0.35, 128)
        path = tmp_path / "best_config.txt"
        hpo.write_best_config(best, path, extras={"fitness": 0.01})
        assert hpo.read_best_config(path) == best
        assert "fitness = 0.01" in path.read_text()

    def test_best_config_missing_key(self, tmp_path):
        path = tmp_path / "broken.txt"
        path.write_text("h1 = 64\nh2 = 64\n")
        with pytest.raises(ValueError, match="missing key"):
            hpo.read_best_config(path)

    def test_fitness_config_validation(self):
        with pytest.raises(ValueError):
            hpo.FitnessConfig(lambda_loss=-0.1)
        with pytest.raises(ValueError):
            hpo.FitnessConfig(epoch_budget=0)
        with pytest.raises(ValueError):
            hpo.FitnessConfig(average_seeds=0)
