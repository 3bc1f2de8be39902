"""Hyperparameter search: the optimized network versus the fixed baseline.

HHO searches six dimensions (three hidden widths, log10 learning rate,
dropout rate, log2 batch size). Each candidate is scored by a short
budgeted training run: fitness = (1 - val_accuracy) + 0.1 * val_loss,
minimized. The winner then gets a full-schedule training run and is
compared with the fixed 256/128/64 baseline on the held-out test part.

Desk-scale settings keep this demo to roughly a minute.
"""

import numpy as np

from densehawk import dataset, hho, hpo, nn

blobs = dataset.synthesize_blobs(150, 32, 3, separation=6.0, noise_sigma=1.6, seed=12)
parts = dataset.split(blobs, (0.70, 0.15, 0.15), seed=12)


def test_accuracy(model):
    _, predicted = nn.predict(model, parts.test)
    return float(np.mean(predicted == parts.test.labels))


# Baseline: fixed architecture, default optimizer settings.
baseline_params = hpo.baseline_hyperparams()
baseline = hpo.final_train(baseline_params, parts, nn.TrainingSchedule(max_epochs=60), seed=12)
print(f"baseline {baseline_params.hidden_widths}: test accuracy {test_accuracy(baseline):.4f}")

# Search. Every fitness evaluation is logged as one trial.
space = hpo.default_hyperspace()
best, trials, trace = hpo.optimize_hyperparameters(
    parts,
    space,
    hho.HHOParams(n_hawks=5, max_iters=6, seed=12),
    hpo.FitnessConfig(lambda_loss=0.1, epoch_budget=8, train_seed=12),
)
print(f"\nsearch: {len(trials)} trials")
print("iteration -> best fitness so far:")
for t, f in enumerate(trace.best_fitness):
    print(f"  {t}: {f:.4f}")

winner = min(trials, key=lambda t: t.fitness)
print(
    f"\nwinner: widths {best.hidden_widths}, lr {best.learning_rate:.2e}, "
    f"dropout {best.dropout_rate:.2f}, batch {best.batch_size} "
    f"(val_acc {winner.val_accuracy:.4f})"
)

optimized = hpo.final_train(best, parts, nn.TrainingSchedule(max_epochs=60), seed=12)
print(f"optimized test accuracy {test_accuracy(optimized):.4f}")
