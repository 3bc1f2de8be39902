"""The evaluation suite end to end on a trained classifier.

One call to full_report produces the confusion matrix, per-class and
macro precision/recall/F1, Cohen's kappa, one-vs-rest ROC curves with
their AUCs, and the mean cross-entropy loss.
"""

import numpy as np

from densehawk import dataset, metrics, nn

blobs = dataset.synthesize_blobs(150, 32, 3, separation=6.0, noise_sigma=2.2, seed=3)
parts = dataset.split(blobs, (0.8, 0.1, 0.1), seed=3)

config = nn.NetworkConfig(32, (64, 32, 16), 3, input_dropout_rate=0.3, weight_init_seed=3)
model = nn.train(config, nn.TrainingSchedule(max_epochs=30, batch_size=32), parts, seed=3)

probs, predicted = nn.predict(model, parts.test)
report = metrics.full_report(
    probs, predicted, parts.test.labels, parts.test.n_classes, parts.test.class_names
)

print(metrics.format_report_text(report))

# The pieces are available individually as well.
cm = report.confusion
print("row sums (support):", cm.row_sums().tolist())
print("kappa:", round(report.classification.kappa, 4))
for curve in report.roc_curves:
    name = cm.class_names[curve.class_index]
    print(f"ROC {name}: {len(curve.fpr)} points, AUC {metrics.auc(curve):.4f}")

# Identity worth knowing: accuracy equals support-weighted mean recall.
cls = report.classification
weighted_recall = float(np.sum(cls.recall * cls.support) / cls.support.sum())
assert abs(cls.accuracy - weighted_recall) < 1e-12
print("accuracy == support-weighted recall:", round(weighted_recall, 6))
