"""densehawk: a dense neural-network classifier toolkit whose
hyperparameters are tuned by Harris Hawks Optimization.

The pieces compose left to right: feature datasets (synthesized or loaded
from the shared binary/CSV formats) are split and optionally normalized;
a from-scratch dense network trains on them; the HHO engine searches the
width/learning-rate/dropout/batch space against a validation fitness; and
the metric suite scores any model with confusion matrices, per-class
precision/recall/F1, Cohen's kappa, and one-vs-rest ROC/AUC.
"""

from . import cli, dataset, hho, hpo, metrics, nn
from .dataset import (
    ClassLabel,
    DatasetSplit,
    FeatureDataset,
    FeatureRecord,
    FormatError,
    Scaler,
    load_dataset,
    normalize_features,
    save_dataset,
    split,
    synthesize_blobs,
)
from .hho import ConvergenceTrace, Hawk, HHOParams, SearchSpace, benchmark_objective, optimize
from .hpo import (
    FitnessConfig,
    HyperParams,
    HyperSpace,
    TrialResult,
    baseline_hyperparams,
    decode,
    default_hyperspace,
    encode,
    final_train,
    fitness,
    optimize_hyperparameters,
)
from .metrics import (
    AucScore,
    ClassificationReport,
    ConfusionMatrix,
    EvaluationReport,
    RocCurve,
    accuracy,
    auc,
    cohen_kappa,
    confusion_matrix,
    full_report,
    precision_recall_f1,
    roc_curve_ovr,
)
from .nn import (
    AdamState,
    BatchNormState,
    DenseLayerParams,
    NetworkConfig,
    TrainedModel,
    TrainingDivergedError,
    TrainingSchedule,
    adam_step,
    backward,
    cross_entropy_loss,
    forward,
    init_network,
    load_checkpoint,
    predict,
    reduce_lr_on_plateau,
    save_checkpoint,
    train,
)

__version__ = "0.1.0"
