"""Bridge between the HHO engine and the network trainer.

Four tunables are searched: the three hidden-layer widths, the learning
rate, the input dropout rate, and the batch size. HHO works on a plain
bounded continuous vector, so each tunable declares how its coordinate is
decoded: ``linear`` (identity), ``log10`` (10^x), ``integer`` (round half
to even, clamp), or ``pow2`` (2^round(x)).

A candidate's fitness is (1 - val_accuracy) + lambda_loss * val_loss after
a short budgeted training run, minimized: accuracy dominates, loss breaks
ties smoothly. Every fitness evaluation trains with the same data order
and weight init (fixed seed policy) so that fitness differences reflect
the hyperparameters, not sampling noise; set ``average_seeds > 1`` to
average over derived seeds instead.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace

import numpy as np

from . import hho, nn
from .dataset import DatasetSplit

DIMENSION_KINDS = ("linear", "log10", "integer", "pow2")


@dataclass(frozen=True)
class HyperDimension:
    name: str
    kind: str
    low: float
    high: float

    def __post_init__(self) -> None:
        if self.kind not in DIMENSION_KINDS:
            raise ValueError(f"unknown dimension kind {self.kind!r}")
        if not self.low < self.high:
            raise ValueError(f"{self.name}: low must be < high")


@dataclass
class HyperSpace:
    dims: list[HyperDimension]

    def search_space(self) -> hho.SearchSpace:
        return hho.SearchSpace(
            np.array([d.low for d in self.dims]),
            np.array([d.high for d in self.dims]),
        )

    @property
    def names(self) -> list[str]:
        return [d.name for d in self.dims]


def default_hyperspace(
    width_bounds: tuple[int, int] = (32, 512),
    log_lr_bounds: tuple[float, float] = (-5.0, -1.0),
    dropout_bounds: tuple[float, float] = (0.1, 0.7),
    batch_exponent_bounds: tuple[int, int] = (4, 8),
) -> HyperSpace:
    """Six dimensions: h1/h2/h3 widths, log10 learning rate, dropout rate,
    log2 batch size. Default bounds bracket the 256/128/64 + 0.5-dropout
    baseline configuration."""
    lo, hi = width_bounds
    return HyperSpace(
        [
            HyperDimension("h1", "integer", lo, hi),
            HyperDimension("h2", "integer", lo, hi),
            HyperDimension("h3", "integer", lo, hi),
            HyperDimension("learning_rate", "log10", *log_lr_bounds),
            HyperDimension("dropout", "linear", *dropout_bounds),
            HyperDimension("batch", "pow2", *batch_exponent_bounds),
        ]
    )


@dataclass(frozen=True)
class HyperParams:
    hidden_widths: tuple[int, int, int]
    learning_rate: float
    dropout_rate: float
    batch_size: int


def baseline_hyperparams() -> HyperParams:
    """The non-optimized reference configuration (256/128/64 widths, 50%
    dropout, Adam at 1e-3, batch 64)."""
    return HyperParams((256, 128, 64), 1e-3, 0.5, 64)


def _decode_component(dim: HyperDimension, x: float) -> float | int:
    if dim.kind == "linear":
        value = min(max(x, dim.low), dim.high)
        return float(value)
    if dim.kind == "log10":
        value = min(max(x, dim.low), dim.high)
        return float(10.0**value)
    if dim.kind == "integer":
        value = int(np.round(x))  # round half to even
        return int(min(max(value, int(math.ceil(dim.low))), int(math.floor(dim.high))))
    # pow2: x is the exponent
    value = int(np.round(x))
    value = min(max(value, int(math.ceil(dim.low))), int(math.floor(dim.high)))
    return int(2**value)


def _encode_component(dim: HyperDimension, value) -> float:
    if dim.kind == "linear":
        encoded = float(value)
    elif dim.kind == "log10":
        if value <= 0:
            raise ValueError(f"{dim.name}: log10 dimension requires a positive value")
        encoded = float(np.log10(value))
    elif dim.kind == "integer":
        encoded = float(int(value))
    else:
        exponent = math.log2(value)
        if exponent != int(exponent):
            raise ValueError(f"{dim.name}: {value} is not a power of two")
        encoded = float(exponent)
    if not dim.low - 1e-9 <= encoded <= dim.high + 1e-9:
        raise ValueError(
            f"{dim.name}: encoded value {encoded} outside bounds [{dim.low}, {dim.high}]"
        )
    return min(max(encoded, dim.low), dim.high)


def decode(position: np.ndarray, space: HyperSpace) -> HyperParams:
    """Map a continuous position to concrete hyperparameters (clamping into
    bounds, so any in-box or boundary position decodes to valid values)."""
    position = np.asarray(position, dtype=np.float64)
    if position.shape != (len(space.dims),):
        raise ValueError(f"position must have {len(space.dims)} components")
    values = {d.name: _decode_component(d, x) for d, x in zip(space.dims, position)}
    return HyperParams(
        hidden_widths=(values["h1"], values["h2"], values["h3"]),
        learning_rate=values["learning_rate"],
        dropout_rate=values["dropout"],
        batch_size=values["batch"],
    )


def encode(params: HyperParams, space: HyperSpace) -> np.ndarray:
    """Inverse of :func:`decode` up to rounding: decode(encode(p)) == p for
    every representable parameter set. Raises on out-of-bounds values."""
    by_name = {
        "h1": params.hidden_widths[0],
        "h2": params.hidden_widths[1],
        "h3": params.hidden_widths[2],
        "learning_rate": params.learning_rate,
        "dropout": params.dropout_rate,
        "batch": params.batch_size,
    }
    return np.array([_encode_component(d, by_name[d.name]) for d in space.dims])


@dataclass
class FitnessConfig:
    lambda_loss: float = 0.1
    epoch_budget: int = 15
    train_seed: int = 0
    average_seeds: int = 1

    def __post_init__(self) -> None:
        if self.lambda_loss < 0:
            raise ValueError("lambda_loss must be >= 0")
        if self.epoch_budget < 1:
            raise ValueError("epoch_budget must be >= 1")
        if self.average_seeds < 1:
            raise ValueError("average_seeds must be >= 1")


@dataclass
class TrialResult:
    params: HyperParams
    fitness: float
    val_accuracy: float
    val_loss: float
    epochs: int
    seconds: float
    trial: int = -1
    iteration: int = -1
    hawk: int = -1


def fitness_score(val_accuracy: float, val_loss: float, lambda_loss: float) -> float:
    """(1 - val_accuracy) + lambda_loss * val_loss, minimized."""
    return (1.0 - val_accuracy) + lambda_loss * val_loss


def _budget_schedule(params: HyperParams, config: FitnessConfig) -> nn.TrainingSchedule:
    return nn.TrainingSchedule(
        initial_lr=params.learning_rate,
        batch_size=params.batch_size,
        max_epochs=config.epoch_budget,
    )


def _train_once(
    params: HyperParams, split: DatasetSplit, schedule: nn.TrainingSchedule, seed: int
) -> nn.TrainedModel:
    config = nn.NetworkConfig(
        input_dim=split.train.dim,
        hidden_widths=params.hidden_widths,
        output_classes=split.train.n_classes,
        input_dropout_rate=params.dropout_rate,
        weight_init_seed=seed,
    )
    return nn.train(config, schedule, split, seed=seed)


def fitness(
    position: np.ndarray,
    space: HyperSpace,
    split: DatasetSplit,
    config: FitnessConfig,
) -> TrialResult:
    """Decode, train under the epoch budget, and score the configuration.

    The score uses the best validation epoch: fitness =
    (1 - val_acc) + lambda_loss * val_loss. A diverged training run yields
    +inf fitness so the optimizer simply avoids that region.
    """
    params = decode(position, space)
    schedule = _budget_schedule(params, config)
    start = time.perf_counter()
    accs, losses, epochs = [], [], 0
    diverged = False
    for k in range(config.average_seeds):
        try:
            model = _train_once(params, split, schedule, config.train_seed + k)
        except nn.TrainingDivergedError as err:
            diverged = True
            epochs += err.epoch
            break
        best = nn.best_epoch(model)
        accs.append(best.val_acc)
        losses.append(best.val_loss)
        epochs += len(model.history)
    seconds = time.perf_counter() - start
    if diverged or not accs:
        return TrialResult(params, math.inf, math.nan, math.nan, epochs, seconds)
    val_acc = float(np.mean(accs))
    val_loss = float(np.mean(losses))
    score = fitness_score(val_acc, val_loss, config.lambda_loss)
    return TrialResult(params, score, val_acc, val_loss, epochs, seconds)


def optimize_hyperparameters(
    split: DatasetSplit,
    space: HyperSpace,
    hho_params: hho.HHOParams,
    fitness_config: FitnessConfig,
    jobs: int = 1,
) -> tuple[HyperParams, list[TrialResult], hho.ConvergenceTrace]:
    """Drive :func:`densehawk.hho.optimize` with the training fitness.

    Returns the decoded best configuration, the complete trial log (one
    entry per actual fitness evaluation, tagged with iteration and hawk),
    and the convergence trace.
    """
    search_space = space.search_space()
    trials: list[TrialResult] = []
    pending: dict[bytes, TrialResult] = {}

    def objective(x: np.ndarray) -> float:
        result = fitness(x, space, split, fitness_config)
        pending[x.tobytes()] = result
        return result.fitness

    def observer(t: int, i: int, x: np.ndarray, value: float) -> None:
        result = pending.pop(x.tobytes())
        result.trial = len(trials)
        result.iteration = t
        result.hawk = i
        trials.append(result)

    best_x, _, trace = hho.optimize(
        objective, search_space, hho_params, eval_observer=observer, jobs=jobs
    )
    return decode(best_x, space), trials, trace


def final_train(
    best: HyperParams,
    split: DatasetSplit,
    schedule: nn.TrainingSchedule,
    seed: int = 0,
) -> nn.TrainedModel:
    """Full-schedule training of the selected configuration; the schedule's
    learning rate and batch size are replaced by the decoded values."""
    full = replace(schedule, initial_lr=best.learning_rate, batch_size=best.batch_size)
    return _train_once(best, split, full, seed)


# ---------------------------------------------------------------------------
# artifact files


def write_trials_csv(trials: list[TrialResult], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("trial,iter,hawk,h1,h2,h3,lr,dropout,batch,val_acc,val_loss,fitness,epochs,seconds\n")
        for r in trials:
            p = r.params
            fh.write(
                f"{r.trial},{r.iteration},{r.hawk},"
                f"{p.hidden_widths[0]},{p.hidden_widths[1]},{p.hidden_widths[2]},"
                f"{repr(p.learning_rate)},{repr(p.dropout_rate)},{p.batch_size},"
                f"{repr(r.val_accuracy)},{repr(r.val_loss)},{repr(r.fitness)},"
                f"{r.epochs},{r.seconds:.3f}\n"
            )


def write_best_config(
    best: HyperParams, path: str, extras: dict[str, float] | None = None
) -> None:
    """Key = value summary of the winning configuration, readable by
    :func:`read_best_config` (and by the train command)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"h1 = {best.hidden_widths[0]}\n")
        fh.write(f"h2 = {best.hidden_widths[1]}\n")
        fh.write(f"h3 = {best.hidden_widths[2]}\n")
        fh.write(f"learning_rate = {repr(best.learning_rate)}\n")
        fh.write(f"dropout = {repr(best.dropout_rate)}\n")
        fh.write(f"batch = {best.batch_size}\n")
        for key, value in (extras or {}).items():
            fh.write(f"{key} = {repr(float(value))}\n")


def read_best_config(path: str) -> HyperParams:
    values: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#") or "=" not in line:
                continue
            key, _, raw = line.partition("=")
            values[key.strip()] = raw.strip()
    try:
        return HyperParams(
            hidden_widths=(int(values["h1"]), int(values["h2"]), int(values["h3"])),
            learning_rate=float(values["learning_rate"]),
            dropout_rate=float(values["dropout"]),
            batch_size=int(values["batch"]),
        )
    except KeyError as missing:
        raise ValueError(f"best-config file {path} is missing key {missing}") from None
