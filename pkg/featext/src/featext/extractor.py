"""Pretrained-backbone feature extraction over class-per-directory images.

Images are resized to the backbone's 224 x 224 input, normalized with the
ImageNet channel statistics, and pushed through a DenseNet201 feature
stack; global average pooling yields one 1920-wide vector per image per
freezing strategy, and the per-strategy vectors are concatenated in
strategy order (optionally followed by a seeded Gaussian random projection
to a fixed width).

Freezing strategies control which backbone layers may move when a
fine-tuning pass is requested (``fine_tune_epochs > 0``): ``total_freeze``
holds everything, ``half_freeze`` holds the first half of the
parameterized layers in forward order, ``last_block_freeze`` holds all but
the final dense block and the classifier-side norm layer. With zero
fine-tune epochs extraction is pure and all strategies produce identical
vectors from the same weights.

Backbone weights come from torchvision's ImageNet checkpoint
(``weights="pretrained"``), a local state-dict path, or a seeded random
initialization (``weights="random"``) for offline pipeline testing.
"""

from __future__ import annotations

import copy
import csv
import os
from dataclasses import dataclass, field

import numpy as np
import torch
from PIL import Image
from torch import nn as tnn
from torchvision.models import densenet201

from .formats import write_feature_file

TARGET_SIZE = (224, 224)
POOLED_WIDTH = 1920
IMAGENET_MEAN = np.array([0.485, 0.456, 0.406], dtype=np.float32)
IMAGENET_STD = np.array([0.229, 0.224, 0.225], dtype=np.float32)

STRATEGIES = ("total_freeze", "half_freeze", "last_block_freeze")
STRATEGY_ALIASES = {
    "total": "total_freeze",
    "half": "half_freeze",
    "last": "last_block_freeze",
}
IMAGE_EXTENSIONS = {".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff", ".gif", ".webp"}


def canonical_strategy(name: str) -> str:
    resolved = STRATEGY_ALIASES.get(name, name)
    if resolved not in STRATEGIES:
        raise ValueError(f"unknown freezing strategy {name!r}; choose from {STRATEGIES}")
    return resolved


@dataclass
class ExtractionConfig:
    image_root: str
    output_path: str
    strategies: list[str] = field(default_factory=lambda: list(STRATEGIES))
    seed: int = 0
    weights: str = "pretrained"
    fine_tune_epochs: int = 0
    projection_width: int | None = None
    batch_size: int = 8
    fine_tune_lr: float = 1e-4

    def __post_init__(self) -> None:
        self.strategies = [canonical_strategy(s) for s in self.strategies]
        if not self.strategies:
            raise ValueError("at least one freezing strategy is required")
        if self.fine_tune_epochs < 0:
            raise ValueError("fine_tune_epochs must be >= 0")
        if self.projection_width is not None and self.projection_width < 1:
            raise ValueError("projection_width must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


@dataclass
class ExtractionResult:
    output_path: str
    manifest_path: str
    n_records: int
    n_skipped: int
    dim: int
    class_names: list[str]


def load_backbone(weights: str, seed: int) -> tnn.Module:
    """DenseNet201 feature stack. ``weights`` is "pretrained", "random",
    or a path to a torch state dict."""
    if weights == "pretrained":
        from torchvision.models import DenseNet201_Weights

        model = densenet201(weights=DenseNet201_Weights.IMAGENET1K_V1)
    elif weights == "random":
        torch.manual_seed(seed)
        model = densenet201(weights=None)
    else:
        model = densenet201(weights=None)
        state = torch.load(weights, map_location="cpu", weights_only=True)
        model.load_state_dict(state)
    model.eval()
    return model


def parameterized_layers(model: tnn.Module) -> list[tnn.Module]:
    """Leaf modules with their own parameters, in forward order."""
    return [
        m
        for m in model.modules()
        if any(True for _ in m.parameters(recurse=False))
    ]


def apply_freezing(model: tnn.Module, strategy: str) -> list[tnn.Module]:
    """Freeze per the strategy; returns the modules left trainable."""
    strategy = canonical_strategy(strategy)
    for p in model.parameters():
        p.requires_grad_(False)
    trainable: list[tnn.Module] = []
    if strategy == "total_freeze":
        return trainable
    if strategy == "half_freeze":
        layers = parameterized_layers(model.features)
        keep_frozen = -(-len(layers) // 2)  # ceil(L/2)
        trainable = layers[keep_frozen:]
    else:  # last_block_freeze: final dense block + classifier-side norm
        trainable = parameterized_layers(model.features.denseblock4)
        trainable += parameterized_layers(model.features.norm5)
    for m in trainable:
        for p in m.parameters(recurse=False):
            p.requires_grad_(True)
    return trainable


def _set_finetune_mode(model: tnn.Module, trainable: list[tnn.Module]) -> None:
    # frozen batch-norm layers keep their running statistics fixed
    model.train()
    trainable_set = set(map(id, trainable))
    for m in model.modules():
        if isinstance(m, tnn.modules.batchnorm._BatchNorm) and id(m) not in trainable_set:
            m.eval()


def load_image(path: str) -> np.ndarray:
    """RGB image resized to 224 x 224, ImageNet-normalized, CHW float32."""
    with Image.open(path) as img:
        rgb = img.convert("RGB").resize(TARGET_SIZE, Image.BILINEAR)
    arr = np.asarray(rgb, dtype=np.float32) / 255.0
    arr = (arr - IMAGENET_MEAN) / IMAGENET_STD
    return arr.transpose(2, 0, 1)


def discover_images(image_root: str) -> tuple[list[str], list[tuple[str, int]]]:
    """Class names from subdirectory names (sorted), image paths sorted
    within each class."""
    classes = sorted(
        d for d in os.listdir(image_root) if os.path.isdir(os.path.join(image_root, d))
    )
    if not classes:
        raise ValueError(f"no class subdirectories under {image_root}")
    entries: list[tuple[str, int]] = []
    for label, name in enumerate(classes):
        class_dir = os.path.join(image_root, name)
        for filename in sorted(os.listdir(class_dir)):
            if os.path.splitext(filename)[1].lower() in IMAGE_EXTENSIONS:
                entries.append((os.path.join(class_dir, filename), label))
    if not entries:
        raise ValueError(f"no images found under {image_root}")
    return classes, entries


def pooled_features(model: tnn.Module, batch: torch.Tensor) -> torch.Tensor:
    fmap = model.features(batch)
    out = torch.nn.functional.relu(fmap)
    out = torch.nn.functional.adaptive_avg_pool2d(out, (1, 1))
    return torch.flatten(out, 1)


def _fine_tune(
    model: tnn.Module,
    strategy: str,
    images: torch.Tensor,
    labels: torch.Tensor,
    n_classes: int,
    config: ExtractionConfig,
) -> tnn.Module:
    """Train a temporary linear head on the pooled features for the
    requested epochs, updating only the strategy's unfrozen layers; the
    head is discarded afterwards."""
    model = copy.deepcopy(model)
    trainable = apply_freezing(model, strategy)
    torch.manual_seed(config.seed)
    head = tnn.Linear(POOLED_WIDTH, n_classes)
    params = [p for p in model.parameters() if p.requires_grad] + list(head.parameters())
    optimizer = torch.optim.Adam(params, lr=config.fine_tune_lr)
    loss_fn = tnn.CrossEntropyLoss()
    generator = torch.Generator().manual_seed(config.seed)
    n = images.shape[0]
    for _ in range(config.fine_tune_epochs):
        order = torch.randperm(n, generator=generator)
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            _set_finetune_mode(model, trainable)
            head.train()
            optimizer.zero_grad()
            logits = head(pooled_features(model, images[idx]))
            loss = loss_fn(logits, labels[idx])
            loss.backward()
            optimizer.step()
    model.eval()
    return model


def extract(config: ExtractionConfig) -> ExtractionResult:
    """Run the full extraction pass and write the feature file + manifest.

    Unreadable images are skipped with a warning and recorded in the
    manifest with record index -1; zero usable images is fatal.
    """
    class_names, entries = discover_images(config.image_root)
    loaded: list[tuple[str, int, np.ndarray]] = []
    skipped: list[str] = []
    for path, label in entries:
        try:
            loaded.append((path, label, load_image(path)))
        except Exception as err:  # noqa: BLE001 - any decode failure skips the file
            print(f"warning: skipping unreadable image {path}: {err}")
            skipped.append(path)
    if not loaded:
        raise RuntimeError(f"no usable images under {config.image_root}")

    images = torch.from_numpy(np.stack([arr for _, _, arr in loaded]))
    labels = torch.tensor([label for _, label, _ in loaded], dtype=torch.long)
    base = load_backbone(config.weights, config.seed)

    blocks: list[np.ndarray] = []
    for strategy in config.strategies:
        if config.fine_tune_epochs > 0:
            model = _fine_tune(base, strategy, images, labels, len(class_names), config)
        else:
            model = base
        with torch.no_grad():
            parts = [
                pooled_features(model, images[start : start + config.batch_size])
                for start in range(0, images.shape[0], config.batch_size)
            ]
        blocks.append(torch.cat(parts).numpy())
    features = np.concatenate(blocks, axis=1)

    if config.projection_width is not None:
        rng = np.random.default_rng(config.seed)
        projection = rng.standard_normal((features.shape[1], config.projection_width))
        features = features @ (projection / np.sqrt(config.projection_width))

    write_feature_file(config.output_path, features, labels.numpy(), class_names)
    manifest_path = config.output_path + ".manifest.csv"
    with open(manifest_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["record", "path", "label", "status"])
        for record, (path, label, _) in enumerate(loaded):
            writer.writerow([record, path, label, "ok"])
        for path in skipped:
            writer.writerow([-1, path, "", "skipped"])
    return ExtractionResult(
        output_path=config.output_path,
        manifest_path=manifest_path,
        n_records=len(loaded),
        n_skipped=len(skipped),
        dim=int(features.shape[1]),
        class_names=class_names,
    )
