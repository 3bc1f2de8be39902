"""Labeled feature-vector datasets: load, save, synthesize, split, normalize.

A dataset is a dense (n, D) block of finite real feature values plus one
integer class label per record. Two on-disk formats are supported:

* **binary** (canonical, extension ``.lymf``): little-endian throughout ::

      magic           4 bytes  b"LYMF"
      version         u16      currently 1
      n_records       u64
      dim             u32
      n_classes       u32
      class names     n_classes x (u16 length + UTF-8 bytes)
      records         n_records x (label u16 + dim x f32)

* **csv**: header row ``label,f0,f1,...,f{D-1}``, one record per row,
  labels as integers. CSV carries no class names; defaults apply.

All stochastic operations take an explicit seed and use numpy's PCG64
generator, so results are reproducible across runs and platforms.
Features are held in memory as float64; values that came from a binary
file (or from :func:`synthesize_blobs`, which rounds through float32)
are exactly representable in f32 and survive a save/load round trip
bit-identically.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass, field

import numpy as np

MAGIC = b"LYMF"
FORMAT_VERSION = 1
DEFAULT_RATIOS = (0.8, 0.1, 0.1)

# Default 3-class taxonomy, alphabetical: chronic lymphocytic leukemia,
# follicular lymphoma, mantle cell lymphoma. Files carry their own names,
# so this is only used when synthesizing or reading name-less CSV data.
LYMPHOMA_CLASS_NAMES = ("CLL", "FL", "MCL")


class FormatError(ValueError):
    """A file violates the feature-file format or its value constraints."""


def default_class_names(n_classes: int) -> list[str]:
    if n_classes == 3:
        return list(LYMPHOMA_CLASS_NAMES)
    return [f"class_{i}" for i in range(n_classes)]


@dataclass(frozen=True)
class ClassLabel:
    index: int
    name: str


@dataclass(frozen=True)
class FeatureRecord:
    features: np.ndarray
    label: int


@dataclass
class FeatureDataset:
    """Immutable-by-convention container of labeled feature vectors.

    ``features`` is (n, D) float64, ``labels`` is (n,) int64. Instances are
    validated on construction; share freely across threads, never mutate.
    """

    features: np.ndarray
    labels: np.ndarray
    classes: list[ClassLabel]
    provenance: str = ""

    def __post_init__(self) -> None:
        self.features = np.ascontiguousarray(self.features, dtype=np.float64)
        self.labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2:
            raise ValueError(f"features must be 2-D, got shape {self.features.shape}")
        if self.labels.shape != (self.features.shape[0],):
            raise ValueError("labels length must match record count")
        indices = [c.index for c in self.classes]
        if sorted(indices) != list(range(len(self.classes))):
            raise ValueError("class indices must be exactly 0..K-1")
        names = [c.name for c in self.classes]
        if len(set(names)) != len(names):
            raise ValueError("class names must be unique")
        bad = np.flatnonzero(~np.isfinite(self.features).all(axis=1))
        if bad.size:
            raise ValueError(f"non-finite feature value in record {int(bad[0])}")
        if self.labels.size:
            lo, hi = int(self.labels.min()), int(self.labels.max())
            if lo < 0 or hi >= len(self.classes):
                bad_idx = int(
                    np.flatnonzero((self.labels < 0) | (self.labels >= len(self.classes)))[0]
                )
                raise ValueError(
                    f"label {int(self.labels[bad_idx])} out of range [0, {len(self.classes)}) "
                    f"in record {bad_idx}"
                )

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    @property
    def class_names(self) -> list[str]:
        return [c.name for c in self.classes]

    def record(self, i: int) -> FeatureRecord:
        return FeatureRecord(self.features[i].copy(), int(self.labels[i]))

    def __iter__(self):
        for i in range(len(self)):
            yield self.record(i)

    def subset(self, indices: np.ndarray, provenance: str | None = None) -> "FeatureDataset":
        return FeatureDataset(
            self.features[indices].copy(),
            self.labels[indices].copy(),
            list(self.classes),
            self.provenance if provenance is None else provenance,
        )


@dataclass
class DatasetSplit:
    """Train/validation/test partition of one parent dataset."""

    train: FeatureDataset
    validation: FeatureDataset
    test: FeatureDataset
    ratios: tuple[float, float, float]
    seed: int

    @property
    def parts(self) -> tuple[FeatureDataset, FeatureDataset, FeatureDataset]:
        return (self.train, self.validation, self.test)


@dataclass
class Scaler:
    """Per-dimension affine transform fitted on training data only.

    Dimensions with zero training variance are mapped to 0 in every part.
    """

    mode: str = "none"
    mean: np.ndarray = field(default_factory=lambda: np.zeros(0))
    std: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def apply(self, features: np.ndarray) -> np.ndarray:
        if self.mode == "none":
            return np.asarray(features, dtype=np.float64).copy()
        x = np.asarray(features, dtype=np.float64)
        safe = np.where(self.std > 0.0, self.std, 1.0)
        out = (x - self.mean) / safe
        out[:, self.std == 0.0] = 0.0
        return out


def _make_classes(names: list[str]) -> list[ClassLabel]:
    return [ClassLabel(i, n) for i, n in enumerate(names)]


# ---------------------------------------------------------------------------
# binary format


def _read_exact(fh: io.BufferedReader, n: int, what: str) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise FormatError(f"truncated file while reading {what}")
    return data


def _load_binary(path: str) -> FeatureDataset:
    with open(path, "rb") as fh:
        magic = _read_exact(fh, 4, "magic")
        if magic != MAGIC:
            raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
        (version,) = struct.unpack("<H", _read_exact(fh, 2, "version"))
        if version != FORMAT_VERSION:
            raise FormatError(f"unsupported format version {version}")
        n_records, dim, n_classes = struct.unpack(
            "<QII", _read_exact(fh, 16, "record/dim/class counts")
        )
        if n_records == 0:
            raise FormatError("file contains no records")
        if dim == 0 or n_classes == 0:
            raise FormatError("dim and n_classes must be positive")
        names = []
        for i in range(n_classes):
            (length,) = struct.unpack("<H", _read_exact(fh, 2, f"class name {i} length"))
            names.append(_read_exact(fh, length, f"class name {i}").decode("utf-8"))
        record_dtype = np.dtype([("label", "<u2"), ("features", "<f4", (dim,))])
        payload = _read_exact(fh, record_dtype.itemsize * n_records, "record payload")
        if fh.read(1):
            raise FormatError("trailing bytes after last record")
    raw = np.frombuffer(payload, dtype=record_dtype)
    labels = raw["label"].astype(np.int64)
    features = raw["features"].astype(np.float64)
    bad = np.flatnonzero(labels >= n_classes)
    if bad.size:
        raise FormatError(
            f"label {int(labels[bad[0]])} >= n_classes {n_classes} in record {int(bad[0])}"
        )
    bad = np.flatnonzero(~np.isfinite(features).all(axis=1))
    if bad.size:
        raise FormatError(f"non-finite feature value in record {int(bad[0])}")
    return FeatureDataset(features, labels, _make_classes(names), provenance=str(path))


def _save_binary(dataset: FeatureDataset, path: str) -> None:
    if dataset.n_classes > 0xFFFF:
        raise ValueError("binary format stores labels as u16; too many classes")
    header = bytearray()
    header += MAGIC
    header += struct.pack("<H", FORMAT_VERSION)
    header += struct.pack("<QII", len(dataset), dataset.dim, dataset.n_classes)
    for c in dataset.classes:
        encoded = c.name.encode("utf-8")
        if len(encoded) > 0xFFFF:
            raise ValueError(f"class name too long: {c.name!r}")
        header += struct.pack("<H", len(encoded)) + encoded
    record_dtype = np.dtype([("label", "<u2"), ("features", "<f4", (dataset.dim,))])
    raw = np.empty(len(dataset), dtype=record_dtype)
    raw["label"] = dataset.labels.astype(np.uint16)
    raw["features"] = dataset.features.astype(np.float32)
    with open(path, "wb") as fh:
        fh.write(bytes(header))
        fh.write(raw.tobytes())


# ---------------------------------------------------------------------------
# csv format


def _load_csv(path: str) -> FeatureDataset:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        cols = header.split(",")
        if len(cols) < 2 or cols[0] != "label" or cols[1:] != [f"f{i}" for i in range(len(cols) - 1)]:
            raise FormatError(f"bad csv header: {header!r}")
        dim = len(cols) - 1
        labels: list[int] = []
        rows: list[list[float]] = []
        for i, line in enumerate(fh):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split(",")
            if len(fields) != dim + 1:
                raise FormatError(f"record {i}: expected {dim + 1} columns, got {len(fields)}")
            try:
                label = int(fields[0])
            except ValueError:
                raise FormatError(f"record {i}: non-integer label {fields[0]!r}") from None
            if label < 0:
                raise FormatError(f"record {i}: negative label {label}")
            try:
                values = [float(v) for v in fields[1:]]
            except ValueError:
                raise FormatError(f"record {i}: unparseable feature value") from None
            if not all(np.isfinite(values)):
                raise FormatError(f"record {i}: non-finite feature value")
            labels.append(label)
            rows.append(values)
    if not rows:
        raise FormatError("file contains no records")
    n_classes = max(labels) + 1
    return FeatureDataset(
        np.asarray(rows, dtype=np.float64),
        np.asarray(labels, dtype=np.int64),
        _make_classes(default_class_names(n_classes)),
        provenance=str(path),
    )


def _save_csv(dataset: FeatureDataset, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("label," + ",".join(f"f{i}" for i in range(dataset.dim)) + "\n")
        for i in range(len(dataset)):
            values = ",".join(repr(float(v)) for v in dataset.features[i])
            fh.write(f"{int(dataset.labels[i])},{values}\n")


def load_dataset(path: str, format: str = "binary") -> FeatureDataset:
    """Read and validate a feature file; D and K come from the file itself."""
    if format == "binary":
        return _load_binary(path)
    if format == "csv":
        return _load_csv(path)
    raise ValueError(f"unknown format {format!r}")


def save_dataset(dataset: FeatureDataset, path: str, format: str = "binary") -> None:
    """Write a dataset; binary round-trips exactly, csv to within 1e-6 per value."""
    if format == "binary":
        _save_binary(dataset, path)
    elif format == "csv":
        _save_csv(dataset, path)
    else:
        raise ValueError(f"unknown format {format!r}")


# ---------------------------------------------------------------------------
# synthesis


def _spread_centroids(rng: np.random.Generator, k: int, dim: int, separation: float) -> np.ndarray:
    """Draw k centroids whose pairwise distances are all >= separation.

    The sampling scale keeps typical pairwise distances near the floor, so
    `separation` genuinely controls class overlap instead of only bounding
    it from below.
    """
    # Margin absorbs the later float32 rounding of record values.
    target = separation * (1.0 + 1e-6)
    scale = 1.2 * separation / np.sqrt(2.0 * dim)
    centroids: list[np.ndarray] = []
    rejects = 0
    while len(centroids) < k:
        cand = rng.normal(0.0, scale, dim)
        if all(float(np.linalg.norm(cand - c)) >= target for c in centroids):
            centroids.append(cand)
            rejects = 0
        else:
            rejects += 1
            if rejects >= 100:
                # too crowded at this scale; spread out and retry
                scale *= 1.5
                rejects = 0
    return np.asarray(centroids)


def synthesize_blobs(
    n_per_class: int,
    dim: int,
    n_classes: int,
    separation: float = 6.0,
    noise_sigma: float = 1.0,
    seed: int = 0,
    class_names: list[str] | None = None,
) -> FeatureDataset:
    """Gaussian clusters with centroids at least ``separation`` apart.

    Deterministic for a fixed seed. Values are rounded through float32 so
    the result survives a binary save/load round trip bit-identically.
    """
    if n_per_class < 1 or dim < 1 or n_classes < 1:
        raise ValueError("n_per_class, dim and n_classes must all be >= 1")
    if separation <= 0.0:
        raise ValueError("separation must be > 0")
    if noise_sigma < 0.0:
        raise ValueError("noise_sigma must be >= 0")
    rng = np.random.default_rng(seed)
    centroids = _spread_centroids(rng, n_classes, dim, separation)
    blocks = []
    for c in range(n_classes):
        blocks.append(centroids[c] + noise_sigma * rng.standard_normal((n_per_class, dim)))
    features = np.concatenate(blocks).astype(np.float32).astype(np.float64)
    labels = np.repeat(np.arange(n_classes, dtype=np.int64), n_per_class)
    names = list(class_names) if class_names is not None else default_class_names(n_classes)
    if len(names) != n_classes:
        raise ValueError("class_names length must equal n_classes")
    return FeatureDataset(features, labels, _make_classes(names), provenance="synthetic")


# ---------------------------------------------------------------------------
# splitting


def _apportion(n: int, ratios: tuple[float, float, float]) -> list[int]:
    """Largest-remainder allocation of n items over the ratio vector."""
    exact = [n * r for r in ratios]
    counts = [int(np.floor(e)) for e in exact]
    remainder = n - sum(counts)
    fracs = [e - c for e, c in zip(exact, counts)]
    order = sorted(range(len(ratios)), key=lambda i: (-fracs[i], i))
    for i in order[:remainder]:
        counts[i] += 1
    return counts


def split(
    dataset: FeatureDataset,
    ratios: tuple[float, float, float] = DEFAULT_RATIOS,
    seed: int = 0,
    stratified: bool = True,
) -> DatasetSplit:
    """Partition into train/validation/test parts, deterministically.

    Stratified mode keeps each class's share in every part within one
    record of the parent proportion; it raises if some class is too small
    to populate every part whose ratio is positive.
    """
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or any(r < 0 for r in ratios):
        raise ValueError("ratios must be three non-negative numbers")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must sum to 1, got {sum(ratios)}")
    rng = np.random.default_rng(seed)
    part_indices: list[list[np.ndarray]] = [[], [], []]
    if stratified:
        for c in range(dataset.n_classes):
            members = np.flatnonzero(dataset.labels == c)
            if members.size == 0:
                continue
            members = rng.permutation(members)
            counts = _apportion(members.size, ratios)
            for p, count in enumerate(counts):
                if count == 0 and ratios[p] > 0:
                    raise ValueError(
                        f"class {dataset.classes[c].name!r} has too few members "
                        f"({members.size}) to stratify at ratios {ratios}"
                    )
            offsets = np.cumsum([0] + counts)
            for p in range(3):
                part_indices[p].append(members[offsets[p] : offsets[p + 1]])
    else:
        order = rng.permutation(len(dataset))
        counts = _apportion(len(dataset), ratios)
        offsets = np.cumsum([0] + counts)
        for p in range(3):
            part_indices[p].append(order[offsets[p] : offsets[p + 1]])
    parts = []
    part_names = ("train", "validation", "test")
    for p in range(3):
        idx = (
            np.concatenate(part_indices[p])
            if part_indices[p]
            else np.zeros(0, dtype=np.int64)
        )
        if idx.size == 0 and ratios[p] > 0:
            raise ValueError(f"{part_names[p]} part would be empty at ratio {ratios[p]}")
        parts.append(dataset.subset(idx, provenance=f"{dataset.provenance}[{part_names[p]}]"))
    return DatasetSplit(parts[0], parts[1], parts[2], ratios, seed)


def normalize_features(split_: DatasetSplit, mode: str = "zscore") -> tuple[DatasetSplit, Scaler]:
    """Fit a per-dimension scaler on the train part and apply it everywhere."""
    if mode == "none":
        return split_, Scaler(mode="none")
    if mode != "zscore":
        raise ValueError(f"unknown normalization mode {mode!r}")
    if len(split_.train) == 0:
        raise ValueError("zscore normalization requires a non-empty train part")
    mean = split_.train.features.mean(axis=0)
    std = split_.train.features.std(axis=0)
    scaler = Scaler(mode="zscore", mean=mean, std=std)
    parts = []
    for part in split_.parts:
        transformed = (
            scaler.apply(part.features)
            if len(part)
            else part.features.copy()
        )
        parts.append(
            FeatureDataset(transformed, part.labels.copy(), list(part.classes), part.provenance)
        )
    return DatasetSplit(parts[0], parts[1], parts[2], split_.ratios, split_.seed), scaler
