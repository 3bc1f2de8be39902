"""Writer and independent validator for the shared binary feature format.

Layout (little-endian): magic ``LYMF``, version u16 (=1), n_records u64,
dim u32, n_classes u32, class names as (u16 length + UTF-8 bytes) each,
then records as (label u16 + dim x f32). This module deliberately does not
import the consumer package; the validator re-reads emitted files from the
raw byte layout so the two sides of the contract stay independent.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

MAGIC = b"LYMF"
VERSION = 1


def write_feature_file(
    path: str, features: np.ndarray, labels: np.ndarray, class_names: list[str]
) -> None:
    features = np.asarray(features, dtype=np.float32)
    labels = np.asarray(labels)
    if features.ndim != 2 or features.shape[0] != labels.shape[0]:
        raise ValueError("features must be (n, dim) aligned with labels")
    if features.shape[0] == 0:
        raise ValueError("refusing to write an empty feature file")
    if not np.all(np.isfinite(features)):
        raise ValueError("features contain non-finite values")
    if labels.min() < 0 or labels.max() >= len(class_names):
        raise ValueError("labels out of range for the class list")
    n, dim = features.shape
    out = bytearray()
    out += MAGIC
    out += struct.pack("<H", VERSION)
    out += struct.pack("<QII", n, dim, len(class_names))
    for name in class_names:
        encoded = name.encode("utf-8")
        out += struct.pack("<H", len(encoded)) + encoded
    record = np.dtype([("label", "<u2"), ("features", "<f4", (dim,))])
    raw = np.empty(n, dtype=record)
    raw["label"] = labels.astype(np.uint16)
    raw["features"] = features
    with open(path, "wb") as fh:
        fh.write(bytes(out))
        fh.write(raw.tobytes())


@dataclass
class ValidationReport:
    problems: list[str] = field(default_factory=list)
    n_records: int = 0
    dim: int = 0
    class_names: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.problems


def validate_against_format(path: str) -> ValidationReport:
    """Re-parse an emitted file directly from the byte layout and check
    every field; problems are listed individually rather than raised."""
    report = ValidationReport()
    with open(path, "rb") as fh:
        data = fh.read()
    pos = 0

    def take(n: int, what: str) -> bytes | None:
        nonlocal pos
        if pos + n > len(data):
            report.problems.append(f"truncated while reading {what}")
            return None
        chunk = data[pos : pos + n]
        pos += n
        return chunk

    magic = take(4, "magic")
    if magic is None:
        return report
    if magic != MAGIC:
        report.problems.append(f"magic: expected {MAGIC!r}, found {magic!r}")
    header = take(2 + 8 + 4 + 4, "header counts")
    if header is None:
        return report
    version, n_records, dim, n_classes = struct.unpack("<HQII", header)
    if version != VERSION:
        report.problems.append(f"version: expected {VERSION}, found {version}")
    if n_records == 0:
        report.problems.append("n_records: must be positive")
    if dim == 0:
        report.problems.append("dim: must be positive")
    if n_classes == 0:
        report.problems.append("n_classes: must be positive")
    names = []
    for i in range(n_classes):
        raw_len = take(2, f"class name {i} length")
        if raw_len is None:
            return report
        (length,) = struct.unpack("<H", raw_len)
        raw_name = take(length, f"class name {i}")
        if raw_name is None:
            return report
        try:
            names.append(raw_name.decode("utf-8"))
        except UnicodeDecodeError:
            report.problems.append(f"class name {i}: invalid UTF-8")
            names.append("")
    if len(set(names)) != len(names):
        report.problems.append("class names: duplicates present")
    record_size = 2 + 4 * dim
    expected_payload = record_size * n_records
    payload = data[pos:]
    if len(payload) != expected_payload:
        got_records = len(payload) // record_size
        report.problems.append(
            f"payload: expected {expected_payload} bytes for {n_records} records, "
            f"found {len(payload)} (record {got_records} incomplete or trailing bytes)"
        )
        return report
    record = np.dtype([("label", "<u2"), ("features", "<f4", (dim,))])
    raw = np.frombuffer(payload, dtype=record)
    bad_labels = np.flatnonzero(raw["label"] >= n_classes)
    for idx in bad_labels[:5]:
        report.problems.append(f"record {int(idx)}: label {int(raw['label'][idx])} >= {n_classes}")
    finite = np.isfinite(raw["features"]).all(axis=1)
    for idx in np.flatnonzero(~finite)[:5]:
        report.problems.append(f"record {int(idx)}: non-finite feature value")
    report.n_records = n_records
    report.dim = dim
    report.class_names = names
    return report
