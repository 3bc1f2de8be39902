"""Cross-component contract: files emitted here must satisfy the
independent format validator AND load in the classifier package."""

import numpy as np
import pytest

from featext import extractor
from featext.extractor import ExtractionConfig, extract
from featext.formats import validate_against_format

densehawk_dataset = pytest.importorskip(
    "densehawk.dataset", reason="consumer package not installed"
)


@pytest.fixture(scope="module")
def extracted(image_tree, tmp_path_factory):
    out = tmp_path_factory.mktemp("contract") / "features.lymf"
    result = extract(
        ExtractionConfig(str(image_tree), str(out), seed=9, weights="random")
    )
    return out, result


def test_validator_passes(extracted):
    out, result = extracted
    report = validate_against_format(out)
    assert report.ok, report.problems
    assert report.dim == result.dim


def test_consumer_loads_emitted_file(extracted):
    out, result = extracted
    ds = densehawk_dataset.load_dataset(str(out), "binary")
    assert len(ds) == result.n_records
    assert ds.dim == result.dim == 3 * extractor.POOLED_WIDTH
    assert ds.class_names == result.class_names == ["CLL", "FL", "MCL"]
    assert np.all(np.isfinite(ds.features))
    # two images per class, directory order
    np.testing.assert_array_equal(ds.labels, [0, 0, 1, 1, 2, 2])


def test_consumer_round_trip_preserves_payload(extracted, tmp_path):
    out, _ = extracted
    ds = densehawk_dataset.load_dataset(str(out), "binary")
    resaved = tmp_path / "resaved.lymf"
    densehawk_dataset.save_dataset(ds, str(resaved), "binary")
    assert resaved.read_bytes() == out.read_bytes()


def test_deterministic_with_zero_finetune_epochs(image_tree, tmp_path):
    files = []
    for name in ("r1.lymf", "r2.lymf"):
        out = tmp_path / name
        extract(
            ExtractionConfig(
                str(image_tree), str(out), strategies=["total"], seed=9, weights="random"
            )
        )
        files.append(out.read_bytes())
    assert files[0] == files[1]
