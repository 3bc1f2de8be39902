"""featext: transfer-learning feature extraction into the shared binary
feature format consumed by the densehawk classifier toolkit."""

from .extractor import (
    ExtractionConfig,
    ExtractionResult,
    STRATEGIES,
    apply_freezing,
    extract,
    load_backbone,
    load_image,
    pooled_features,
)
from .formats import ValidationReport, validate_against_format, write_feature_file

__version__ = "0.1.0"
