import numpy as np
import pytest
from PIL import Image

CLASSES = ("CLL", "FL", "MCL")


@pytest.fixture(scope="session")
def image_tree(tmp_path_factory):
    """Tiny class-per-directory tree: 2 small noise images per class."""
    root = tmp_path_factory.mktemp("images")
    rng = np.random.default_rng(0)
    for label, name in enumerate(CLASSES):
        class_dir = root / name
        class_dir.mkdir()
        for i in range(2):
            pixels = rng.integers(0, 256, size=(48, 48, 3), dtype=np.uint8)
            pixels[:, :, label] //= 2  # give each class a color cast
            Image.fromarray(pixels).save(class_dir / f"img_{i}.png")
    return root
