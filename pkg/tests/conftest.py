import numpy as np
import pytest

from rgbdaug.assets import get_default_catalog
from rgbdaug.dataset import make_synthetic_source
from rgbdaug.geometry import PinholeCamera


@pytest.fixture(scope="session")
def low_catalog():
    # Low detail tier keeps render-heavy tests fast; the catalog is cached
    # process-wide so session scope costs nothing extra.
    return get_default_catalog("low")


@pytest.fixture(scope="session")
def small_camera():
    return PinholeCamera.from_fov(60.0, width=64, height=48)


@pytest.fixture(scope="session")
def synthetic_source(tmp_path_factory):
    """A small on-disk RGB-D source tree shared by dataset tests."""
    root = tmp_path_factory.mktemp("source")
    manifest = make_synthetic_source(root, count=6, seed=404, size=(48, 64), scenes=2)
    return root, manifest
