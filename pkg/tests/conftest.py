import pytest

from corona_sim import testimages


@pytest.fixture(scope="session")
def image_dir():
    """Directory holding the eight 256x256 test images, fetched on first use."""
    testimages.fetch(testimages.NAMES, testimages.DEFAULT_DIR)
    return testimages.DEFAULT_DIR


@pytest.fixture(scope="session")
def cameraman(image_dir):
    return testimages.load("cameraman", image_dir).astype(float)
