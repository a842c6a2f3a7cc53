import numpy as np
import pytest

from risci.scene import SceneConfig, build_scene


@pytest.fixture(scope="session")
def scene():
    return build_scene()


@pytest.fixture(scope="session")
def small_config():
    return SceneConfig(
        panel_rows=4, panel_cols=4, n_tx_panels=2, n_rx_panels=2, panel_grid=(1, 2),
        roi_extent=(1.0, 1.0), frequencies=(5.9e9, 6.0e9, 6.1e9),
    )


@pytest.fixture(scope="session")
def small_scene(small_config):
    return build_scene(small_config)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
