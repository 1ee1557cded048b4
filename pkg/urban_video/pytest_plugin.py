"""Fixtures for tests of urban_video based code.

Enable with ``pytest_plugins = 'urban_video.pytest_plugin'`` in a
conftest.py.  Tests marked ``slow`` only run with --urban-video-slow.
"""

import numpy as np
import pandas as pd
import pytest

from .rasterize import MeshSpec
from .synthgen import SynthConfig, closed_world_frame


def pytest_addoption(parser):  # type: ignore
    parser.addoption(
        '--urban-video-slow', action='store_true', default=False,
        help='run the long training and benchmark tests')


def pytest_configure(config):  # type: ignore
    config.addinivalue_line(
        'markers', 'slow: long running test, needs --urban-video-slow')


def pytest_collection_modifyitems(config, items):  # type: ignore
    if config.getoption('--urban-video-slow'):
        return
    skip = pytest.mark.skip(reason='needs --urban-video-slow')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def slow(request):  # type: ignore
    """--urban-video-slow config option"""
    return request.config.getoption('--urban-video-slow')


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def small_mesh() -> MeshSpec:
    """4x4 cells of 0.005 x 0.004 degrees, 30-minute frames."""
    return MeshSpec(lon_min=139.70, lon_max=139.72, lat_min=35.64,
                    lat_max=35.656)


@pytest.fixture
def closed_world_config(small_mesh: MeshSpec) -> SynthConfig:
    return SynthConfig(n_objects=50, n_days=2, mesh=small_mesh, seed=3)


@pytest.fixture
def closed_world(closed_world_config: SynthConfig) -> pd.DataFrame:
    """Record table where every object sits inside the mesh at every
    calibration slot."""
    return closed_world_frame(closed_world_config)
