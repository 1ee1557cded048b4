import datetime
from typing import List, Optional

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from urban_video import rasterize
from urban_video.exceptions import CalibrationRateError, ShapeMismatchError
from urban_video.ingest import CalibratedTrajectory, calibrate_all
from urban_video.test_utils import brute_density, brute_flow, make_video
from urban_video.typedefs import Cell

SMALL = rasterize.MeshSpec(lon_min=139.70, lon_max=139.72, lat_min=35.64,
                           lat_max=35.656)

cells = st.one_of(st.none(), st.tuples(st.integers(0, 3),
                                       st.integers(0, 3)))


def flat(positions: List[Optional[Cell]]) -> np.ndarray:
    return np.array([-1 if p is None else p[0] * SMALL.width + p[1]
                     for p in positions], dtype=np.int64)


def test_mesh_shape() -> None:
    assert (SMALL.height, SMALL.width) == (4, 4)
    assert SMALL.steps_per_day == 48
    tokyo = rasterize.preset_mesh('Tokyo')
    assert (tokyo.height, tokyo.width) == (80, 80)


def test_mesh_rejects_bad_fields() -> None:
    with pytest.raises(ValueError):
        rasterize.MeshSpec(lon_min=0, lon_max=1, lat_min=0, lat_max=1,
                           frame_interval=7)
    with pytest.raises(ValueError):
        rasterize.MeshSpec(lon_min=0, lon_max=1, lat_min=0, lat_max=1,
                           d_lat=0)
    with pytest.raises(ValueError):
        rasterize.preset_mesh('atlantis')


def test_grid_of_edges() -> None:
    assert rasterize.grid_of(35.64, 139.70, SMALL) == (0, 0)
    assert rasterize.grid_of(35.644, 139.705, SMALL) == (1, 1)
    assert rasterize.grid_of(35.6559, 139.7199, SMALL) == (3, 3)
    # the upper edges are outside the half-open box
    assert rasterize.grid_of(35.656, 139.71, SMALL) is None
    assert rasterize.grid_of(35.65, 139.72, SMALL) is None
    assert rasterize.grid_of(35.63, 139.71, SMALL) is None


def test_grid_cells_nan_is_absent() -> None:
    rows, cols = rasterize.grid_cells(np.array([np.nan, 35.641]),
                                      np.array([139.701, 139.701]), SMALL)
    assert rows.tolist() == [-1, 0]
    assert cols.tolist() == [-1, 0]


@settings(max_examples=1000, deadline=None)
@given(st.lists(cells, max_size=10))
def test_density_matches_brute_force(positions: List[Optional[Cell]]) -> None:
    got = rasterize.density_frame(flat(positions), SMALL)
    assert np.array_equal(got, brute_density(positions, SMALL))


@settings(max_examples=1000, deadline=None)
@given(st.lists(st.tuples(cells, cells), max_size=10))
def test_flow_matches_brute_force(pairs: list) -> None:
    prev = [a for a, _ in pairs]
    curr = [b for _, b in pairs]
    got = rasterize.flow_frame(flat(prev), flat(curr), SMALL)
    assert np.array_equal(got, brute_flow(prev, curr, SMALL))


def test_flow_counts_appearing_and_leaving_objects() -> None:
    prev = flat([None, (0, 0), (1, 1)])
    curr = flat([(2, 2), None, (1, 1)])
    frame = rasterize.flow_frame(prev, curr, SMALL)
    assert frame[2, 2].tolist() == [1.0, 0.0]
    assert frame[0, 0].tolist() == [0.0, 1.0]
    assert frame[1, 1].tolist() == [0.0, 0.0]


def test_flow_shape_mismatch() -> None:
    with pytest.raises(ShapeMismatchError):
        rasterize.flow_frame(np.zeros(2), np.zeros(3), SMALL)


def test_closed_world_conservation(closed_world: pd.DataFrame,
                                   small_mesh: rasterize.MeshSpec) -> None:
    trajs = calibrate_all(closed_world, 300)
    density = rasterize.build_video(trajs, small_mesh, rasterize.DENSITY)
    flow = rasterize.build_video(trajs, small_mesh, rasterize.FLOW)
    assert density.shape == (96, 4, 4, 1)
    assert flow.shape == (96, 4, 4, 2)
    assert density.start_timestamp == flow.start_timestamp
    assert np.all(density.data.sum(axis=(1, 2, 3)) == 50)
    assert not flow.data[0].any()

    d = density.data[..., 0]
    inflow = flow.data[..., 0]
    outflow = flow.data[..., 1]
    assert np.array_equal(d[1:], d[:-1] + inflow[1:] - outflow[1:])
    assert np.array_equal(inflow.sum(axis=(1, 2)), outflow.sum(axis=(1, 2)))
    # objects do move
    assert inflow.sum() > 0


def test_build_video_is_independent_of_order_and_workers(
        closed_world: pd.DataFrame, small_mesh: rasterize.MeshSpec) -> None:
    trajs = calibrate_all(closed_world, 300)
    serial = rasterize.build_video(trajs, small_mesh, rasterize.FLOW)
    reordered = rasterize.build_video(trajs[::-1], small_mesh,
                                      rasterize.FLOW, workers=3)
    assert np.array_equal(serial.data, reordered.data)


def test_build_video_empty() -> None:
    video = rasterize.build_video([], SMALL, rasterize.DENSITY)
    assert video.shape == (48, 4, 4, 1)
    assert not video.data.any()
    assert video.start_timestamp == 0


def test_build_video_window_and_absent_slots() -> None:
    lat = np.full(288, np.nan)
    lon = np.full(288, np.nan)
    # present from 09:00 to 09:55 in cell (1, 2)
    lat[108:120] = 35.646
    lon[108:120] = 139.712
    traj = CalibratedTrajectory('u1', datetime.date(2017, 4, 2), 300,
                                lat, lon)
    video = rasterize.build_video([traj], SMALL, rasterize.DENSITY,
                                  first_day=datetime.date(2017, 4, 1),
                                  n_days=2)
    assert video.frames == 96
    hits = np.argwhere(video.data[..., 0])
    assert hits.tolist() == [[48 + 18, 1, 2], [48 + 19, 1, 2]]

    flow = rasterize.build_video([traj], SMALL, rasterize.FLOW,
                                 first_day=datetime.date(2017, 4, 1),
                                 n_days=2)
    assert flow.data[48 + 18, 1, 2].tolist() == [1.0, 0.0]
    assert flow.data[48 + 20, 1, 2].tolist() == [0.0, 1.0]


def test_build_video_rejects_incompatible_rate() -> None:
    traj = CalibratedTrajectory('u1', datetime.date(2017, 4, 1), 7200,
                                np.full(12, 35.646), np.full(12, 139.712))
    with pytest.raises(CalibrationRateError):
        rasterize.build_video([traj], SMALL, rasterize.DENSITY)


def test_k_anonymize() -> None:
    video = make_video(np.array([9.0, 10.0, 0.0, 25.0]).reshape(1, 2, 2, 1))
    out = rasterize.k_anonymize(video, 10)
    assert out.data.reshape(-1).tolist() == [0.0, 10.0, 0.0, 25.0]
    assert np.array_equal(rasterize.k_anonymize(out, 10).data, out.data)
    assert np.array_equal(rasterize.k_anonymize(video, 0).data, video.data)
    with pytest.raises(ValueError):
        rasterize.k_anonymize(video, -1)


def test_video_tensor_validation() -> None:
    with pytest.raises(ShapeMismatchError):
        make_video(np.zeros((2, 2, 2)))
    with pytest.raises(ShapeMismatchError):
        make_video(np.zeros((1, 2, 2, 2)), 'density')
    with pytest.raises(ValueError):
        make_video(-np.ones((1, 2, 2, 1)))


def test_video_tensor_timestamps() -> None:
    video = make_video(np.zeros((3, 1, 1, 2)), 'flow', start_timestamp=100)
    assert video.kind == 'flow'
    assert video.frame_timestamps().tolist() == [100, 1900, 3700]
    assert video.frame_timestamp(2) == 3700


def test_summarize() -> None:
    data = np.zeros((48, 4, 4, 1))
    data[5, 1, 1, 0] = 7
    summary = rasterize.summarize(make_video(data))
    assert summary.kind == 'density'
    assert (summary.frames, summary.height, summary.width,
            summary.channels) == (48, 4, 4, 1)
    assert summary.start == '1970-01-01 00:00:00'
    assert summary.end == '1970-01-01 23:30:00'
    assert summary.max_value == 7.0
