import datetime

import numpy as np
import pytest

from urban_video.ingest import calibrate_all, clean, parse_trajectories
from urban_video.rasterize import DENSITY, FLOW, MeshSpec, build_video
from urban_video.synthgen import (
    SynthConfig,
    closed_world_frame,
    generate,
    generate_frame,
    object_cells,
)

MONDAY = datetime.date(2017, 4, 3)


def videos(config: SynthConfig):  # type: ignore
    frame = clean(parse_trajectories(generate(config).encode()).frame)
    trajs = calibrate_all(frame, config.delta_tau)
    return (build_video(trajs, config.mesh, DENSITY),
            build_video(trajs, config.mesh, FLOW))


def test_generate_is_deterministic() -> None:
    config = SynthConfig(n_objects=5, n_days=2)
    assert generate(config) == generate(config)
    other = SynthConfig(n_objects=5, n_days=2, seed=1)
    assert generate(config) != generate(other)


def test_generated_text_is_well_formed() -> None:
    config = SynthConfig(n_objects=8, n_days=3)
    result = parse_trajectories(generate(config).encode())
    assert result.malformed == 0
    assert result.frame['object_id'].nunique() == 8
    mesh = config.mesh
    assert result.frame['lat'].between(mesh.lat_min, mesh.lat_max).all()
    assert result.frame['lon'].between(mesh.lon_min, mesh.lon_max).all()


def test_home_and_work_differ() -> None:
    for home, work in object_cells(SynthConfig(n_objects=20)):
        assert home != work


def test_stationary_object_stays_in_its_home_cell() -> None:
    config = SynthConfig(n_objects=1, n_days=2, pattern='stationary')
    density, flow = videos(config)
    (home, _), = object_cells(config)
    assert density.shape == (96, 16, 16, 1)
    nonzero = np.argwhere(density.data.sum(axis=0)[..., 0])
    assert nonzero.tolist() == [list(home)]
    assert np.all(density.data[:, home[0], home[1], 0] == 1)
    assert not flow.data.any()


def test_weekday_morning_inflow() -> None:
    config = SynthConfig(n_objects=30, n_days=1, start_date=MONDAY)
    density, flow = videos(config)
    inflow = flow.data[..., 0].sum(axis=(1, 2))
    # nobody moves before 06:00, most commuters do by 10:30
    assert inflow[:12].sum() == 0
    assert inflow[12:22].sum() >= 20
    assert np.all(density.data.sum(axis=(1, 2, 3)) == 30)


def test_closed_world_frame(closed_world_config: SynthConfig) -> None:
    frame = closed_world_frame(closed_world_config)
    slots = 2 * 288
    assert len(frame) == 50 * slots
    counts = frame.groupby('object_id')['timestamp'].nunique()
    assert (counts == slots).all()
    mesh = closed_world_config.mesh
    assert frame['lat'].between(mesh.lat_min, mesh.lat_max).all()


def test_invalid_configs() -> None:
    with pytest.raises(ValueError):
        SynthConfig(n_objects=0)
    with pytest.raises(ValueError):
        SynthConfig(delta_tau=7)
    with pytest.raises(ValueError):
        SynthConfig(pattern='random')
    with pytest.raises(ValueError):
        SynthConfig(move_probability=1.5)


def test_generate_frame_covers_every_day() -> None:
    config = SynthConfig(n_objects=2, n_days=3,
                         mesh=MeshSpec(lon_min=139.70, lon_max=139.72,
                                       lat_min=35.64, lat_max=35.656))
    frame = generate_frame(config)
    days = (frame['timestamp'] // 86400).nunique()
    assert days == 3
