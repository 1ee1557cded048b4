"""End-to-end runs: trajectories to videos, windows, training, metrics."""

from typing import Any, Callable, Iterable, List, Optional  # noqa
from typing import Sequence, Tuple  # noqa

import attr
import numpy as np

from .config import ExperimentSpec
from .dataset import (
    Sample,
    Scaler,
    collate,
    fit_scaler,
    make_paired_samples,
    make_samples,
    split,
)
from .evaluation import (
    CaseStudyRow,
    EfficiencyReport,
    MetricsReport,
    case_study_table,
    efficiency,
    evaluate,
)
from .ingest import calibrate_all, clean, parse_trajectories
from .log import train_logger
from .model_baselines import HistoricalAverage, baseline_frames
from .model_nets import Model, build_model
from .model_train import TrainHistory, train
from .rasterize import DENSITY, FLOW, VideoTensor, build_video, k_anonymize
from .tensor_io import read_video
from .typedefs import Array

__all__ = ('Prepared', 'RunRecord', 'ModelResult', 'BASELINES',
           'load_videos', 'build_videos', 'prepare', 'predict_samples',
           'task_names', 'run_model', 'run_baseline')

BASELINES = ('copy_yesterday', 'historical_average')


def build_videos(spec: ExperimentSpec, text: Any, *,
                 workers: int=1) -> Tuple[VideoTensor, VideoTensor]:
    """Parse, clean, calibrate and rasterize a trajectory-CSV source into
    k-anonymized density and flow videos."""
    parsed = parse_trajectories(text)
    records = clean(parsed.frame, spec.max_speed)
    trajectories = calibrate_all(records, spec.delta_tau, workers=workers)
    density, flow = (
        k_anonymize(build_video(trajectories, spec.mesh, kind,
                                workers=workers), spec.k_anonymity)
        for kind in (DENSITY, FLOW))
    return density, flow


def load_videos(spec: ExperimentSpec, *,
                workers: int=1) -> Tuple[VideoTensor, VideoTensor]:
    """Stored tensors when [paths] names both, else built from the raw
    trajectories."""
    paths = spec.paths
    if paths.density is not None and paths.flow is not None:
        density_path, flow_path = spec.require('density', 'flow')
        return read_video(density_path), read_video(flow_path)
    trajectories, = spec.require('trajectories')
    with open(trajectories, 'rb') as fp:
        return build_videos(spec, fp.read(), workers=workers)


@attr.s(frozen=True, slots=True)
class Prepared:
    """Windows of one experiment.

    scalers holds one scaler per model output, in output order; videos the
    matching unscaled videos.
    """

    videos = attr.ib(type=tuple, converter=tuple)
    scalers = attr.ib(type=tuple, converter=tuple)
    train = attr.ib(type=list)
    val = attr.ib(type=list)
    test = attr.ib(type=list)

    @property
    def test_targets(self) -> Tuple[Array, ...]:
        batch = collate(self.test)
        if batch.aux_target is None:
            return (batch.target,)
        return batch.target, batch.aux_target

    @property
    def test_indices(self) -> Array:
        return np.array([s.t_index for s in self.test], dtype=np.int64)


def _scaler(spec: ExperimentSpec, video: VideoTensor) -> Scaler:
    if spec.window.scale_on == 'all':
        return fit_scaler(video)
    n = video.frames - spec.window.first_target
    return fit_scaler(video, upto=spec.window.first_target + (64 * n) // 100)


def prepare(spec: ExperimentSpec, density: VideoTensor,
            flow: VideoTensor) -> Prepared:
    """Samples for the configured model: the density video for one
    channel, the flow video for two, both paired for multitask_df."""
    window = spec.window
    if spec.model.kind == 'multitask_df':
        scalers = (_scaler(spec, density), _scaler(spec, flow))
        samples = make_paired_samples(density, flow, window, scalers[0],
                                      scalers[1], spec.calendar)
        videos = (density, flow)
    else:
        video = density if spec.model.channels == 1 else flow
        scalers = (_scaler(spec, video),)
        samples = make_samples(video, window, scalers[0], spec.calendar)
        videos = (video,)
    train_part, val_part, test_part = split(samples)
    train_logger.info('Split %d samples into %d/%d/%d', len(samples),
                      len(train_part), len(val_part), len(test_part))
    return Prepared(videos, scalers, train_part, val_part, test_part)


def predict_samples(model: Model, samples: Sequence[Sample],
                    batch_size: int) -> Tuple[Array, ...]:
    """Inference-mode outputs for samples, concatenated per head."""
    outputs = []  # type: List[Tuple[Array, ...]]
    for start in range(0, len(samples), batch_size):
        outputs.append(model.predict(collate(samples[start:start +
                                                     batch_size])))
    return tuple(np.concatenate(parts) for parts in zip(*outputs))


@attr.s(frozen=True, slots=True)
class RunRecord:
    seed = attr.ib(type=int)
    history = attr.ib(type=TrainHistory)


@attr.s(frozen=True, slots=True, eq=False)
class ModelResult:
    """Every repeat of one model; the metrics belong to the run with the
    lowest validation MSE."""

    kind = attr.ib(type=str)
    runs = attr.ib(type=tuple, converter=tuple)
    best = attr.ib(type=int)
    model = attr.ib(type=Model)
    metrics = attr.ib(type=tuple, converter=tuple)
    efficiency = attr.ib(type=EfficiencyReport)
    case_study = attr.ib(type=tuple, converter=tuple, default=())

    @property
    def history(self) -> TrainHistory:
        return self.runs[self.best].history


def task_names(prepared: Prepared) -> Tuple[str, ...]:
    return tuple(video.kind for video in prepared.videos)


def run_model(spec: ExperimentSpec, prepared: Prepared, *,
              callbacks: Iterable[Callable[..., Any]]=()) -> ModelResult:
    """Train spec.train.repeats models (seeds seed, seed + 1, ...) and
    evaluate the best one on the test part."""
    callbacks = list(callbacks)
    runs = []
    best = None  # type: Optional[Tuple[float, int, Model]]
    for repeat in range(spec.train.repeats):
        seed = spec.seed + repeat
        model = build_model(spec.model, seed)
        history = train(model, prepared.train, prepared.val, spec.train,
                        seed=seed, callbacks=callbacks)
        runs.append(RunRecord(seed, history))
        train_logger.info('%s run %d/%d: best val_mse=%.6g at epoch %d',
                          spec.model.kind, repeat + 1, spec.train.repeats,
                          history.best_val_mse, history.best_epoch)
        if best is None or history.best_val_mse < best[0]:
            best = (history.best_val_mse, repeat, model)
    assert best is not None
    _, index, model = best

    predictions = predict_samples(model, prepared.test,
                                  spec.train.batch_size)
    targets = prepared.test_targets
    metrics = tuple(
        evaluate(pred, target, scaler, threshold=spec.eval.threshold)
        for pred, target, scaler in zip(predictions, targets,
                                        prepared.scalers))
    rows = ()  # type: Tuple[CaseStudyRow, ...]
    cells = spec.eval.named_cells()
    if cells:
        video = prepared.videos[0]
        stamps = [video.frame_timestamp(int(t))
                  for t in prepared.test_indices]
        rows = tuple(case_study_table(
            predictions[0], targets[0], np.asarray(stamps), spec.calendar,
            cells, times=spec.eval.times, scaler=prepared.scalers[0]))
    return ModelResult(
        kind=spec.model.kind, runs=runs, best=index, model=model,
        metrics=metrics, efficiency=efficiency(model, runs[index].history),
        case_study=rows)


def run_baseline(spec: ExperimentSpec, prepared: Prepared,
                 kind: str) -> Tuple[MetricsReport, ...]:
    """Test metrics of a calendar baseline, one report per task.

    HistoricalAverage learns from the frames before the first validation
    target.
    """
    t_indices = prepared.test_indices
    upto = prepared.val[0].t_index if prepared.val else int(t_indices[0])
    reports = []
    for video, scaler, target in zip(prepared.videos, prepared.scalers,
                                     prepared.test_targets):
        model = None
        if kind == 'historical_average':
            model = HistoricalAverage(spec.calendar).fit(video, upto)
        raw = baseline_frames(video, t_indices, kind=kind, model=model)
        reports.append(evaluate(scaler.scale(raw), target, scaler,
                                threshold=spec.eval.threshold))
    return tuple(reports)
