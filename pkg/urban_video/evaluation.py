"""Metrics on rescaled predictions, case studies and efficiency reports."""

import math
from typing import Any, Dict, Iterable, List, Optional, Sequence  # noqa

import attr
import numpy as np
import pandas as pd

from .dataset import WEEKDAY, WEEKEND, Calendar, Scaler
from .exceptions import NoMatchingFrameError, ShapeMismatchError
from .helpers import SECONDS_PER_DAY, parse_time_of_day, to_datetime
from .log import eval_logger
from .model_train import TrainHistory
from .nn_optim import count_params
from .typedefs import Array, Cell, IntArray, TextSink

__all__ = ('MetricsReport', 'EfficiencyReport', 'CaseStudyRow', 'evaluate',
           'case_study', 'case_study_table', 'efficiency',
           'write_metrics_csv', 'write_case_study_csv',
           'write_efficiency_csv', 'METRICS_COLUMNS', 'CASE_STUDY_COLUMNS',
           'EFFICIENCY_COLUMNS', 'UNDEFINED')

METRICS_COLUMNS = ('model', 'dataset', 'mse', 'rmse', 'mae', 'mape',
                   'mape_support')
CASE_STUDY_COLUMNS = ('cell_row', 'cell_col', 'day_type', 'time', 'rmse')
EFFICIENCY_COLUMNS = ('model', 'dataset', 'trainable', 'non_trainable',
                      'total', 'seconds_per_epoch', 'epochs_to_converge')
UNDEFINED = 'NA'


@attr.s(frozen=True, slots=True)
class MetricsReport:
    """mape is a percentage, None when no ground truth is nonzero."""

    mse = attr.ib(type=float)
    rmse = attr.ib(type=float)
    mae = attr.ib(type=float)
    mape = attr.ib(type=Optional[float])
    n = attr.ib(type=int)
    mape_support = attr.ib(type=int)


@attr.s(frozen=True, slots=True)
class EfficiencyReport:
    trainable = attr.ib(type=int)
    non_trainable = attr.ib(type=int)
    total = attr.ib(type=int)
    seconds_per_epoch = attr.ib(type=float)
    epochs_to_converge = attr.ib(type=int)


@attr.s(frozen=True, slots=True)
class CaseStudyRow:
    cell_row = attr.ib(type=int)
    cell_col = attr.ib(type=int)
    day_type = attr.ib(type=str)
    time = attr.ib(type=str)
    rmse = attr.ib(type=float)
    name = attr.ib(type=str, default='')


def evaluate(predictions: Array, targets: Array, scaler: Scaler, *,
             threshold: Optional[float]=None) -> MetricsReport:
    """Metrics after rescaling both arrays back to the original scale.

    MAPE only counts elements whose truth is nonzero.  With a threshold,
    every metric is restricted to elements whose truth is >= threshold.
    """
    predictions = np.asarray(predictions, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if predictions.shape != targets.shape:
        raise ShapeMismatchError('predictions', targets.shape,
                                 predictions.shape)
    y_hat = scaler.inverse_scale(predictions).ravel()
    y = scaler.inverse_scale(targets).ravel()
    if threshold is not None:
        keep = y >= threshold
        y_hat, y = y_hat[keep], y[keep]
    n = int(y.size)
    if not n:
        raise NoMatchingFrameError('no element left to evaluate')
    err = y_hat - y
    mse = float(np.mean(err ** 2))
    nonzero = y != 0
    support = int(nonzero.sum())
    mape = (float(np.mean(np.abs(err[nonzero]) / np.abs(y[nonzero]))) * 100.0
            if support else None)
    return MetricsReport(mse=mse, rmse=math.sqrt(mse),
                         mae=float(np.mean(np.abs(err))), mape=mape, n=n,
                         mape_support=support)


def _matching_frames(timestamps: IntArray, calendar: Calendar,
                     time_of_day: int, day_type: str) -> IntArray:
    stamps = np.asarray(timestamps, dtype=np.int64)
    at_time = np.flatnonzero(stamps % SECONDS_PER_DAY == time_of_day)
    return np.array([i for i in at_time if calendar.day_type(
        to_datetime(int(stamps[i])).date()) == day_type], dtype=np.int64)


def case_study(predictions: Array, targets: Array, timestamps: IntArray,
               calendar: Calendar, cell: Cell, time_of_day: int,
               day_type: str, *, scaler: Optional[Scaler]=None,
               channel: int=0) -> float:
    """RMSE at one cell over the frames at time_of_day (seconds after
    midnight) on days of day_type.  Arrays are (N, H, W, C)."""
    if predictions.shape != targets.shape:
        raise ShapeMismatchError('predictions', targets.shape,
                                 predictions.shape)
    if len(timestamps) != len(targets):
        raise ShapeMismatchError('timestamps', (len(targets),),
                                 (len(timestamps),))
    hit = _matching_frames(timestamps, calendar, time_of_day, day_type)
    if not hit.size:
        raise NoMatchingFrameError(
            'no test frame at %02d:%02d on a %s' % (
                time_of_day // 3600, time_of_day % 3600 // 60, day_type))
    row, col = cell
    y_hat = predictions[hit, row, col, channel]
    y = targets[hit, row, col, channel]
    if scaler is not None:
        y_hat, y = scaler.inverse_scale(y_hat), scaler.inverse_scale(y)
    return math.sqrt(float(np.mean((y_hat - y) ** 2)))


def case_study_table(predictions: Array, targets: Array,
                     timestamps: IntArray, calendar: Calendar,
                     cells: Dict[str, Cell], *,
                     times: Sequence[str]=('08:00', '12:00', '16:00',
                                           '20:00'),
                     scaler: Optional[Scaler]=None,
                     channel: int=0) -> List[CaseStudyRow]:
    """case_study for every named cell, time and day type.  Combinations
    without a matching frame are skipped."""
    rows = []
    for name, cell in sorted(cells.items()):
        for day_type in (WEEKDAY, WEEKEND):
            for text in times:
                try:
                    rmse = case_study(predictions, targets, timestamps,
                                      calendar, cell,
                                      parse_time_of_day(text), day_type,
                                      scaler=scaler, channel=channel)
                except NoMatchingFrameError:
                    eval_logger.debug('No %s frame at %s for %s',
                                      day_type, text, name)
                    continue
                rows.append(CaseStudyRow(cell[0], cell[1], day_type, text,
                                         rmse, name))
    return rows


def efficiency(model: Any, history: TrainHistory) -> EfficiencyReport:
    counts = count_params(model)
    return EfficiencyReport(
        trainable=counts.trainable, non_trainable=counts.non_trainable,
        total=counts.total, seconds_per_epoch=history.seconds_per_epoch,
        epochs_to_converge=history.epochs_to_converge)


def _write_table(table: pd.DataFrame, sink: TextSink) -> None:
    if hasattr(sink, 'write'):
        table.to_csv(sink, index=False, lineterminator='\n')
    else:
        with open(sink, 'w', encoding='utf-8', newline='') as fp:  # type: ignore  # noqa
            table.to_csv(fp, index=False, lineterminator='\n')


def _number(value: Optional[float]) -> str:
    return UNDEFINED if value is None else repr(float(value))


def write_metrics_csv(rows: Iterable[Any], sink: TextSink) -> None:
    """rows: (model, dataset, MetricsReport) triples."""
    table = pd.DataFrame([
        (model, dataset, _number(r.mse), _number(r.rmse), _number(r.mae),
         _number(r.mape), r.mape_support)
        for model, dataset, r in rows], columns=list(METRICS_COLUMNS))
    _write_table(table, sink)


def write_case_study_csv(rows: Iterable[CaseStudyRow],
                         sink: TextSink) -> None:
    table = pd.DataFrame([
        (r.cell_row, r.cell_col, r.day_type, r.time, _number(r.rmse))
        for r in rows], columns=list(CASE_STUDY_COLUMNS))
    _write_table(table, sink)


def write_efficiency_csv(rows: Iterable[Any], sink: TextSink) -> None:
    """rows: (model, dataset, EfficiencyReport) triples."""
    table = pd.DataFrame([
        (model, dataset, r.trainable, r.non_trainable, r.total,
         _number(r.seconds_per_epoch), r.epochs_to_converge)
        for model, dataset, r in rows], columns=list(EFFICIENCY_COLUMNS))
    _write_table(table, sink)
