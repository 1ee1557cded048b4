"""Mini-batch Adam training with early stopping on validation MSE."""

import math
import time
from typing import Any, Callable, Iterable, List, Sequence  # noqa

import attr
import numpy as np
import pandas as pd

from .config import TrainConfig
from .dataset import Batch, Sample, iterate_batches
from .exceptions import DivergenceError, TooFewSamplesError
from .helpers import make_rng
from .log import train_logger
from .model_nets import Model
from .nn_optim import AdamState, adam_step
from .signals import Signal
from .typedefs import TextSink

__all__ = ('EpochRecord', 'TrainHistory', 'Trainer', 'train',
           'write_history_csv', 'HISTORY_COLUMNS')

HISTORY_COLUMNS = ('epoch', 'train_mse', 'val_mse', 'seconds')


@attr.s(frozen=True, slots=True)
class EpochRecord:
    epoch = attr.ib(type=int)
    train_mse = attr.ib(type=float)
    val_mse = attr.ib(type=float)
    seconds = attr.ib(type=float)


@attr.s(frozen=True, slots=True)
class TrainHistory:
    """Per-epoch losses; best_epoch is 1-based."""

    records = attr.ib(type=tuple, converter=tuple)
    best_epoch = attr.ib(type=int)
    stopped_early = attr.ib(type=bool, default=False)

    @property
    def epochs(self) -> int:
        return len(self.records)

    @property
    def best_val_mse(self) -> float:
        return self.records[self.best_epoch - 1].val_mse

    @property
    def seconds_per_epoch(self) -> float:
        if not self.records:
            return 0.0
        return float(np.mean([r.seconds for r in self.records]))

    @property
    def epochs_to_converge(self) -> int:
        return self.best_epoch


def write_history_csv(history: TrainHistory, sink: TextSink) -> None:
    table = pd.DataFrame([attr.astuple(r) for r in history.records],
                         columns=list(HISTORY_COLUMNS))
    if hasattr(sink, 'write'):
        table.to_csv(sink, index=False, lineterminator='\n')
    else:
        with open(sink, 'w', encoding='utf-8', newline='') as fp:  # type: ignore  # noqa
            table.to_csv(fp, index=False, lineterminator='\n')


class Trainer:
    """Owns the optimiser state and the shuffling generator of one run.

    on_epoch_end receivers are called as receiver(trainer, record) and
    must be connected before fit() freezes the signal.
    """

    def __init__(self, model: Model, config: TrainConfig, *,
                 seed: int=0) -> None:
        self.model = model
        self.config = config
        self.rng = make_rng(seed, 1)
        self.optimizer = AdamState(learning_rate=config.learning_rate)
        self.on_epoch_end = Signal(self)
        self.epoch = 0
        self.step = 0

    def train_step(self, batch: Batch) -> float:
        model = self.model
        model.zero_grad()
        loss = model.loss(batch, train=True, backward=True)
        self.step += 1
        if not math.isfinite(loss):
            train_logger.error('Loss %r at epoch %d step %d (batch t=%s)',
                               loss, self.epoch, self.step,
                               batch.t_index.tolist())
            raise DivergenceError(self.epoch, self.step, loss)
        adam_step(self.optimizer, model.parameters())
        return loss

    def validate(self, samples: Sequence[Sample]) -> float:
        total = 0.0
        count = 0
        for batch in iterate_batches(samples, self.config.batch_size):
            total += self.model.loss(batch, train=False,
                                     backward=False) * batch.size
            count += batch.size
        return total / count

    def fit(self, train_samples: Sequence[Sample],
            val_samples: Sequence[Sample]) -> TrainHistory:
        if not train_samples:
            raise TooFewSamplesError(0, 1)
        if not val_samples:
            raise TooFewSamplesError(0, 1)
        self.on_epoch_end.freeze()
        cfg = self.config
        best_val = math.inf
        best_epoch = 0
        best_state = self.model.state()
        records = []  # type: List[EpochRecord]
        wait = 0
        stopped_early = False
        for epoch in range(1, cfg.max_epochs + 1):
            self.epoch = epoch
            started = time.perf_counter()
            total = 0.0
            for batch in iterate_batches(train_samples, cfg.batch_size,
                                         self.rng):
                total += self.train_step(batch) * batch.size
            train_mse = total / len(train_samples)
            val_mse = self.validate(val_samples)
            if not math.isfinite(val_mse):
                raise DivergenceError(epoch, self.step, val_mse)
            record = EpochRecord(epoch, train_mse, val_mse,
                                 time.perf_counter() - started)
            records.append(record)
            train_logger.info('epoch %d: train_mse=%.6g val_mse=%.6g '
                              '(%.2fs)', epoch, train_mse, val_mse,
                              record.seconds)
            self.on_epoch_end.send(self, record)
            if val_mse < best_val:
                best_val = val_mse
                best_epoch = epoch
                best_state = self.model.state()
                wait = 0
            else:
                wait += 1
                if wait >= cfg.patience:
                    stopped_early = True
                    train_logger.info('Early stop at epoch %d, best epoch '
                                      '%d', epoch, best_epoch)
                    break
        self.model.load_state(best_state)
        return TrainHistory(records, best_epoch, stopped_early)


def train(model: Model, train_samples: Sequence[Sample],
          val_samples: Sequence[Sample], config: TrainConfig, *,
          seed: int=0,
          callbacks: Iterable[Callable[..., Any]]=()) -> TrainHistory:
    """Train in place and leave the model at its best validation epoch."""
    trainer = Trainer(model, config, seed=seed)
    trainer.on_epoch_end.extend(callbacks)
    return trainer.fit(train_samples, val_samples)
