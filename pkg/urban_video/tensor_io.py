"""VLUC binary tensors, weight checkpoints and viewer grid-CSV export.

Tensor layout, all little-endian:

    magic      4 bytes  b'VLUC'
    version    u32
    T, H, W, C u32 x 4
    start      i64      seconds since the naive local epoch
    interval   u32      frame interval in seconds
    values     f32 x T*H*W*C, row-major, C fastest
"""

from pathlib import Path
from struct import Struct
from typing import Dict, Sequence, Tuple  # noqa

import numpy as np
import pandas as pd

from .exceptions import MalformedInputError
from .helpers import format_timestamp
from .nn_base import Parameter
from .rasterize import CHANNEL_LABELS, VideoTensor
from .typedefs import PathLike, TextSink

__all__ = ('MAGIC', 'FORMAT_VERSION', 'write_video', 'read_video',
           'pack_tensor', 'unpack_tensor', 'write_checkpoint',
           'read_checkpoint', 'export_grid_csv', 'orientation_path',
           'GRID_ORIENTATION')

MAGIC = b'VLUC'
FORMAT_VERSION = 1

HEADER = Struct('<4sI4IqI')
PACK_HEADER = HEADER.pack
UNPACK_HEADER = HEADER.unpack_from

GRID_ORIENTATION = 'origin=south-west\nrow0=lat_min\ncol0=lon_min\n'
GRID_COLUMNS = ('timestamp', 'row', 'col', 'value')


def pack_tensor(data: np.ndarray, *, start_timestamp: int=0,
                frame_interval: int=0) -> bytes:
    if data.ndim > 4:
        raise ValueError('at most 4 dimensions can be stored, got %d'
                         % data.ndim)
    dims = (1,) * (4 - data.ndim) + tuple(int(d) for d in data.shape)
    header = PACK_HEADER(MAGIC, FORMAT_VERSION, *dims,
                         int(start_timestamp), int(frame_interval))
    payload = np.ascontiguousarray(data, dtype='<f4').tobytes()
    return header + payload


def unpack_tensor(buf: bytes, offset: int=0) -> Tuple[np.ndarray, int, int,
                                                      int]:
    """Decode one tensor record.

    Returns (data, start_timestamp, frame_interval, end_offset).
    """
    if len(buf) - offset < HEADER.size:
        raise MalformedInputError('truncated tensor header at byte %d'
                                  % offset)
    magic, version, t, h, w, c, start, interval = UNPACK_HEADER(buf, offset)
    if magic != MAGIC:
        raise MalformedInputError('bad magic %r at byte %d' % (magic, offset))
    if version != FORMAT_VERSION:
        raise MalformedInputError('unsupported tensor format version %d'
                                  % version)
    count = t * h * w * c
    begin = offset + HEADER.size
    end = begin + 4 * count
    if len(buf) < end:
        raise MalformedInputError('truncated tensor payload: need %d bytes, '
                                  'have %d' % (end - begin, len(buf) - begin))
    data = np.frombuffer(buf, dtype='<f4', count=count, offset=begin)
    return data.reshape(t, h, w, c).astype(np.float64), start, interval, end


def write_video(video: VideoTensor, path: PathLike) -> None:
    blob = pack_tensor(video.data, start_timestamp=video.start_timestamp,
                       frame_interval=video.frame_interval)
    Path(path).write_bytes(blob)


def read_video(path: PathLike) -> VideoTensor:
    try:
        buf = Path(path).read_bytes()
    except OSError as exc:
        raise MalformedInputError('cannot read tensor %s: %s' % (path, exc))
    data, start, interval, _ = unpack_tensor(buf)
    channels = data.shape[-1]
    labels = [labels for labels in CHANNEL_LABELS.values()
              if len(labels) == channels]
    if not labels:
        raise MalformedInputError('unsupported channel count %d' % channels)
    return VideoTensor(channel_labels=labels[0], data=data,
                       start_timestamp=start, frame_interval=interval)


def _index_path(path: PathLike) -> Path:
    target = Path(path)
    return target.with_name(target.name + '.index')


def orientation_path(path: PathLike) -> Path:
    target = Path(path)
    return target.with_name(target.name + '.orientation')


def write_checkpoint(params: Sequence[Parameter], path: PathLike) -> Path:
    """Write every parameter as one tensor record plus an index file with
    lines ``name,shape,offset``; returns the index path."""
    blobs = []
    rows = []
    offset = 0
    for param in params:
        blob = pack_tensor(param.value)
        rows.append({'name': param.name,
                     'shape': 'x'.join(str(d) for d in param.value.shape),
                     'offset': offset})
        blobs.append(blob)
        offset += len(blob)
    Path(path).write_bytes(b''.join(blobs))
    index = _index_path(path)
    pd.DataFrame(rows, columns=['name', 'shape', 'offset']).to_csv(
        index, index=False, lineterminator='\n')
    return index


def read_checkpoint(path: PathLike) -> Dict[str, np.ndarray]:
    try:
        buf = Path(path).read_bytes()
        table = pd.read_csv(_index_path(path), dtype={'shape': str},
                            keep_default_na=False)
    except OSError as exc:
        raise MalformedInputError('cannot read checkpoint %s: %s'
                                  % (path, exc))
    values = {}  # type: Dict[str, np.ndarray]
    for row in table.itertuples(index=False):
        data, _, _, _ = unpack_tensor(buf, int(row.offset))
        shape = tuple(int(d) for d in row.shape.split('x')) if row.shape \
            else ()
        values[row.name] = data.reshape(shape)
    return values


def export_grid_csv(video: VideoTensor, sink: TextSink, *,
                    channel: int=0) -> int:
    """Viewer grid data: one ``timestamp,row,col,value`` line per nonzero
    cell per frame.  Written to a path, the mesh orientation goes to the
    sidecar named by orientation_path().  Returns the number of data lines
    written."""
    if not 0 <= channel < video.channels:
        raise ValueError('channel %d out of range for %d channels'
                         % (channel, video.channels))
    t, r, c = np.nonzero(video.data[..., channel])
    stamps = video.frame_timestamps()
    table = pd.DataFrame({
        'timestamp': [format_timestamp(stamps[i]) for i in t],
        'row': r,
        'col': c,
        'value': video.data[t, r, c, channel],
    }, columns=list(GRID_COLUMNS))

    if hasattr(sink, 'write'):
        table.to_csv(sink, index=False, lineterminator='\n')
    else:
        with open(sink, 'w', encoding='utf-8', newline='') as fp:  # type: ignore  # noqa
            table.to_csv(fp, index=False, lineterminator='\n')
        orientation_path(sink).write_text(  # type: ignore
            GRID_ORIENTATION, encoding='utf-8')
    return len(table)
