import os
from typing import TYPE_CHECKING, Any, BinaryIO, Dict, TextIO, Tuple, Union

import numpy as np

if TYPE_CHECKING:  # pragma: no cover
    from numpy.typing import NDArray
    Array = NDArray[np.float64]
    IntArray = NDArray[np.int64]
else:
    Array = np.ndarray
    IntArray = np.ndarray

PathLike = Union[str, 'os.PathLike[str]']
ByteSource = Union[PathLike, BinaryIO, bytes]
TextSink = Union[PathLike, TextIO]

# (row, col) cell address; row 0 is the southern edge, col 0 the western one
Cell = Tuple[int, int]
Diagnostics = Dict[str, Any]
