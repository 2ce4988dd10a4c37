"""PADEMB1 container writer.

Layout: magic bytes ``PADEMB1\\0``, little-endian u32 count and
dimension, then count*dim little-endian float32 values row-major.
"""

import os
import struct

import numpy as np

MAGIC = b"PADEMB1\x00"


def write_pademb(data: np.ndarray, path) -> None:
    data = np.ascontiguousarray(data, dtype="<f4")
    if data.ndim != 2:
        raise ValueError("embeddings must be 2-D")
    tmp = "%s.tmp%d" % (os.fspath(path), os.getpid())
    with open(tmp, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", data.shape[0], data.shape[1]))
        fh.write(data.tobytes())
    os.replace(tmp, path)
