"""
Binary graph files.

Layout (little-endian): magic ``CLDG``, u32 version, u64 n, u64 edge_count,
u64 seed, 32-byte profile digest, then the out block (n+1 u64 offsets,
edge_count u32 targets) followed by the in block in the same shape.
"""

from pathlib import Path
from typing import Union

import numpy as np
from loguru import logger

from ..utils.errors import GraphFormatError
from .digraph import Digraph

MAGIC = b"CLDG"
VERSION = 1

HEADER = np.dtype(
    [
        ("magic", "S4"),
        ("version", "<u4"),
        ("n", "<u8"),
        ("edge_count", "<u8"),
        ("seed", "<u8"),
        ("digest", "V32"),
    ]
)


def serialize(g: Digraph, path: Union[str, Path]) -> Path:
    """Write ``g`` to ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = np.zeros(1, dtype=HEADER)
    header["magic"] = MAGIC
    header["version"] = VERSION
    header["n"] = g.n
    header["edge_count"] = g.edge_count
    header["seed"] = g.seed & ((1 << 64) - 1)
    header["digest"] = np.void(bytes(g.profile_digest).ljust(32, b"\0")[:32])
    with open(path, "wb") as f:
        f.write(header.tobytes())
        for indptr, indices in ((g.out_indptr, g.out_indices), (g.in_indptr, g.in_indices)):
            f.write(indptr.astype("<u8").tobytes())
            f.write(indices.astype("<u4").tobytes())
    logger.debug(f"Wrote graph n={g.n} edges={g.edge_count} to {path}")
    return path


def _take(buffer: bytes, offset: int, dtype: str, count: int) -> np.ndarray:
    size = np.dtype(dtype).itemsize * count
    if offset + size > len(buffer):
        raise GraphFormatError("truncated", f"need {offset + size} bytes, file has {len(buffer)}")
    return np.frombuffer(buffer, dtype=dtype, count=count, offset=offset)


def deserialize(path: Union[str, Path]) -> Digraph:
    """Read a graph written by :func:`serialize`."""
    buffer = Path(path).read_bytes()
    if len(buffer) < 4 or buffer[:4] != MAGIC:
        raise GraphFormatError("bad magic", repr(buffer[:4]))
    if len(buffer) < HEADER.itemsize:
        raise GraphFormatError("truncated", "incomplete header")
    header = np.frombuffer(buffer, dtype=HEADER, count=1)[0]
    if int(header["version"]) != VERSION:
        raise GraphFormatError("unsupported version", str(int(header["version"])))

    n = int(header["n"])
    edges = int(header["edge_count"])
    offset = HEADER.itemsize
    blocks = []
    for _ in range(2):
        indptr = _take(buffer, offset, "<u8", n + 1)
        offset += indptr.nbytes
        indices = _take(buffer, offset, "<u4", edges)
        offset += indices.nbytes
        if indptr[0] != 0 or indptr[-1] != edges:
            raise GraphFormatError("corrupt", "offsets do not match the edge count")
        blocks.append((indptr.astype(np.int64), indices.astype(np.int64)))
    if offset != len(buffer):
        raise GraphFormatError("corrupt", f"{len(buffer) - offset} trailing bytes")

    (out_indptr, out_indices), (in_indptr, in_indices) = blocks
    return Digraph(
        n, out_indptr, out_indices, in_indptr, in_indices,
        seed=int(header["seed"]),
        profile_digest=header["digest"].tobytes(),
    )
