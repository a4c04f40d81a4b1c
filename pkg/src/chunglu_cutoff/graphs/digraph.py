"""
Immutable directed graph in compressed sparse row form.
"""

import hashlib
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Optional, Tuple

import numpy as np
from scipy import sparse

from ..utils.errors import SinkVertexError

EMPTY_DIGEST = bytes(32)


def _readonly(array: np.ndarray, dtype: type) -> np.ndarray:
    out = np.ascontiguousarray(array, dtype=dtype)
    out.setflags(write=False)
    return out


def transpose_csr(n: int, indptr: np.ndarray, indices: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Transpose a CSR adjacency; rows of the result are sorted ascending."""
    sources = np.repeat(np.arange(n, dtype=np.int64), np.diff(indptr))
    order = np.argsort(indices, kind="stable")
    t_indices = sources[order]
    t_indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(indices, minlength=n), out=t_indptr[1:])
    return t_indptr, t_indices


@dataclass(frozen=True, eq=False)
class Digraph:
    """A sampled graph: out- and in-adjacency plus its provenance.

    Neighbour lists are sorted ascending; there are no loops or multi-edges.
    """

    n: int
    out_indptr: np.ndarray
    out_indices: np.ndarray
    in_indptr: np.ndarray
    in_indices: np.ndarray
    seed: int = 0
    profile_digest: bytes = field(default=EMPTY_DIGEST)

    def __post_init__(self) -> None:
        object.__setattr__(self, "out_indptr", _readonly(self.out_indptr, np.int64))
        object.__setattr__(self, "out_indices", _readonly(self.out_indices, np.int64))
        object.__setattr__(self, "in_indptr", _readonly(self.in_indptr, np.int64))
        object.__setattr__(self, "in_indices", _readonly(self.in_indices, np.int64))

    @classmethod
    def from_rows(
        cls,
        n: int,
        rows: Iterable[np.ndarray],
        seed: int = 0,
        profile_digest: bytes = EMPTY_DIGEST,
    ) -> "Digraph":
        """Assemble from per-source sorted target arrays, in row order."""
        rows = list(rows)
        counts = np.fromiter((r.size for r in rows), dtype=np.int64, count=n)
        out_indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(counts, out=out_indptr[1:])
        out_indices = np.concatenate(rows).astype(np.int64) if rows else np.zeros(0, np.int64)
        in_indptr, in_indices = transpose_csr(n, out_indptr, out_indices)
        return cls(n, out_indptr, out_indices, in_indptr, in_indices, int(seed), profile_digest)

    @classmethod
    def from_edges(
        cls,
        n: int,
        edges: Iterable[Tuple[int, int]],
        seed: int = 0,
        profile_digest: bytes = EMPTY_DIGEST,
    ) -> "Digraph":
        """Build from an edge list; duplicates collapse, loops are rejected."""
        pairs = np.array(list(edges), dtype=np.int64).reshape(-1, 2)
        if pairs.size and (pairs.min() < 0 or pairs.max() >= n):
            raise ValueError(f"edge endpoint out of range for n={n}")
        if np.any(pairs[:, 0] == pairs[:, 1]):
            raise ValueError("self-loops are not allowed")
        pairs = np.unique(pairs, axis=0)
        rows = np.split(pairs[:, 1], np.searchsorted(pairs[:, 0], np.arange(1, n)))
        return cls.from_rows(n, rows, seed, profile_digest)

    @property
    def edge_count(self) -> int:
        return int(self.out_indices.size)

    @cached_property
    def out_degree(self) -> np.ndarray:
        return np.diff(self.out_indptr)

    @cached_property
    def in_degree(self) -> np.ndarray:
        return np.diff(self.in_indptr)

    def out_neighbors(self, x: int) -> np.ndarray:
        return self.out_indices[self.out_indptr[x]:self.out_indptr[x + 1]]

    def in_neighbors(self, y: int) -> np.ndarray:
        return self.in_indices[self.in_indptr[y]:self.in_indptr[y + 1]]

    def has_edge(self, x: int, y: int) -> bool:
        row = self.out_neighbors(x)
        pos = np.searchsorted(row, y)
        return bool(pos < row.size and row[pos] == y)

    def edges(self) -> np.ndarray:
        """(edge_count, 2) array of (tail, head) in row order."""
        tails = np.repeat(np.arange(self.n, dtype=np.int64), self.out_degree)
        return np.column_stack((tails, self.out_indices))

    def sinks(self) -> np.ndarray:
        return np.flatnonzero(self.out_degree == 0)

    def require_no_sinks(self) -> None:
        sinks = self.sinks()
        if sinks.size:
            raise SinkVertexError(int(sinks[0]))

    @cached_property
    def transition_matrix(self) -> sparse.csr_matrix:
        """P(x, y) = 1/D+_x on edges; rows of sinks are empty."""
        deg = self.out_degree
        with np.errstate(divide="ignore"):
            inv = np.where(deg > 0, 1.0 / np.maximum(deg, 1), 0.0)
        data = np.repeat(inv, deg)
        return sparse.csr_matrix(
            (data, self.out_indices, self.out_indptr), shape=(self.n, self.n)
        )

    @cached_property
    def transition_matrix_t(self) -> sparse.csr_matrix:
        """Transpose of the kernel, for fast mu @ P as P.T @ mu."""
        return self.transition_matrix.T.tocsr()

    def adjacency(self) -> sparse.csr_matrix:
        data = np.ones(self.edge_count, dtype=np.int8)
        return sparse.csr_matrix((data, self.out_indices, self.out_indptr), shape=(self.n, self.n))

    def content_digest(self) -> str:
        """SHA-256 of the CSR arrays, seed and profile digest."""
        sha = hashlib.sha256()
        sha.update(np.array([self.n, self.seed & ((1 << 64) - 1)], dtype="<u8").tobytes())
        sha.update(self.profile_digest)
        for arr in (self.out_indptr, self.out_indices, self.in_indptr, self.in_indices):
            sha.update(arr.astype("<i8").tobytes())
        return sha.hexdigest()

    def identical(self, other: "Digraph") -> bool:
        return (
            self.n == other.n
            and self.seed == other.seed
            and self.profile_digest == other.profile_digest
            and np.array_equal(self.out_indptr, other.out_indptr)
            and np.array_equal(self.out_indices, other.out_indices)
            and np.array_equal(self.in_indptr, other.in_indptr)
            and np.array_equal(self.in_indices, other.in_indices)
        )

    def with_provenance(self, seed: Optional[int] = None, profile_digest: Optional[bytes] = None) -> "Digraph":
        return Digraph(
            self.n, self.out_indptr, self.out_indices, self.in_indptr, self.in_indices,
            self.seed if seed is None else int(seed),
            self.profile_digest if profile_digest is None else profile_digest,
        )
