"""CSR matrices and the graph operators built from an affinity matrix.

Everything here is float64 and immutable once constructed. The hot product
``spmm`` dispatches to whichever kernel backend :mod:`graphfilter.kernels`
selected at import.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import kernels


class GraphError(ValueError):
    """Invalid graph input (self-loops, negative weights, bad shapes)."""


class IsolatedVertexError(GraphError):
    def __init__(self, vertex):
        super().__init__(
            f"vertex {vertex} has zero degree; normalized Laplacians are undefined "
            "in strict mode (use strict=False to add an implicit unit self-loop)"
        )
        self.vertex = vertex


@dataclass(frozen=True, eq=False)
class SparseMatrix:
    """Compressed sparse row matrix.

    Column indices are strictly increasing within each row and every stored
    value is finite. Use :meth:`from_coo` to build one from triplets.
    """

    n_rows: int
    n_cols: int
    row_offsets: np.ndarray
    col_indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        ro = np.ascontiguousarray(self.row_offsets, dtype=np.int64)
        ci = np.ascontiguousarray(self.col_indices, dtype=np.int64)
        va = np.ascontiguousarray(self.values, dtype=np.float64)
        if ro.shape != (self.n_rows + 1,):
            raise ValueError(f"row_offsets must have length {self.n_rows + 1}, got {ro.shape[0]}")
        if ro[0] != 0 or ro[-1] != ci.shape[0] or np.any(np.diff(ro) < 0):
            raise ValueError("row_offsets must start at 0, be nondecreasing and end at nnz")
        if ci.shape != va.shape:
            raise ValueError("col_indices and values must have the same length")
        if ci.size:
            if ci.min() < 0 or ci.max() >= self.n_cols:
                raise ValueError("column index out of range")
            # strictly increasing inside a row: a non-increase is only allowed at a row start
            nonincreasing = np.flatnonzero(np.diff(ci) <= 0) + 1
            row_starts = np.zeros(ci.size, dtype=bool)
            row_starts[ro[:-1][ro[:-1] < ci.size]] = True
            if np.any(~row_starts[nonincreasing]):
                raise ValueError("column indices must be strictly increasing within each row")
        if not np.all(np.isfinite(va)):
            raise ValueError("stored values must be finite")
        for name, arr in (("row_offsets", ro), ("col_indices", ci), ("values", va)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_coo(cls, n_rows, n_cols, rows, cols, vals, drop_zeros=False):
        """Assemble from triplets, summing duplicates."""
        rows = np.asarray(rows, dtype=np.int64).ravel()
        cols = np.asarray(cols, dtype=np.int64).ravel()
        vals = np.asarray(vals, dtype=np.float64).ravel()
        if not (rows.shape == cols.shape == vals.shape):
            raise ValueError("rows, cols and vals must have equal length")
        if rows.size and (rows.min() < 0 or rows.max() >= n_rows):
            raise ValueError("row index out of range")
        if cols.size and (cols.min() < 0 or cols.max() >= n_cols):
            raise ValueError("column index out of range")
        order = np.lexsort((cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
        if rows.size:
            new = np.ones(rows.size, dtype=bool)
            new[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
            starts = np.flatnonzero(new)
            vals = np.add.reduceat(vals, starts)
            rows, cols = rows[starts], cols[starts]
        if drop_zeros:
            keep = vals != 0
            rows, cols, vals = rows[keep], cols[keep], vals[keep]
        offsets = np.zeros(n_rows + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=n_rows), out=offsets[1:])
        return cls(n_rows, n_cols, offsets, cols, vals)

    @classmethod
    def _trusted(cls, n_rows, n_cols, row_offsets, col_indices, values):
        # skips validation; callers guarantee a valid structure
        obj = object.__new__(cls)
        for name, v in (("n_rows", n_rows), ("n_cols", n_cols), ("row_offsets", row_offsets),
                        ("col_indices", col_indices), ("values", values)):
            object.__setattr__(obj, name, v)
        return obj

    def with_values(self, values):
        """Same sparsity structure, new values (trusted to be finite)."""
        values = np.ascontiguousarray(values, dtype=np.float64)
        if values.shape != self.values.shape:
            raise ValueError("values must match the stored entry count")
        return SparseMatrix._trusted(self.n_rows, self.n_cols, self.row_offsets,
                                     self.col_indices, values)

    def transpose_with_perm(self):
        """Transpose plus ``perm`` such that ``T.values == self.values[perm]``."""
        rows = self.row_ids()
        perm = np.lexsort((rows, self.col_indices))
        offsets = np.zeros(self.n_cols + 1, dtype=np.int64)
        np.cumsum(np.bincount(self.col_indices, minlength=self.n_cols), out=offsets[1:])
        t = SparseMatrix(self.n_cols, self.n_rows, offsets, rows[perm], self.values[perm])
        return t, perm

    @classmethod
    def from_dense(cls, a):
        a = np.asarray(a, dtype=np.float64)
        r, c = np.nonzero(a)
        return cls.from_coo(a.shape[0], a.shape[1], r, c, a[r, c])

    @classmethod
    def identity(cls, n):
        idx = np.arange(n)
        return cls.from_coo(n, n, idx, idx, np.ones(n))

    @property
    def shape(self):
        return (self.n_rows, self.n_cols)

    @property
    def nnz(self):
        return int(self.col_indices.shape[0])

    def row_ids(self):
        return np.repeat(np.arange(self.n_rows, dtype=np.int64), np.diff(self.row_offsets))

    def to_dense(self):
        out = np.zeros(self.shape)
        out[self.row_ids(), self.col_indices] = self.values
        return out

    def transpose(self):
        return SparseMatrix.from_coo(self.n_cols, self.n_rows, self.col_indices,
                                     self.row_ids(), self.values)

    def diagonal(self):
        d = np.zeros(min(self.shape))
        r = self.row_ids()
        on = (r == self.col_indices) & (r < d.size)
        d[r[on]] = self.values[on]
        return d

    def row_sums(self):
        return np.bincount(self.row_ids(), weights=self.values, minlength=self.n_rows)

    def scale(self, left=None, right=None):
        """Return ``diag(left) @ self @ diag(right)``."""
        v = self.values.copy()
        if left is not None:
            v *= np.asarray(left, dtype=np.float64)[self.row_ids()]
        if right is not None:
            v *= np.asarray(right, dtype=np.float64)[self.col_indices]
        return SparseMatrix(self.n_rows, self.n_cols, self.row_offsets, self.col_indices, v)

    def add(self, other, alpha=1.0, beta=1.0):
        """Return ``alpha * self + beta * other`` (same shape)."""
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch: {self.shape} vs {other.shape}")
        rows = np.concatenate([self.row_ids(), other.row_ids()])
        cols = np.concatenate([self.col_indices, other.col_indices])
        vals = np.concatenate([alpha * self.values, beta * other.values])
        return SparseMatrix.from_coo(self.n_rows, self.n_cols, rows, cols, vals)

    def is_symmetric(self, tol=1e-12):
        if self.n_rows != self.n_cols:
            return False
        diff = self.add(self.transpose(), 1.0, -1.0)
        return diff.nnz == 0 or float(np.max(np.abs(diff.values))) <= tol

    def __matmul__(self, x):
        return spmm(self, x)


def spmm(a: SparseMatrix, x) -> np.ndarray:
    """Sparse-times-dense product ``a @ x``.

    A 1-D ``x`` is treated as a single column and a 1-D result is returned.
    """
    x = np.asarray(x, dtype=np.float64)
    vector = x.ndim == 1
    x2 = x.reshape(-1, 1) if vector else x
    if x2.ndim != 2 or x2.shape[0] != a.n_cols:
        raise ValueError(f"dimension mismatch: A is {a.n_rows}x{a.n_cols}, X is "
                         f"{'x'.join(map(str, x.shape))}")
    out = kernels.csr_spmm(a.row_offsets, a.col_indices, a.values, np.ascontiguousarray(x2))
    return out[:, 0] if vector else out


def spmm_add(a: SparseMatrix, x, b, beta):
    """``b + beta * (a @ x)`` for 2-D ``x`` and ``b``."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != a.n_cols or b.shape != (a.n_rows, x.shape[1]):
        raise ValueError(f"dimension mismatch: A is {a.n_rows}x{a.n_cols}, X is {x.shape}, "
                         f"B is {b.shape}")
    return kernels.csr_spmm_add(a.row_offsets, a.col_indices, a.values, x, b, float(beta))


class LaplacianKind(enum.Enum):
    UNNORMALIZED = "unnormalized"
    RANDOM_WALK = "random-walk"
    SYMMETRIC = "symmetric"
    RENORMALIZED_SYMMETRIC = "renormalized"

    @classmethod
    def parse(cls, name):
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("_", "-")
        aliases = {"sym": "symmetric", "rw": "random-walk", "renormalized-symmetric": "renormalized",
                   "renorm": "renormalized", "combinatorial": "unnormalized"}
        key = aliases.get(key, key)
        for kind in cls:
            if kind.value == key:
                return kind
        raise ValueError(f"unknown Laplacian kind {name!r}; expected one of "
                         f"{[k.value for k in cls]}")


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected graph with a symmetric nonnegative affinity matrix.

    ``degrees`` caches the adjacency row sums. Self-loops are not allowed in
    the stored adjacency; operators that need them add them explicitly.
    """

    n: int
    adjacency: SparseMatrix
    degrees: np.ndarray = field(default=None)

    def __post_init__(self):
        adj = self.adjacency
        if adj.shape != (self.n, self.n):
            raise GraphError(f"adjacency must be {self.n}x{self.n}, got {adj.shape}")
        if adj.nnz and adj.values.min() < 0:
            raise GraphError("edge weights must be nonnegative")
        if np.any(adj.diagonal() != 0):
            v = int(np.flatnonzero(adj.diagonal())[0])
            raise GraphError(f"self-loop at vertex {v}; self-loops are added only by renormalization")
        if not adj.is_symmetric(1e-12):
            raise GraphError("adjacency is not symmetric")
        deg = adj.row_sums()
        deg.setflags(write=False)
        object.__setattr__(self, "degrees", deg)

    @classmethod
    def from_edges(cls, n, src, dst, weights=None):
        """Build from an edge list.

        Repeated ``(i, j)`` pairs are summed; the two directions are then
        merged with ``max(w_ij, w_ji)``.
        """
        src = np.asarray(src, dtype=np.int64).ravel()
        dst = np.asarray(dst, dtype=np.int64).ravel()
        if weights is None:
            weights = np.ones(src.shape[0])
        weights = np.asarray(weights, dtype=np.float64).ravel()
        if src.shape != dst.shape or src.shape != weights.shape:
            raise GraphError("src, dst and weights must have equal length")
        if src.size:
            bad = (src < 0) | (src >= n) | (dst < 0) | (dst >= n)
            if bad.any():
                i = int(np.flatnonzero(bad)[0])
                raise GraphError(f"edge {i} ({src[i]}, {dst[i]}) references a vertex outside [0, {n})")
            if not np.all(np.isfinite(weights)):
                raise GraphError("edge weights must be finite")
            if weights.min() < 0:
                raise GraphError(f"negative edge weight at edge {int(np.argmin(weights))}")
            loops = np.flatnonzero(src == dst)
            if loops.size:
                raise GraphError(f"self-loop at vertex {src[loops[0]]} (edge {loops[0]})")
        directed = SparseMatrix.from_coo(n, n, src, dst, weights)
        rows = np.concatenate([directed.row_ids(), directed.col_indices])
        cols = np.concatenate([directed.col_indices, directed.row_ids()])
        vals = np.concatenate([directed.values, directed.values])
        # symmetrize by max: sort by (row, col, value) and keep the last of each pair
        order = np.lexsort((vals, cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
        last = np.ones(rows.size, dtype=bool)
        last[:-1] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
        rows, cols, vals = rows[last], cols[last], vals[last]
        keep = vals != 0
        adj = SparseMatrix.from_coo(n, n, rows[keep], cols[keep], vals[keep])
        return cls(n, adj)

    @classmethod
    def from_dense(cls, w):
        w = np.asarray(w, dtype=np.float64)
        return cls(w.shape[0], SparseMatrix.from_dense(w))

    @property
    def n_edges(self):
        """Number of undirected edges."""
        return self.adjacency.nnz // 2

    def isolated(self):
        return np.flatnonzero(self.degrees == 0)


def _normalizing_degrees(g: Graph, strict: bool):
    """Degrees for normalized operators; isolates get an implicit unit self-loop."""
    iso = g.isolated()
    if iso.size and strict:
        raise IsolatedVertexError(int(iso[0]))
    deg = np.array(g.degrees, dtype=np.float64)
    deg[iso] = 1.0
    return deg, iso


def symmetric_normalized_adjacency(g: Graph, strict: bool = False) -> SparseMatrix:
    """``D^{-1/2} W D^{-1/2}``; an isolated vertex maps to a unit diagonal entry."""
    deg, iso = _normalizing_degrees(g, strict)
    s = 1.0 / np.sqrt(deg)
    ws = g.adjacency.scale(s, s)
    if iso.size:
        ws = ws.add(SparseMatrix.from_coo(g.n, g.n, iso, iso, np.ones(iso.size)))
    return ws


def random_walk_adjacency(g: Graph, strict: bool = False) -> SparseMatrix:
    """``D^{-1} W`` with the same isolate convention."""
    deg, iso = _normalizing_degrees(g, strict)
    wr = g.adjacency.scale(1.0 / deg, None)
    if iso.size:
        wr = wr.add(SparseMatrix.from_coo(g.n, g.n, iso, iso, np.ones(iso.size)))
    return wr


def renormalized_adjacency(g: Graph) -> SparseMatrix:
    """``(D+I)^{-1/2} (W+I) (D+I)^{-1/2}``, the self-loop renormalized adjacency."""
    s = 1.0 / np.sqrt(g.degrees + 1.0)
    w_tilde = g.adjacency.add(SparseMatrix.identity(g.n))
    return w_tilde.scale(s, s)


def build_laplacian(g: Graph, kind=LaplacianKind.SYMMETRIC, strict: bool = False) -> SparseMatrix:
    """Graph Laplacian of the requested kind.

    ``UNNORMALIZED`` is ``D - W``; the normalized kinds are ``I`` minus the
    matching normalized adjacency, so isolated vertices get a zero row
    (implicit self-loop) unless ``strict`` is set.
    """
    kind = LaplacianKind.parse(kind)
    eye = SparseMatrix.identity(g.n)
    if kind is LaplacianKind.UNNORMALIZED:
        deg = SparseMatrix.from_coo(g.n, g.n, np.arange(g.n), np.arange(g.n), g.degrees)
        lap = deg.add(g.adjacency, 1.0, -1.0)
    elif kind is LaplacianKind.SYMMETRIC:
        lap = eye.add(symmetric_normalized_adjacency(g, strict), 1.0, -1.0)
    elif kind is LaplacianKind.RANDOM_WALK:
        lap = eye.add(random_walk_adjacency(g, strict), 1.0, -1.0)
    else:
        lap = eye.add(renormalized_adjacency(g), 1.0, -1.0)
    return _drop_zeros(lap)


def propagation_matrix(g: Graph, kind=LaplacianKind.SYMMETRIC, strict: bool = False) -> SparseMatrix:
    """The adjacency-side partner ``I - L`` of a normalized Laplacian kind."""
    kind = LaplacianKind.parse(kind)
    if kind is LaplacianKind.SYMMETRIC:
        return symmetric_normalized_adjacency(g, strict)
    if kind is LaplacianKind.RANDOM_WALK:
        return random_walk_adjacency(g, strict)
    if kind is LaplacianKind.RENORMALIZED_SYMMETRIC:
        return renormalized_adjacency(g)
    raise ValueError("the unnormalized Laplacian has no convergent propagation partner; "
                     "use a normalized kind or the exact solver")


def _drop_zeros(a: SparseMatrix) -> SparseMatrix:
    keep = a.values != 0
    if keep.all():
        return a
    return SparseMatrix.from_coo(a.n_rows, a.n_cols, a.row_ids()[keep], a.col_indices[keep],
                                 a.values[keep])
