"""Dense spectral reference for small graphs.

This is the verification side of the package: it eigendecomposes symmetric
Laplacians densely and builds filters straight from their frequency
responses, so the sparse filter paths can be checked against it.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .sparse import Graph, LaplacianKind, SparseMatrix, build_laplacian, spmm

DEFAULT_CAP = 4000


class OracleCapacityError(RuntimeError):
    """Problem too large for the dense oracle."""


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def n(self):
        return self.eigenvalues.shape[0]

    def reconstruct(self):
        return (self.eigenvectors * self.eigenvalues) @ self.eigenvectors.T


@dataclass(frozen=True)
class AR:
    """Auto-regressive response ``1 / (1 + alpha * lambda)``."""

    alpha: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"AR alpha must be positive, got {self.alpha}")


@dataclass(frozen=True)
class RNM:
    """Renormalization response ``(1 - lambda) ** k``."""

    k: int

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 0:
            raise ValueError(f"RNM k must be a nonnegative integer, got {self.k}")


def _dense(a):
    return a.to_dense() if isinstance(a, SparseMatrix) else np.asarray(a, dtype=np.float64)


def eigendecompose(lap, cap: int = DEFAULT_CAP, tol: float = 1e-10) -> Spectrum:
    """Eigendecomposition of a symmetric matrix, eigenvalues ascending.

    Each eigenvector is sign-normalized so that its first entry of magnitude
    above 1e-12 is positive. Within a cluster of eigenvalues closer than
    ``tol`` the vectors are ordered by the index of that first entry.
    """
    n = lap.shape[0]
    if lap.shape[0] != lap.shape[1]:
        raise ValueError(f"matrix must be square, got {lap.shape}")
    if n > cap:
        raise OracleCapacityError(
            f"n={n} exceeds the dense oracle cap of {cap}; the oracle is meant for "
            "verification-scale graphs"
        )
    a = _dense(lap)
    asym = float(np.max(np.abs(a - a.T))) if n else 0.0
    if asym > tol:
        raise ValueError(f"matrix is not symmetric (max |A - A^T| = {asym:.3e})")
    a = 0.5 * (a + a.T)
    vals, vecs = np.linalg.eigh(a)

    first = np.argmax(np.abs(vecs) > 1e-12, axis=0)
    signs = np.sign(vecs[first, np.arange(n)])
    signs[signs == 0] = 1.0
    vecs = vecs * signs

    order = np.arange(n)
    start = 0
    while start < n:
        stop = start + 1
        while stop < n and vals[stop] - vals[stop - 1] <= tol:
            stop += 1
        if stop - start > 1:
            block = order[start:stop]
            order[start:stop] = block[np.argsort(first[block], kind="stable")]
        start = stop
    return Spectrum(vals[order], vecs[:, order])


def response(fn, lam):
    """Evaluate a frequency response at ``lam`` (scalar or array)."""
    lam_arr = np.asarray(lam, dtype=np.float64)
    if not np.all(np.isfinite(lam_arr)):
        raise ValueError("lambda must be finite")
    if isinstance(fn, AR):
        denom = 1.0 + fn.alpha * lam_arr
        if np.any(np.abs(denom) <= 1e-12):
            raise ZeroDivisionError(f"AR response has a pole at lambda = {-1.0 / fn.alpha}")
        out = 1.0 / denom
    elif isinstance(fn, RNM):
        out = (1.0 - lam_arr) ** int(fn.k)
    else:
        raise TypeError(f"unsupported response {fn!r}")
    return float(out) if np.ndim(lam) == 0 else out


def exact_filter_matrix(lap, fn, cap: int = DEFAULT_CAP) -> np.ndarray:
    """Dense ``Phi p(Lambda) Phi^T`` for a symmetric Laplacian."""
    spec = eigendecompose(lap, cap=cap)
    p = response(fn, spec.eigenvalues)
    g = (spec.eigenvectors * p) @ spec.eigenvectors.T
    return 0.5 * (g + g.T)


def smoothness(lap, f) -> float:
    """Quadratic form ``f^T L f``."""
    f = np.asarray(f, dtype=np.float64)
    if f.shape != (lap.shape[0],):
        raise ValueError(f"signal length {f.shape} does not match Laplacian size {lap.shape[0]}")
    lf = spmm(lap, f) if isinstance(lap, SparseMatrix) else np.asarray(lap) @ f
    return float(f @ lf)


def fourier_coefficients(spec: Spectrum, f) -> np.ndarray:
    """Coefficients ``c`` with ``f = Phi c`` (orthonormal basis)."""
    f = np.asarray(f, dtype=np.float64)
    if f.shape[0] != spec.n:
        raise ValueError(f"signal length {f.shape[0]} does not match spectrum size {spec.n}")
    return spec.eigenvectors.T @ f


def connected_components(g: Graph) -> list[np.ndarray]:
    """Vertex sets of the connected components, by BFS from the lowest unvisited vertex."""
    ro, ci = g.adjacency.row_offsets, g.adjacency.col_indices
    comp = np.full(g.n, -1, dtype=np.int64)
    out = []
    for root in range(g.n):
        if comp[root] >= 0:
            continue
        label = len(out)
        comp[root] = label
        members = [root]
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for v in ci[ro[u]:ro[u + 1]]:
                if comp[v] < 0:
                    comp[v] = label
                    members.append(int(v))
                    queue.append(v)
        out.append(np.sort(np.asarray(members, dtype=np.int64)))
    return out


def induced_subgraph(g: Graph, vertices) -> Graph:
    vertices = np.asarray(vertices, dtype=np.int64)
    pos = np.full(g.n, -1, dtype=np.int64)
    pos[vertices] = np.arange(vertices.size)
    r, c, v = g.adjacency.row_ids(), g.adjacency.col_indices, g.adjacency.values
    keep = (pos[r] >= 0) & (pos[c] >= 0)
    adj = SparseMatrix.from_coo(vertices.size, vertices.size, pos[r[keep]], pos[c[keep]], v[keep])
    return Graph(vertices.size, adj)


def _lambda_max(g: Graph, kind, cap):
    if g.n == 0:
        return 0.0
    return float(eigendecompose(build_laplacian(g, kind), cap=cap).eigenvalues[-1])


@dataclass(frozen=True)
class BoundCheck:
    lambda_max: float
    lambda_tilde_max: float
    global_bound: float
    component_bound: float
    holds: bool


def _shrink(d, lam):
    return d / (d + 1.0) * lam


def eigenvalue_bound_check(g: Graph, cap: int = DEFAULT_CAP, tol: float = 1e-10) -> BoundCheck:
    """Compare the largest renormalized eigenvalue with the degree-based bounds.

    The global bound is ``d_m / (d_m + 1) * lambda_m`` over the whole graph;
    the component bound takes the maximum of the same quantity over connected
    components, which can only be smaller.
    """
    lam = _lambda_max(g, LaplacianKind.SYMMETRIC, cap)
    lam_t = _lambda_max(g, LaplacianKind.RENORMALIZED_SYMMETRIC, cap)
    d_m = float(g.degrees.max()) if g.n else 0.0
    global_bound = _shrink(d_m, lam)
    component_bound = 0.0
    for members in connected_components(g):
        if members.size < 2:
            continue
        sub = induced_subgraph(g, members)
        component_bound = max(component_bound,
                              _shrink(float(sub.degrees.max()),
                                      _lambda_max(sub, LaplacianKind.SYMMETRIC, cap)))
    holds = lam_t <= component_bound + tol and component_bound <= global_bound + tol
    return BoundCheck(lam, lam_t, global_bound, component_bound, bool(holds))


def similarity_check_random_walk(g: Graph, tol: float = 1e-10) -> bool:
    """Check ``D^{1/2} L_rw D^{-1/2} == L_sym``, the route by which the
    random-walk Laplacian inherits the symmetric spectrum."""
    deg = np.array(g.degrees, dtype=np.float64)
    deg[deg == 0] = 1.0
    l_rw = build_laplacian(g, LaplacianKind.RANDOM_WALK).to_dense()
    l_s = build_laplacian(g, LaplacianKind.SYMMETRIC).to_dense()
    sq = np.sqrt(deg)
    return bool(np.max(np.abs(sq[:, None] * l_rw / sq[None, :] - l_s), initial=0.0) <= tol)

