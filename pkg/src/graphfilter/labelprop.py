"""Label propagation as AR filtering of the one-hot label matrix."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .filters import apply_ar, choose_truncation
from .sparse import Graph, LaplacianKind, build_laplacian, propagation_matrix
from .spectral import DEFAULT_CAP, OracleCapacityError


@dataclass(frozen=True)
class Prediction:
    Z: np.ndarray
    labels: np.ndarray


def one_hot(labels, n_classes: int) -> np.ndarray:
    """One-hot rows for labeled vertices, zero rows where the label is None or negative."""
    n = len(labels)
    y = np.zeros((n, n_classes))
    for i, c in enumerate(labels):
        if c is None or c < 0:
            continue
        if c >= n_classes:
            raise ValueError(f"label {c} at vertex {i} is out of range for {n_classes} classes")
        y[i, int(c)] = 1.0
    return y


def classify(z) -> np.ndarray:
    """Row-wise argmax; ties go to the lowest class index."""
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 2 or z.shape[1] < 1:
        raise ValueError(f"expected a 2-D score matrix with at least one column, got {z.shape}")
    return np.argmax(z, axis=1)


def propagate(g: Graph, y, alpha: float, kind=LaplacianKind.SYMMETRIC,
              k_override: Optional[int] = None, exact: bool = False,
              cap: int = DEFAULT_CAP) -> Prediction:
    """Solve ``(I + alpha L) Z = Y`` and classify by argmax.

    The default iterative mode runs the truncated series on the normalized
    adjacency paired with ``kind``. ``exact=True`` does a dense solve instead
    and is the only mode that accepts the unnormalized Laplacian.
    """
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 2 or y.shape[0] != g.n:
        raise ValueError(f"label matrix must have {g.n} rows, got shape {y.shape}")
    if not np.any(y):
        raise ValueError("label propagation needs at least one labeled vertex")
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    kind = LaplacianKind.parse(kind)
    if exact:
        if g.n > cap:
            raise OracleCapacityError(f"exact mode is limited to n <= {cap}, got n={g.n}")
        lap = build_laplacian(g, kind).to_dense()
        z = np.linalg.solve(np.eye(g.n) + alpha * lap, y)
    else:
        k = k_override if k_override is not None else choose_truncation(alpha)
        z, _ = apply_ar(propagation_matrix(g, kind), y, alpha, k)
    return Prediction(z, classify(z))
