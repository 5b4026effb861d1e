"""Sparse low-pass graph filters for label-efficient semi-supervised learning.

Generalized label propagation (filter the features, then fit any classifier)
and the IGCN network, together with a dense spectral oracle for checking the
filters on small graphs.
"""
from .filters import (
    ARFilter,
    FilterReport,
    IdentityFilter,
    RNMFilter,
    apply_ar,
    apply_filter,
    apply_rnm,
    choose_truncation,
)
from .kernels import BACKEND
from .sparse import (
    Graph,
    LaplacianKind,
    SparseMatrix,
    build_laplacian,
    renormalized_adjacency,
    spmm,
    symmetric_normalized_adjacency,
)

__version__ = "0.1.0"

__all__ = [
    "ARFilter", "BACKEND", "FilterReport", "Graph", "IdentityFilter", "LaplacianKind",
    "RNMFilter", "SparseMatrix", "apply_ar", "apply_filter", "apply_rnm",
    "build_laplacian", "choose_truncation", "renormalized_adjacency", "spmm",
    "symmetric_normalized_adjacency",
]
