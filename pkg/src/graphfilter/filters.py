"""Sparse low-pass filters applied to feature or label matrices.

Two filters are provided. The auto-regressive filter ``(I + alpha L_s)^{-1}``
is evaluated as a truncated Neumann series in the normalized adjacency
``W_s = I - L_s``. The renormalization filter ``W~_s^k`` is evaluated as
``k`` repeated sparse products. Neither densifies the graph operator.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .sparse import (
    Graph,
    SparseMatrix,
    renormalized_adjacency,
    spmm,
    spmm_add,
    symmetric_normalized_adjacency,
)

TRUNCATION_FACTOR = 4.0


@dataclass(frozen=True)
class ARFilter:
    alpha: float
    k_override: Optional[int] = None

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.k_override is not None and (int(self.k_override) != self.k_override
                                            or self.k_override < 1):
            raise ValueError(f"k_override must be a positive integer, got {self.k_override}")

    @property
    def name(self):
        return "ar"


@dataclass(frozen=True)
class RNMFilter:
    k: int

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 0:
            raise ValueError(f"k must be a nonnegative integer, got {self.k}")

    @property
    def name(self):
        return "rnm"


@dataclass(frozen=True)
class IdentityFilter:
    @property
    def name(self):
        return "none"


FilterSpec = Union[ARFilter, RNMFilter, IdentityFilter]


@dataclass(frozen=True)
class FilterReport:
    iterations_used: int
    truncation_bound: Optional[float]
    wall_time: float

    def line(self):
        bound = "na" if self.truncation_bound is None else f"{self.truncation_bound:.6g}"
        return f"iterations={self.iterations_used} truncation_bound={bound} seconds={self.wall_time:.6f}"


def choose_truncation(alpha: float, factor: float = TRUNCATION_FACTOR) -> int:
    """Default number of series terms, ``ceil(4 * alpha)``."""
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    return max(1, math.ceil(factor * alpha))


def ar_truncation_bound(alpha: float, k: int) -> float:
    """``(alpha / (1 + alpha)) ** (k + 1)``: relative operator-norm error after ``k`` products."""
    return (alpha / (1.0 + alpha)) ** (k + 1)


def _check_rows(a: SparseMatrix, x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] != a.n_cols or a.n_rows != a.n_cols:
        raise ValueError(f"operator is {a.n_rows}x{a.n_cols} but X has shape {x.shape}")
    return np.ascontiguousarray(x)


def apply_ar(w_norm: SparseMatrix, x, alpha: float, k: int):
    """Approximate ``(I + alpha (I - W))^{-1} X`` with ``k`` sparse products.

    Runs ``X' <- X + beta W X'`` starting from ``X' = X`` with
    ``beta = alpha / (1 + alpha)`` and returns ``X' / (1 + alpha)``, i.e. the
    series truncated after the ``W^k`` term. When ``||W||_2 <= 1`` the
    spectral-norm error is at most ``beta ** (k + 1) * ||X||_2``.
    """
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if int(k) != k or k < 0:
        raise ValueError(f"k must be a nonnegative integer, got {k}")
    x = _check_rows(w_norm, x)
    t0 = time.perf_counter()
    beta = alpha / (1.0 + alpha)
    acc = x
    for _ in range(int(k)):
        acc = spmm_add(w_norm, acc, x, beta)
    out = acc / (1.0 + alpha)
    report = FilterReport(int(k), ar_truncation_bound(alpha, int(k)), time.perf_counter() - t0)
    return out, report


def apply_rnm(w_tilde_s: SparseMatrix, x, k: int):
    """``W~_s^k X`` by ``k`` successive sparse products; ``k = 0`` returns a copy of ``X``."""
    if int(k) != k or k < 0:
        raise ValueError(f"k must be a nonnegative integer, got {k}")
    x = _check_rows(w_tilde_s, x)
    t0 = time.perf_counter()
    out = x.copy()
    for _ in range(int(k)):
        out = spmm(w_tilde_s, out)
    return out, FilterReport(int(k), None, time.perf_counter() - t0)


def apply_filter(g: Graph, x, spec: FilterSpec, strict: bool = False):
    """Filter ``X`` on ``g``; returns ``(X_bar, FilterReport)``."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] != g.n:
        raise ValueError(f"graph has {g.n} vertices but X has {x.shape[0]} rows")
    if isinstance(spec, IdentityFilter):
        return x.copy(), FilterReport(0, None, 0.0)
    if isinstance(spec, RNMFilter):
        t0 = time.perf_counter()
        op = renormalized_adjacency(g)
        out, rep = apply_rnm(op, x, spec.k)
        return out, FilterReport(rep.iterations_used, None, time.perf_counter() - t0)
    if isinstance(spec, ARFilter):
        t0 = time.perf_counter()
        k = spec.k_override if spec.k_override is not None else choose_truncation(spec.alpha)
        op = symmetric_normalized_adjacency(g, strict=strict)
        out, rep = apply_ar(op, x, spec.alpha, k)
        return out, FilterReport(rep.iterations_used, rep.truncation_bound,
                                 time.perf_counter() - t0)
    raise TypeError(f"unsupported filter spec {spec!r}")


def parse_filter(name: str, k=None, alpha=None) -> FilterSpec:
    """Build a spec from CLI-style values (``rnm`` / ``ar`` / ``none``)."""
    key = (name or "none").strip().lower()
    if key in ("none", "identity", "id"):
        return IdentityFilter()
    if key == "rnm":
        if k is None:
            raise ValueError("the rnm filter needs k")
        return RNMFilter(int(k))
    if key == "ar":
        if alpha is None:
            raise ValueError("the ar filter needs alpha")
        return ARFilter(float(alpha), None if k is None else int(k))
    raise ValueError(f"unknown filter {name!r}; expected rnm, ar or none")
