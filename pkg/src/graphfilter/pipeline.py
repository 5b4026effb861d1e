"""Split generation, single runs and multi-split benchmarks.

A run with split seed ``s`` draws its labeled set from ``stream(s, "split")``
and its network initialization/dropout from ``MlpConfig.seed = s``, so a
benchmark over seeds ``base..base+n-1`` is reproducible run by run.
"""
from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .dataio import Dataset, format_real
from .filters import ARFilter, FilterSpec, IdentityFilter, RNMFilter, apply_filter
from .labelprop import one_hot, propagate
from .neural import IgcnConfig, MlpConfig, predict_logits, train
from .rng import stream
from .sparse import LaplacianKind


class SplitError(ValueError):
    pass


@dataclass(frozen=True)
class SplitSpec:
    seed: int
    labeled: np.ndarray
    test: np.ndarray
    labels_per_class: Optional[int] = None
    label_fraction: Optional[float] = None


def make_split(labels, labels_per_class=None, label_fraction=None, seed=0) -> SplitSpec:
    """Class-stratified random labeled set; every other labeled vertex is test.

    Vertices with a negative label are never used. In fraction mode each
    class contributes ``max(1, round(fraction * class_size))`` vertices.
    """
    if (labels_per_class is None) == (label_fraction is None):
        raise SplitError("give exactly one of labels_per_class or label_fraction")
    labels = np.asarray(labels, dtype=np.int64)
    rng = stream(seed, "split")
    classes = np.unique(labels[labels >= 0])
    chosen = []
    for c in classes:
        members = np.flatnonzero(labels == c)
        if labels_per_class is not None:
            take = int(labels_per_class)
        else:
            take = max(1, int(round(label_fraction * members.size)))
        if take < 1:
            raise SplitError("labels per class must be >= 1")
        if members.size < take:
            raise SplitError(f"class {c} has {members.size} members, fewer than the "
                             f"{take} labels requested")
        chosen.append(rng.choice(members, size=take, replace=False))
    labeled = np.sort(np.concatenate(chosen)) if chosen else np.zeros(0, dtype=np.int64)
    mask = labels >= 0
    mask[labeled] = False
    return SplitSpec(int(seed), labeled, np.flatnonzero(mask), labels_per_class, label_fraction)


def default_filter_strength(labels_per_class=None, label_fraction=None):
    """``(k, alpha)`` for GLP: ``(5, 10)`` with >= 20 labels/class or >= 10%
    label rate, ``(10, 20)`` otherwise."""
    if labels_per_class is None and label_fraction is None:
        raise ValueError("give labels_per_class or label_fraction")
    if labels_per_class is not None and labels_per_class < 1:
        raise ValueError("labels_per_class must be >= 1")
    high = ((labels_per_class is not None and labels_per_class >= 20)
            or (label_fraction is not None and label_fraction >= 0.1))
    return (5, 10.0) if high else (10, 20.0)


def igcn_k_per_layer(k_total: int) -> int:
    """Per-layer power for a two-layer IGCN: ``max(1, k_total // 2)``."""
    if k_total < 1:
        raise ValueError("k_total must be >= 1")
    return max(1, int(k_total) // 2)


@dataclass(frozen=True)
class RunResult:
    model: str
    filter: str
    k: Optional[int]
    alpha: Optional[float]
    split_seed: int
    accuracy: float
    wall_time: float
    filter_time: float = 0.0
    filter_applications: int = 0


def _accuracy(pred, labels, test):
    if test.size == 0:
        raise SplitError("the test set is empty")
    return float(np.mean(pred[test] == labels[test]))


def _filter_fields(spec):
    if isinstance(spec, RNMFilter):
        return "rnm", spec.k, None
    if isinstance(spec, ARFilter):
        return "ar", spec.k_override, spec.alpha
    return "none", None, None


def run_glp(ds: Dataset, split: SplitSpec, spec: FilterSpec, config: MlpConfig,
            model_name=None) -> RunResult:
    """Filter the features once, train an MLP on labeled rows, score the test rows."""
    if split.test.size == 0:
        raise SplitError("the test set is empty")
    t0 = time.perf_counter()
    xbar, report = apply_filter(ds.graph, ds.features, spec)
    t_filter = time.perf_counter() - t0
    y = one_hot(ds.labels, ds.n_classes)
    model = train("mlp", None, xbar, y, split.labeled, config)
    pred = np.argmax(predict_logits(model, xbar[split.test]), axis=1)
    elapsed = time.perf_counter() - t0
    acc = float(np.mean(pred == ds.labels[split.test]))
    name, k, alpha = _filter_fields(spec)
    if name == "ar" and k is None:
        k = report.iterations_used
    if model_name is None:
        model_name = "mlp" if name == "none" else "glp"
    return RunResult(model_name, name, k, alpha, split.seed, acc, elapsed, t_filter,
                     0 if name == "none" else 1)


def run_igcn(ds: Dataset, split: SplitSpec, k_total: int, config: MlpConfig) -> RunResult:
    k_layer = igcn_k_per_layer(k_total)
    cfg = IgcnConfig(**{**vars(config), "k_per_layer": k_layer}) if not isinstance(
        config, IgcnConfig) else replace(config, k_per_layer=k_layer)
    if split.test.size == 0:
        raise SplitError("the test set is empty")
    t0 = time.perf_counter()
    y = one_hot(ds.labels, ds.n_classes)
    model = train("igcn", ds.graph, ds.features, y, split.labeled, cfg)
    pred = np.argmax(predict_logits(model, ds.features, ds.graph), axis=1)
    elapsed = time.perf_counter() - t0
    return RunResult("igcn", "rnm", k_layer, None, split.seed,
                     _accuracy(pred, ds.labels, split.test), elapsed)


def run_lp(ds: Dataset, split: SplitSpec, alpha: float = 100.0,
           kind=LaplacianKind.SYMMETRIC) -> RunResult:
    if split.test.size == 0:
        raise SplitError("the test set is empty")
    t0 = time.perf_counter()
    seeds = np.full(ds.n, -1, dtype=np.int64)
    seeds[split.labeled] = ds.labels[split.labeled]
    pred = propagate(ds.graph, one_hot(seeds, ds.n_classes), alpha, kind)
    elapsed = time.perf_counter() - t0
    return RunResult("lp", "ar", None, float(alpha), split.seed,
                     _accuracy(pred.labels, ds.labels, split.test), elapsed)


@dataclass
class Task:
    """Everything needed to run one configuration on one split."""

    model: str
    filter: FilterSpec = field(default_factory=IdentityFilter)
    labels_per_class: Optional[int] = None
    label_fraction: Optional[float] = None
    k_total: int = 2
    lp_alpha: float = 100.0
    lp_kind: LaplacianKind = LaplacianKind.SYMMETRIC
    neural: MlpConfig = field(default_factory=MlpConfig)

    def run(self, ds: Dataset, seed: int) -> RunResult:
        split = make_split(ds.labels, self.labels_per_class, self.label_fraction, seed)
        cfg = replace(self.neural, seed=seed)
        model = self.model.lower()
        if model in ("glp", "mlp"):
            spec = IdentityFilter() if model == "mlp" else self.filter
            return run_glp(ds, split, spec, cfg)
        if model == "igcn":
            return run_igcn(ds, split, self.k_total, cfg)
        if model == "lp":
            return run_lp(ds, split, self.lp_alpha, self.lp_kind)
        raise ValueError(f"unknown model {self.model!r}")


@dataclass(frozen=True)
class BenchmarkSummary:
    mean_accuracy: float
    std_accuracy: float
    mean_time: float
    n_runs: int
    runs: tuple = ()

    def line(self):
        return (f"runs={self.n_runs} mean_accuracy={self.mean_accuracy:.4f} "
                f"std_accuracy={self.std_accuracy:.4f} mean_seconds={self.mean_time:.4f}")


class RunFailed(RuntimeError):
    def __init__(self, index, seed, exc):
        super().__init__(f"run {index} (split seed {seed}) failed: {exc}")
        self.index, self.seed = index, seed


def benchmark(ds: Dataset, task: Task, n_runs: int, base_seed: int = 0,
              jobs: int = 1) -> BenchmarkSummary:
    """Run ``task`` on split seeds ``base_seed + 0 .. n_runs - 1`` and aggregate.

    Results are ordered by seed whatever the completion order; the standard
    deviation is the sample one (0 for a single run).
    """
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    seeds = [base_seed + i for i in range(n_runs)]

    def one(i):
        try:
            return task.run(ds, seeds[i])
        except Exception as exc:
            raise RunFailed(i, seeds[i], exc) from exc

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(one, range(n_runs)))
    else:
        results = [one(i) for i in range(n_runs)]
    results.sort(key=lambda r: r.split_seed)
    acc = np.array([r.accuracy for r in results])
    std = float(np.std(acc, ddof=1)) if n_runs > 1 else 0.0
    return BenchmarkSummary(float(acc.mean()), std, float(np.mean([r.wall_time for r in results])),
                            n_runs, tuple(results))


RESULT_COLUMNS = ("model", "filter", "k", "alpha", "split_seed", "accuracy")


def write_results_csv(results, fh, with_times=False):
    """Per-run CSV; ``seconds`` is appended only when ``with_times`` is set
    because wall times differ between otherwise identical runs."""
    cols = RESULT_COLUMNS + (("seconds",) if with_times else ())
    fh.write(",".join(cols) + "\n")
    for r in results:
        row = [r.model, r.filter, "" if r.k is None else str(r.k),
               "" if r.alpha is None else format_real(r.alpha), str(r.split_seed),
               format_real(r.accuracy)]
        if with_times:
            row.append(format_real(r.wall_time))
        fh.write(",".join(row) + "\n")
