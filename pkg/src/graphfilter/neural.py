"""Two-layer MLP and IGCN with hand-written backpropagation.

Both models are bias-free two-layer networks trained full-batch with Adam on
a masked softmax cross-entropy. IGCN multiplies each layer's projection by
the renormalized adjacency ``k`` times (never forming the matrix power);
with ``k = 1`` it is the plain two-layer GCN.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .rng import stream
from .sparse import Graph, SparseMatrix, renormalized_adjacency, spmm


class TrainingDiverged(FloatingPointError):
    def __init__(self, step, what="loss"):
        super().__init__(f"non-finite {what} at step {step}")
        self.step = step


@dataclass
class MlpConfig:
    hidden_units: int = 16
    learning_rate: float = 0.01
    dropout_rate: float = 0.5
    l2_weight: float = 5e-4
    steps: int = 200
    seed: int = 0
    l2_scope: str = "first"

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must lie in [0, 1)")
        if self.l2_weight < 0:
            raise ValueError("l2_weight must be nonnegative")
        if self.hidden_units < 1:
            raise ValueError("hidden_units must be >= 1")
        if self.l2_scope not in ("first", "all"):
            raise ValueError("l2_scope must be 'first' or 'all'")


@dataclass
class IgcnConfig(MlpConfig):
    k_per_layer: int = 1

    def __post_init__(self):
        super().__post_init__()
        if self.k_per_layer < 1:
            raise ValueError("k_per_layer must be >= 1")


@dataclass
class TrainedModel:
    weights: list
    best_step: int
    best_train_loss: float
    kind: str
    k: Optional[int] = None
    loss_history: list = field(default_factory=list)


def glorot(rng, fan_in, fan_out):
    r = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-r, r, size=(fan_in, fan_out))


def init_weights(n_in, hidden, n_out, rng):
    return [glorot(rng, n_in, hidden), glorot(rng, hidden, n_out)]


def softmax(logits):
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def softmax_cross_entropy(logits, y, labeled_rows):
    """Mean cross-entropy over ``labeled_rows`` and its gradient w.r.t. ``logits``.

    ``y`` is a one-hot matrix (or a class-index vector). Unlabeled rows get a
    zero gradient.
    """
    logits = np.asarray(logits, dtype=np.float64)
    rows = np.asarray(labeled_rows, dtype=np.int64)
    if rows.size == 0:
        raise ValueError("cross-entropy needs at least one labeled row")
    y = np.asarray(y)
    target = np.argmax(y[rows], axis=1) if y.ndim == 2 else y[rows].astype(np.int64)
    z = logits[rows]
    z = z - z.max(axis=1, keepdims=True)
    logsum = np.log(np.exp(z).sum(axis=1))
    loss = float(np.mean(logsum - z[np.arange(rows.size), target]))
    p = np.exp(z - logsum[:, None])
    p[np.arange(rows.size), target] -= 1.0
    dlogits = np.zeros_like(logits)
    dlogits[rows] = p / rows.size
    return loss, dlogits


def _propagate(op, x, k):
    for _ in range(k):
        x = spmm(op, x)
    return x


class SparseFeatures:
    """Sparse input matrix with its transpose, for dropout on stored entries only."""

    def __init__(self, x: SparseMatrix):
        self.x = x
        self.t, self.perm = x.transpose_with_perm()

    @property
    def shape(self):
        return self.x.shape

    def rows(self, idx):
        dense = self.x.to_dense()[np.asarray(idx)]
        return SparseFeatures(SparseMatrix.from_dense(dense))

    def dropped(self, mask):
        if mask is None:
            return self.x, self.t
        v = self.x.values * mask
        return self.x.with_values(v), self.t.with_values(v[self.perm])


def as_features(x, density_threshold=0.1):
    """Dense array, or :class:`SparseFeatures` when ``x`` is sparse or mostly zero."""
    if isinstance(x, SparseFeatures):
        return x
    if isinstance(x, SparseMatrix):
        return SparseFeatures(x)
    x = np.asarray(x, dtype=np.float64)
    if x.size and np.count_nonzero(x) <= density_threshold * x.size:
        return SparseFeatures(SparseMatrix.from_dense(x))
    return x


def _project(x, t0, m0):
    """Return ``(cache_entry, dropout(X) @ T0)``."""
    if isinstance(x, SparseFeatures):
        xd, xdt = x.dropped(m0)
        return xdt, spmm(xd, t0)
    x = np.asarray(x, dtype=np.float64)
    xd = x if m0 is None else x * m0
    return xd.T, xd @ t0


def _shape(x):
    return x.shape if isinstance(x, SparseFeatures) else np.shape(x)


def _project_grad(xdt, d):
    return spmm(xdt, d) if isinstance(xdt, SparseMatrix) else xdt @ d


def mlp_forward(weights, x, dropout_mask=None):
    """``ReLU(X T0) T1``; ``dropout_mask`` is a pair of inverted-dropout masks or None.

    ``x`` may be dense or :class:`SparseFeatures`; for the latter the first
    mask covers the stored entries only.
    """
    t0, t1 = weights
    if isinstance(x, SparseMatrix):
        x = SparseFeatures(x)
    if _shape(x)[1] != t0.shape[0] or t0.shape[1] != t1.shape[0]:
        raise ValueError(f"shape mismatch: X {_shape(x)}, T0 {t0.shape}, T1 {t1.shape}")
    m0, m1 = dropout_mask if dropout_mask is not None else (None, None)
    xdt, a0 = _project(x, t0, m0)
    h = np.maximum(a0, 0.0)
    hd = h if m1 is None else h * m1
    logits = hd @ t1
    return logits, {"xdt": xdt, "pre": a0, "hd": hd, "m1": m1}


def mlp_backward(weights, cache, dlogits):
    t0, t1 = weights
    g1 = cache["hd"].T @ dlogits
    dh = dlogits @ t1.T
    if cache["m1"] is not None:
        dh = dh * cache["m1"]
    dpre = dh * (cache["pre"] > 0)
    g0 = _project_grad(cache["xdt"], dpre)
    return [g0, g1]


def _operator(g):
    return g if isinstance(g, SparseMatrix) else renormalized_adjacency(g)


def igcn_forward(g, weights, x, k, dropout_mask=None):
    """``W~^k ReLU(W~^k X T0) T1`` with ``W~`` the renormalized adjacency.

    ``g`` may be a :class:`Graph` or a precomputed symmetric operator.
    """
    if int(k) != k or k < 1:
        raise ValueError(f"k must be a positive integer, got {k}")
    op = _operator(g)
    t0, t1 = weights
    if isinstance(x, SparseMatrix):
        x = SparseFeatures(x)
    xs = _shape(x)
    if xs[0] != op.n_rows or xs[1] != t0.shape[0] or t0.shape[1] != t1.shape[0]:
        raise ValueError(f"shape mismatch: graph {op.n_rows}, X {xs}, T0 {t0.shape}, "
                         f"T1 {t1.shape}")
    m0, m1 = dropout_mask if dropout_mask is not None else (None, None)
    xdt, a0 = _project(x, t0, m0)
    pre = _propagate(op, a0, k)
    h = np.maximum(pre, 0.0)
    hd = h if m1 is None else h * m1
    logits = _propagate(op, hd @ t1, k)
    return logits, {"op": op, "k": int(k), "xdt": xdt, "pre": pre, "hd": hd, "m1": m1}


def igcn_backward(weights, cache, dlogits):
    # the operator is symmetric, so its transpose power is itself
    t0, t1 = weights
    op, k = cache["op"], cache["k"]
    da1 = _propagate(op, dlogits, k)
    g1 = cache["hd"].T @ da1
    dh = da1 @ t1.T
    if cache["m1"] is not None:
        dh = dh * cache["m1"]
    dpre = dh * (cache["pre"] > 0)
    g0 = _project_grad(cache["xdt"], _propagate(op, dpre, k))
    return [g0, g1]


def _l2(weights, l2_weight, scope):
    n = 1 if scope == "first" else len(weights)
    loss = sum(0.5 * l2_weight * float(np.sum(w * w)) for w in weights[:n])
    grads = [l2_weight * w if i < n else np.zeros_like(w) for i, w in enumerate(weights)]
    return loss, grads


class _Objective:
    """Bundles a model's forward/backward with its data and penalty."""

    def __init__(self, kind, x, y, labeled_rows, l2_weight, l2_scope, op=None, k=1):
        self.kind = kind
        self.rows = np.asarray(labeled_rows, dtype=np.int64)
        self.l2_weight = l2_weight
        self.l2_scope = l2_scope
        self.op, self.k = op, k
        y = np.asarray(y, dtype=np.float64)
        if kind == "mlp":
            # only labeled rows take part in MLP training
            if isinstance(x, (SparseMatrix, SparseFeatures)):
                x = as_features(x).x.to_dense()
            self.x = as_features(np.asarray(x, dtype=np.float64)[self.rows])
            self.y = y[self.rows]
            self.loss_rows = np.arange(self.rows.size)
        else:
            self.x = as_features(x)
            self.y = y
            self.loss_rows = self.rows

    def forward(self, weights, masks=None):
        if self.kind == "mlp":
            return mlp_forward(weights, self.x, masks)
        return igcn_forward(self.op, weights, self.x, self.k, masks)

    def loss(self, weights, masks=None):
        logits, _ = self.forward(weights, masks)
        ce, _ = softmax_cross_entropy(logits, self.y, self.loss_rows)
        pen, _ = _l2(weights, self.l2_weight, self.l2_scope)
        return ce + pen

    def loss_and_grads(self, weights, masks=None):
        logits, cache = self.forward(weights, masks)
        ce, dlogits = softmax_cross_entropy(logits, self.y, self.loss_rows)
        back = mlp_backward if self.kind == "mlp" else igcn_backward
        grads = back(weights, cache, dlogits)
        pen, pgrads = _l2(weights, self.l2_weight, self.l2_scope)
        return ce + pen, [g + p for g, p in zip(grads, pgrads)]

    def masks(self, rng, rate, hidden):
        if rate == 0.0:
            return None
        keep = 1.0 - rate
        n = _shape(self.x)[0]
        shape0 = (self.x.x.nnz,) if isinstance(self.x, SparseFeatures) else self.x.shape
        m0 = (rng.random(shape0) < keep) / keep
        m1 = (rng.random((n, hidden)) < keep) / keep
        return m0, m1


class Adam:
    def __init__(self, params, lr=0.01, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1 ** self.t
        c2 = 1.0 - b2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def _as_one_hot(y, n_classes=None):
    y = np.asarray(y)
    if y.ndim == 2:
        return y.astype(np.float64)
    n_classes = n_classes or int(y.max()) + 1
    out = np.zeros((y.shape[0], n_classes))
    ok = y >= 0
    out[np.flatnonzero(ok), y[ok].astype(np.int64)] = 1.0
    return out


def train(model_kind, g, x, y, labeled_rows, config: MlpConfig) -> TrainedModel:
    """Full-batch Adam training with model selection by training loss.

    After every update the loss (cross-entropy plus L2 penalty, dropout off)
    of the new weights is recorded; the returned weights are those with the
    lowest such loss among steps ``1..config.steps``. ``loss_history[0]`` is
    the loss at initialization.
    """
    kind = model_kind.lower()
    if kind not in ("mlp", "igcn"):
        raise ValueError(f"unknown model kind {model_kind!r}")
    y1 = _as_one_hot(y)
    x = as_features(x)
    if _shape(x)[0] != y1.shape[0]:
        raise ValueError(f"X has {_shape(x)[0]} rows but Y has {y1.shape[0]}")
    k = None
    op = None
    if kind == "igcn":
        if g is None:
            raise ValueError("IGCN needs a graph")
        k = getattr(config, "k_per_layer", 1)
        op = _operator(g)
    obj = _Objective(kind, x, y1, labeled_rows, config.l2_weight, config.l2_scope, op, k)

    weights = init_weights(_shape(x)[1], config.hidden_units, y1.shape[1],
                           stream(config.seed, "init"))
    drop_rng = stream(config.seed, "dropout")
    opt = Adam(weights, lr=config.learning_rate)
    history = [obj.loss(weights)]
    best_loss, best_step, best_weights = np.inf, 0, None
    for step in range(1, config.steps + 1):
        masks = obj.masks(drop_rng, config.dropout_rate, config.hidden_units)
        loss, grads = obj.loss_and_grads(weights, masks)
        if not np.isfinite(loss):
            raise TrainingDiverged(step)
        if not all(np.all(np.isfinite(gr)) for gr in grads):
            raise TrainingDiverged(step, "gradient")
        opt.step(weights, grads)
        current = obj.loss(weights)
        if not np.isfinite(current):
            raise TrainingDiverged(step)
        history.append(current)
        if current < best_loss:
            best_loss, best_step = current, step
            best_weights = [w.copy() for w in weights]
    return TrainedModel(best_weights, best_step, float(best_loss), kind, k, history)


def predict_logits(model: TrainedModel, x, g=None):
    """Inference-mode logits for every row of ``x``."""
    if model.kind == "mlp":
        logits, _ = mlp_forward(model.weights, x)
    else:
        if g is None:
            raise ValueError("IGCN prediction needs the graph")
        logits, _ = igcn_forward(g, model.weights, x, model.k)
    return logits


@dataclass
class GradCheckInstance:
    x: np.ndarray
    y: np.ndarray
    labeled_rows: np.ndarray
    weights: list
    graph: Optional[Graph] = None
    k: int = 1
    l2_weight: float = 5e-4
    l2_scope: str = "first"


def random_instance(model_kind, rng, n=6, m=4, hidden=5, n_classes=3, k=1, edge_prob=0.5,
                    kink_margin=1e-3, max_tries=100):
    """Small random problem for gradient checking.

    Weights are drawn at the Glorot scale used for training; unit-variance
    weights saturate the softmax and leave gradient entries near 1e-10 that
    central differences cannot resolve. Instances whose hidden
    pre-activations come within ``kink_margin`` of zero are redrawn, since
    the ReLU is not differentiable there.
    """
    for _ in range(max_tries):
        inst = _draw_instance(model_kind, rng, n, m, hidden, n_classes, k, edge_prob)
        if model_kind == "linear" or kink_margin <= 0:
            return inst
        if model_kind == "mlp":
            _, cache = mlp_forward(inst.weights, inst.x)
        else:
            _, cache = igcn_forward(inst.graph, inst.weights, inst.x, k)
        if np.min(np.abs(cache["pre"])) >= kink_margin:
            return inst
    raise RuntimeError(f"no instance with pre-activations {kink_margin} away from zero "
                       f"in {max_tries} draws")


def _draw_instance(model_kind, rng, n, m, hidden, n_classes, k, edge_prob):
    x = rng.normal(size=(n, m))
    y = _as_one_hot(rng.integers(0, n_classes, size=n), n_classes)
    labeled = np.sort(rng.choice(n, size=max(2, n // 2), replace=False))
    if model_kind == "linear":
        return GradCheckInstance(x, rng.normal(size=(n, n_classes)), labeled,
                                 [rng.normal(size=(m, n_classes))])
    weights = init_weights(m, hidden, n_classes, rng)
    graph = None
    if model_kind == "igcn":
        iu, ju = np.triu_indices(n, 1)
        keep = rng.random(iu.size) < edge_prob
        graph = Graph.from_edges(n, iu[keep], ju[keep], rng.uniform(0.5, 1.5, keep.sum()))
    return GradCheckInstance(x, y, labeled, weights, graph, k)


def _linear_loss_and_grads(inst, weights):
    r = (inst.x @ weights[0] - inst.y)[inst.labeled_rows]
    n = inst.labeled_rows.size
    loss = 0.5 * float(np.sum(r * r)) / n
    return loss, [inst.x[inst.labeled_rows].T @ r / n]


def gradient_check(model_kind, instance: GradCheckInstance, epsilon: float = 1e-5) -> float:
    """Worst relative error between analytic and central-difference gradients.

    Relative error per entry is ``|a - f| / max(|a|, |f|, 1e-7)``; the floor
    keeps entries that are themselves at the finite-difference noise level
    (about 1e-11 for ``epsilon = 1e-5``) from dominating. Entries where both
    are exactly zero count as zero. Dropout is off. ``model_kind``
    is ``"linear"`` (least squares), ``"mlp"`` or ``"igcn"``.
    """
    kind = model_kind.lower()
    weights = copy.deepcopy(instance.weights)
    if kind == "linear":
        def lossgrad(w):
            return _linear_loss_and_grads(instance, w)
    else:
        op = renormalized_adjacency(instance.graph) if kind == "igcn" else None
        obj = _Objective(kind, instance.x, instance.y, instance.labeled_rows,
                         instance.l2_weight, instance.l2_scope, op, instance.k)

        def lossgrad(w):
            return obj.loss_and_grads(w)

    _, analytic = lossgrad(weights)
    worst = 0.0
    for w, a in zip(weights, analytic):
        it = np.nditer(w, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = w[idx]
            w[idx] = orig + epsilon
            lp, _ = lossgrad(weights)
            w[idx] = orig - epsilon
            lm, _ = lossgrad(weights)
            w[idx] = orig
            fd = (lp - lm) / (2.0 * epsilon)
            an = a[idx]
            diff = abs(an - fd)
            if diff == 0.0:
                continue
            worst = max(worst, diff / max(abs(an), abs(fd), 1e-7))
    return worst
