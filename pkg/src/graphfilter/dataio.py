"""Dataset loading, synthetic SBM generation and CSV export.

File formats
------------
citation content
    one document per line, whitespace/tab separated:
    ``doc_id f_1 ... f_m class_name``
citation cites
    ``cited_id citing_id`` per line
edge list
    ``src dst [weight]`` per line, 0-based vertex indices
labels
    ``vertex_index class_index`` per line; vertices not listed are unlabeled
matrix CSV
    header row of column indices, then one row per vertex

``#`` comment lines are ignored in edge-list and labels files. LF and CRLF
are accepted on read; writes use LF.
"""
from __future__ import annotations

import csv
import logging
import os
from dataclasses import dataclass, field

import numpy as np

from .rng import stream
from .sparse import Graph, GraphError

log = logging.getLogger(__name__)


class DatasetFormatError(ValueError):
    def __init__(self, path, line, msg):
        super().__init__(f"{path}:{line}: {msg}")
        self.path, self.line = path, line


@dataclass
class Dataset:
    graph: Graph
    features: np.ndarray
    labels: np.ndarray
    class_names: list
    vertex_ids: list
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n = self.graph.n
        if self.features.shape[0] != n or self.labels.shape[0] != n or len(self.vertex_ids) != n:
            raise ValueError("graph, features, labels and vertex ids disagree on vertex count")
        if not np.all(np.isfinite(self.features)):
            raise ValueError("features must be finite")
        if self.labels.size and self.labels.max() >= len(self.class_names):
            raise ValueError("label index exceeds the number of classes")

    @property
    def n(self):
        return self.graph.n

    @property
    def n_classes(self):
        return len(self.class_names)

    def row_normalized(self):
        """Copy with each feature row scaled to unit sum (all-zero rows untouched)."""
        s = self.features.sum(axis=1, keepdims=True)
        s[s == 0] = 1.0
        meta = dict(self.meta, row_normalized=True)
        return Dataset(self.graph, self.features / s, self.labels, self.class_names,
                       self.vertex_ids, meta)


def _read_lines(path):
    try:
        with open(path, "r", encoding="utf-8", newline=None) as fh:
            return fh.read().splitlines()
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror or exc}") from exc


def load_citation_content(content_path, cites_path) -> Dataset:
    """Load a Cora/CiteSeer style ``.content`` + ``.cites`` pair.

    Classes are indexed by first appearance. Citations to unknown ids and
    self-citations are skipped and counted in ``meta``; repeated or
    reciprocal citations collapse to a single unit-weight edge.
    """
    lines = _read_lines(content_path)
    ids, rows, class_of, class_names = [], [], [], []
    class_index = {}
    m = None
    for no, raw in enumerate(lines, 1):
        if not raw.strip():
            continue
        parts = raw.split()
        if len(parts) < 2:
            raise DatasetFormatError(content_path, no, "expected 'id features... class'")
        feats = parts[1:-1]
        if m is None:
            m = len(feats)
        elif len(feats) != m:
            raise DatasetFormatError(content_path, no, f"expected {m} features, found {len(feats)}")
        try:
            rows.append([float(v) for v in feats])
        except ValueError:
            raise DatasetFormatError(content_path, no, "non-numeric feature value") from None
        ids.append(parts[0])
        name = parts[-1]
        if name not in class_index:
            class_index[name] = len(class_names)
            class_names.append(name)
        class_of.append(class_index[name])
    if not ids:
        raise DatasetFormatError(content_path, 0, "empty content file")
    pos = {}
    for i, vid in enumerate(ids):
        if vid in pos:
            raise DatasetFormatError(content_path, i + 1, f"duplicate document id {vid!r}")
        pos[vid] = i

    cite_lines = _read_lines(cites_path)
    src, dst = [], []
    raw_edges = unknown = self_cites = 0
    for no, raw in enumerate(cite_lines, 1):
        if not raw.strip():
            continue
        parts = raw.split()
        if len(parts) != 2:
            raise DatasetFormatError(cites_path, no, "expected 'cited_id citing_id'")
        raw_edges += 1
        a, b = pos.get(parts[0]), pos.get(parts[1])
        if a is None or b is None:
            unknown += 1
            continue
        if a == b:
            self_cites += 1
            continue
        src.append(a)
        dst.append(b)
    if raw_edges == 0:
        raise DatasetFormatError(cites_path, 0, "empty cites file")
    if unknown:
        log.warning("%s: skipped %d citations referencing unknown ids", cites_path, unknown)
    if self_cites:
        log.warning("%s: skipped %d self-citations", cites_path, self_cites)
    n = len(ids)
    pairs = np.unique(np.sort(np.array([src, dst], dtype=np.int64).reshape(2, -1), axis=0),
                      axis=1)
    graph = Graph.from_edges(n, pairs[0], pairs[1])
    feats = np.asarray(rows, dtype=np.float64).reshape(n, m)
    meta = {"raw_edge_lines": raw_edges, "undirected_edges": graph.n_edges,
            "skipped_unknown": unknown, "skipped_self": self_cites, "row_normalized": False}
    return Dataset(graph, feats, np.asarray(class_of, dtype=np.int64), class_names, ids, meta)


def _data_lines(path):
    for no, raw in enumerate(_read_lines(path), 1):
        s = raw.strip()
        if s and not s.startswith("#"):
            yield no, s


def read_matrix_csv(path) -> np.ndarray:
    """Read a matrix written by :func:`export_matrix_csv` (header row required)."""
    lines = [ln for ln in _read_lines(path) if ln.strip() and not ln.startswith("#")]
    if not lines:
        raise DatasetFormatError(path, 0, "empty matrix file")
    header = next(csv.reader([lines[0]]))
    out = []
    for no, row in enumerate(csv.reader(lines[1:]), 2):
        if len(row) != len(header):
            raise DatasetFormatError(path, no, f"expected {len(header)} columns, found {len(row)}")
        try:
            out.append([float(v) for v in row])
        except ValueError:
            raise DatasetFormatError(path, no, "non-numeric value") from None
    return np.asarray(out, dtype=np.float64).reshape(len(out), len(header))


def load_edge_list(edges_path, features_path, labels_path=None) -> Dataset:
    """Load the generic edge-list / matrix-CSV / labels triple.

    The vertex count comes from the features file. Vertices missing from the
    labels file get label -1.
    """
    feats = read_matrix_csv(features_path)
    n = feats.shape[0]
    src, dst, w = [], [], []
    for no, s in _data_lines(edges_path):
        parts = s.split()
        if len(parts) not in (2, 3):
            raise DatasetFormatError(edges_path, no, "expected 'src dst [weight]'")
        try:
            a, b = int(parts[0]), int(parts[1])
            wt = float(parts[2]) if len(parts) == 3 else 1.0
        except ValueError:
            raise DatasetFormatError(edges_path, no, "unparseable edge") from None
        if not (0 <= a < n and 0 <= b < n):
            raise DatasetFormatError(edges_path, no, f"vertex index out of range [0, {n})")
        if not np.isfinite(wt) or wt < 0:
            raise DatasetFormatError(edges_path, no, f"edge weight must be finite and >= 0, got {wt}")
        if a == b:
            raise DatasetFormatError(edges_path, no, f"self-loop at vertex {a}")
        src.append(a)
        dst.append(b)
        w.append(wt)
    try:
        graph = Graph.from_edges(n, src, dst, w)
    except GraphError as exc:
        raise DatasetFormatError(edges_path, 0, str(exc)) from None

    labels = np.full(n, -1, dtype=np.int64)
    if labels_path is not None:
        for no, s in _data_lines(labels_path):
            parts = s.split()
            if len(parts) != 2:
                raise DatasetFormatError(labels_path, no, "expected 'vertex_index class_index'")
            try:
                v, c = int(parts[0]), int(parts[1])
            except ValueError:
                raise DatasetFormatError(labels_path, no, "unparseable label") from None
            if not 0 <= v < n:
                raise DatasetFormatError(labels_path, no, f"vertex index out of range [0, {n})")
            if c < 0:
                raise DatasetFormatError(labels_path, no, "class index must be >= 0")
            labels[v] = c
    n_classes = int(labels.max()) + 1 if labels.size and labels.max() >= 0 else 0
    return Dataset(graph, feats, labels, [str(c) for c in range(n_classes)],
                   [str(i) for i in range(n)],
                   {"raw_edge_lines": len(src), "undirected_edges": graph.n_edges,
                    "row_normalized": False})


@dataclass
class SbmParams:
    block_sizes: list
    p_in: float
    p_out: float
    feature_dim: int = 16
    feature_shift: float = 1.0
    noise_sigma: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.p_out <= self.p_in <= 1.0:
            raise ValueError("need 0 <= p_out <= p_in <= 1")
        if self.feature_dim < 1:
            raise ValueError("feature_dim must be >= 1")
        if not self.block_sizes or min(self.block_sizes) < 1:
            raise ValueError("block sizes must be positive")


def generate_sbm(p: SbmParams) -> Dataset:
    """Sample a stochastic block model with block-informative Gaussian features.

    Block ``b`` has mean ``feature_shift`` on feature coordinates
    ``[b*d/B, (b+1)*d/B)`` and zero elsewhere; every entry gets
    ``N(0, noise_sigma^2)`` noise.
    """
    sizes = [int(s) for s in p.block_sizes]
    n = sum(sizes)
    blocks = np.repeat(np.arange(len(sizes)), sizes)
    graph_rng = stream(p.seed, "sbm-edges")
    feat_rng = stream(p.seed, "sbm-features")
    iu, ju = np.triu_indices(n, 1)
    prob = np.where(blocks[iu] == blocks[ju], p.p_in, p.p_out)
    keep = graph_rng.random(iu.size) < prob
    graph = Graph.from_edges(n, iu[keep], ju[keep])
    d, nb = p.feature_dim, len(sizes)
    means = np.zeros((nb, d))
    for b in range(nb):
        means[b, (b * d) // nb:((b + 1) * d) // nb] = p.feature_shift
    feats = means[blocks] + p.noise_sigma * feat_rng.standard_normal((n, d))
    return Dataset(graph, feats, blocks.astype(np.int64), [str(b) for b in range(nb)],
                   [str(i) for i in range(n)],
                   {"raw_edge_lines": int(keep.sum()), "undirected_edges": graph.n_edges,
                    "row_normalized": False, "generator": "sbm"})


def format_real(v) -> str:
    return "%.17g" % float(v)


def _open_for_write(path):
    try:
        return open(path, "w", encoding="utf-8", newline="\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def write_matrix_csv(m, fh):
    m = np.asarray(m, dtype=np.float64)
    if m.ndim == 1:
        m = m[:, None]
    fh.write(",".join(str(j) for j in range(m.shape[1])) + "\n")
    for row in m:
        fh.write(",".join(format_real(v) for v in row) + "\n")


def export_matrix_csv(m, path):
    """Header of column indices, then rows at 17 significant digits."""
    with _open_for_write(path) as fh:
        write_matrix_csv(m, fh)


def write_spectrum_csv(eigenvalues, responses, fh):
    names = list(responses)
    fh.write(",".join(["lambda"] + names) + "\n")
    for i, lam in enumerate(np.asarray(eigenvalues, dtype=np.float64)):
        fh.write(",".join([format_real(lam)] + [format_real(responses[c][i]) for c in names]) + "\n")


def export_spectrum_csv(eigenvalues, responses, path):
    """One row per eigenvalue; ``responses`` maps column name to values."""
    with _open_for_write(path) as fh:
        write_spectrum_csv(eigenvalues, responses, fh)


def export_dataset(ds: Dataset, out_dir):
    """Write ``edges.txt``, ``features.csv`` and ``labels.txt`` into ``out_dir``."""
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create {out_dir}: {exc.strerror or exc}") from exc
    adj = ds.graph.adjacency
    r, c, v = adj.row_ids(), adj.col_indices, adj.values
    upper = r < c
    paths = {k: os.path.join(out_dir, f) for k, f in
             (("edges", "edges.txt"), ("features", "features.csv"), ("labels", "labels.txt"))}
    with _open_for_write(paths["edges"]) as fh:
        for a, b, w in zip(r[upper], c[upper], v[upper]):
            fh.write(f"{a} {b} {format_real(w)}\n")
    export_matrix_csv(ds.features, paths["features"])
    with _open_for_write(paths["labels"]) as fh:
        for i, lab in enumerate(ds.labels):
            if lab >= 0:
                fh.write(f"{i} {lab}\n")
    return paths
