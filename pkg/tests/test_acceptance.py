"""Acceptance criteria, one test per criterion.

Each test records a ``criterion N: PASS|FAIL|SKIP ...`` line; the lines are
printed together at the end of the pytest run. Criteria 4 and 7 need the
Cora files: set ``GRAPHFILTER_CORA_DIR`` to a directory holding
``cora.content`` and ``cora.cites``, otherwise they are skipped.
"""
import math
import os
import subprocess
import sys
import time

import numpy as np
import pytest

from graphfilter.dataio import SbmParams, generate_sbm, load_citation_content
from graphfilter.filters import (ARFilter, IdentityFilter, RNMFilter, apply_ar, apply_rnm,
                                 choose_truncation)
from graphfilter.neural import MlpConfig, gradient_check, random_instance
from graphfilter.pipeline import Task, benchmark
from graphfilter.sparse import (LaplacianKind, build_laplacian, renormalized_adjacency,
                                symmetric_normalized_adjacency)
from graphfilter.spectral import (RNM, eigendecompose, eigenvalue_bound_check,
                                  exact_filter_matrix, smoothness)

from conftest import ACCEPTANCE_LINES, complete, cycle, erdos_renyi, random_graph

SYM = LaplacianKind.SYMMETRIC
REN = LaplacianKind.RENORMALIZED_SYMMETRIC


def record(n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def skip(n, reason):
    ACCEPTANCE_LINES.append(f"criterion {n}: SKIP {reason}")
    pytest.skip(reason)


def cora():
    root = os.environ.get("GRAPHFILTER_CORA_DIR")
    if not root:
        return None
    content, cites = os.path.join(root, "cora.content"), os.path.join(root, "cora.cites")
    if not (os.path.exists(content) and os.path.exists(cites)):
        return None
    return load_citation_content(content, cites)


def test_criterion_1_rnm_matches_oracle():
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(20):
        g = random_graph(rng, n_max=30)
        x = rng.normal(size=(g.n, 3))
        op = renormalized_adjacency(g)
        lap = build_laplacian(g, REN)
        for k in (0, 1, 2, 5, 10):
            out, _ = apply_rnm(op, x, k)
            worst = max(worst, float(np.max(np.abs(out - exact_filter_matrix(lap, RNM(k)) @ x))))
    elapsed = time.perf_counter() - t0
    record(1, worst <= 1e-6 and elapsed < 5.0,
           f"max-abs error {worst:.2e} (tol 1e-6), {elapsed:.2f} s (limit 5 s)")


def test_criterion_2_ar_truncation_bound():
    rng = np.random.default_rng(202)
    worst_ratio = 0.0
    for _ in range(10):
        g = random_graph(rng, n_max=30)
        x = rng.normal(size=(g.n, 2))
        lap = build_laplacian(g, SYM).to_dense()
        w = symmetric_normalized_adjacency(g)
        for alpha in (1.0, 5.0, 10.0, 20.0):
            k = choose_truncation(alpha)
            out, _ = apply_ar(w, x, alpha, k)
            exact = np.linalg.solve(np.eye(g.n) + alpha * lap, x)
            bound = (alpha / (1 + alpha)) ** (k + 1) * np.linalg.norm(x, 2)
            worst_ratio = max(worst_ratio, np.linalg.norm(out - exact, 2) / bound)
    record(2, worst_ratio <= 1.0,
           f"worst error / bound = {worst_ratio:.3f} (must be <= 1); "
           f"alpha=10 bound factor {(10 / 11) ** 41:.4f}")


def test_criterion_3_eigenvalue_bound():
    rng = np.random.default_rng(303)
    failures = 0
    for _ in range(200):
        g = erdos_renyi(rng, int(rng.integers(2, 61)), rng.uniform(0.03, 0.6),
                        weighted=bool(rng.random() < 0.3))
        chk = eigenvalue_bound_check(g)
        d_m = g.degrees.max()
        if not (chk.lambda_tilde_max <= d_m / (d_m + 1) * chk.lambda_max + 1e-10
                and chk.component_bound <= chk.global_bound + 1e-12 and chk.holds):
            failures += 1
    gaps = []
    for g in [complete(2)] + [cycle(n) for n in (3, 4, 5, 8, 13)]:
        chk = eigenvalue_bound_check(g)
        gaps.append(abs(chk.lambda_tilde_max - chk.global_bound))
    record(3, failures == 0 and max(gaps) <= 1e-8,
           f"{failures}/200 random graphs violate; regular-graph equality gap {max(gaps):.1e} "
           f"(tol 1e-8)")


def test_criterion_4_cora_shrinkage():
    ds = cora()
    if ds is None:
        skip(4, "Cora files not found (set GRAPHFILTER_CORA_DIR)")
    t0 = time.perf_counter()
    lam = eigendecompose(build_laplacian(ds.graph, SYM)).eigenvalues[-1]
    lam_t = eigendecompose(build_laplacian(ds.graph, REN)).eigenvalues[-1]
    elapsed = time.perf_counter() - t0
    record(4, 1.9 <= lam <= 2.0 and 1.4 <= lam_t <= 1.6 and elapsed < 600,
           f"lambda_max(L_s)={lam:.4f} in [1.9, 2.0], lambda_max(renormalized)={lam_t:.4f} "
           f"in [1.4, 1.6], {elapsed:.1f} s")


def test_criterion_5_gradient_checks():
    rng = np.random.default_rng(505)
    t0 = time.perf_counter()
    worst = {}
    for i in range(20):
        for kind, k in (("mlp", 1), ("igcn", 1), ("igcn", 2), ("igcn", 3)):
            inst = random_instance(kind, rng, n=int(rng.integers(4, 9)), k=k)
            if i % 2:
                inst.l2_scope = "all"
            key = kind if kind == "mlp" else f"igcn k={k}"
            worst[key] = max(worst.get(key, 0.0), gradient_check(kind, inst))
    elapsed = time.perf_counter() - t0
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    record(5, max(worst.values()) <= 1e-4 and elapsed < 30,
           f"worst relative error {detail} (tol 1e-4), {elapsed:.2f} s (limit 30 s)")


def test_criterion_6_smoothing_monotone():
    rng = np.random.default_rng(606)
    worst = -np.inf
    for _ in range(50):
        g = random_graph(rng, n_max=30)
        x = rng.normal(size=(g.n, 2))
        lap_s, lap_r = build_laplacian(g, SYM), build_laplacian(g, REN)
        rnm, _ = apply_rnm(renormalized_adjacency(g), x, int(rng.integers(1, 6)))
        alpha = float(rng.uniform(0.5, 20))
        ar, _ = apply_ar(symmetric_normalized_adjacency(g), x, alpha, choose_truncation(alpha))
        for j in range(x.shape[1]):
            worst = max(worst, smoothness(lap_r, rnm[:, j]) - smoothness(lap_r, x[:, j]),
                        smoothness(lap_s, ar[:, j]) - smoothness(lap_s, x[:, j]))
    record(6, worst <= 1e-10, f"largest smoothness increase {worst:.2e} (tol 1e-10)")


CORA_TARGETS = [
    ("LP alpha=100, 20/class", Task("lp", labels_per_class=20, lp_alpha=100.0), 68.8, 3.0),
    ("MLP, 20/class", Task("mlp", IdentityFilter(), labels_per_class=20), 55.1, 4.0),
    ("GLP(RNM k=5), 20/class", Task("glp", RNMFilter(5), labels_per_class=20), 80.3, 2.0),
    ("GLP(AR alpha=10), 20/class", Task("glp", ARFilter(10.0), labels_per_class=20), 80.8, 2.0),
    ("IGCN k_total=10, 4/class", Task("igcn", labels_per_class=4, k_total=10), 70.3, 3.0),
    ("GLP(RNM k=10), 4/class", Task("glp", RNMFilter(10), labels_per_class=4), 68.0, 3.0),
]


@pytest.mark.slow
def test_criterion_7_cora_accuracy():
    ds = cora()
    if ds is None:
        skip(7, "Cora files not found (set GRAPHFILTER_CORA_DIR)")
    parts, ok, summaries = [], True, {}
    for name, task, target, tol in CORA_TARGETS:
        t0 = time.perf_counter()
        s = benchmark(ds, task, 50, base_seed=0)
        elapsed = time.perf_counter() - t0
        acc = 100 * s.mean_accuracy
        good = abs(acc - target) <= tol and elapsed < 300
        ok &= good
        summaries[name] = s
        parts.append(f"{name} {acc:.1f} vs {target}+-{tol}{'' if good else ' (out)'}")
    filt = np.mean([r.filter_time for r in summaries["GLP(RNM k=10), 4/class"].runs])
    igcn = np.mean([r.wall_time for r in summaries["IGCN k_total=10, 4/class"].runs])
    ok &= filt < igcn
    parts.append(f"GLP filter {filt:.3f} s < IGCN training {igcn:.3f} s")
    record(7, ok, "; ".join(parts))


def test_criterion_8_sbm_glp_beats_mlp():
    ds = generate_sbm(SbmParams([150, 150], 0.1, 0.005, feature_dim=16, feature_shift=1.0,
                                noise_sigma=2.0, seed=8))
    glp = benchmark(ds, Task("glp", RNMFilter(5), labels_per_class=4), 20, base_seed=0)
    mlp = benchmark(ds, Task("mlp", IdentityFilter(), labels_per_class=4), 20, base_seed=0)
    margin = glp.mean_accuracy - mlp.mean_accuracy
    record(8, margin > 0, f"GLP(RNM k=5) {glp.mean_accuracy:.4f} vs MLP "
           f"{mlp.mean_accuracy:.4f}, margin {margin:+.4f} (must be > 0)")


def test_criterion_9_bench_csv_deterministic(tmp_path):
    data = tmp_path / "sbm"
    cli = [sys.executable, "-m", "graphfilter.cli"]
    subprocess.run(cli + ["gen-sbm", "--block-sizes", "40,40", "--p-in", "0.2", "--p-out",
                          "0.01", "--seed", "3", "--out-dir", str(data)], check=True,
                   capture_output=True)
    flags = ["bench", "--edges", str(data / "edges.txt"), "--features",
             str(data / "features.csv"), "--labels", str(data / "labels.txt"),
             "--labels-per-class", "4", "--runs", "4", "--steps", "30", "--seed", "11"]
    outputs = []
    for model in (["--model", "glp", "--filter", "rnm"], ["--model", "igcn", "--k", "4"],
                  ["--model", "lp"]):
        for rep, jobs in enumerate(("1", "3")):
            out = tmp_path / f"{model[1]}-{rep}.csv"
            subprocess.run(cli + flags + model + ["--jobs", jobs, "--out", str(out)],
                           check=True, capture_output=True)
            outputs.append(out.read_bytes())
    same = all(outputs[i] == outputs[i + 1] for i in range(0, len(outputs), 2))
    record(9, same, f"{len(outputs) // 2} bench commands repeated, CSV bytes "
           f"{'identical' if same else 'differ'}")
