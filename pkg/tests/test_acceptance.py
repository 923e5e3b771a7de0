"""Acceptance criteria, one test per criterion.

Each test appends a pass/fail line to ``conftest.ACCEPTANCE_RESULTS``; the
lines are printed in the terminal summary. Criteria 9 and 10 need the San
Diego cubes and run only when ``HSITD_SANDIEGO_DIR`` points at a directory
holding ``sandiego1/`` and ``sandiego2/``, each with ``scene.json``,
``scene.raw`` and ``mask.pgm``.
"""

import os
import time
from pathlib import Path

import numpy as np
import pytest
import scipy.linalg
from scipy.stats import mannwhitneyu

import conftest
from hsitd.cli import main
from hsitd.cube import average_target_spectrum, flatten, load_cube, load_mask, normalize
from hsitd.detector import roc_auc, sam_baseline
from hsitd.graph import build_graphs, build_partition, run_lrb_glr
from hsitd.pipeline import PipelineConfig, run_pipeline
from hsitd.prox import graph_trace, soft_threshold, svt, truncated_svd
from hsitd.subspace import JointDictionary, learn_background, sparse_code
from hsitd.synth import write_scene

# the synthetic scene has a planted background rank of 8
SYNTH_CONFIG = PipelineConfig(K=8)


def record(number, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} ({detail})"
    conftest.ACCEPTANCE_RESULTS.append(line)
    print(line)
    assert ok, line


def record_skip(number, title, reason):
    line = f"[SKIP] criterion {number}: {title} ({reason})"
    conftest.ACCEPTANCE_RESULTS.append(line)
    pytest.skip(line)


def test_01_proximal_oracles():
    rng = np.random.default_rng(101)
    soft_ok = True
    for _ in range(1000):
        M = rng.standard_normal(tuple(rng.integers(1, 12, 2))) * rng.uniform(0.1, 10)
        tau = rng.uniform(0, 3)
        expected = np.sign(M) * np.maximum(np.abs(M) - tau, 0.0)
        soft_ok &= np.array_equal(soft_threshold(M, tau), expected)
    worst = 0.0
    for _ in range(100):
        m, n = rng.integers(1, 31), rng.integers(1, 41)
        M = rng.standard_normal((m, n))
        tau = rng.uniform(0, 2)
        full = scipy.linalg.svd(M, compute_uv=False, lapack_driver="gesvd")
        got = scipy.linalg.svd(svt(M, tau), compute_uv=False, lapack_driver="gesvd")
        worst = max(worst, np.abs(got - np.maximum(full - tau, 0.0)).max())
    record(1, "soft_threshold exact on 1000 matrices, svt within 1e-9 on 100",
           bool(soft_ok) and worst < 1e-9, f"soft exact={bool(soft_ok)}, svt max err={worst:.2e}")


def test_02_eckart_young():
    rng = np.random.default_rng(102)
    worst = 0.0
    for _ in range(50):
        m, n = rng.integers(2, 41, 2)
        K = int(rng.integers(1, min(m, n) + 1))
        X = rng.standard_normal((m, n))
        tail = scipy.linalg.svd(X, compute_uv=False, lapack_driver="gesvd")[K:]
        err = np.linalg.norm(X - truncated_svd(X, K).reconstruct()) ** 2
        energy = np.sum(tail ** 2)
        rel = abs(err - energy) / max(energy, np.linalg.norm(X) ** 2 * 1e-16)
        worst = max(worst, rel)
    record(2, "Eckart-Young on 50 instances, relative 1e-8", worst < 1e-8,
           f"max rel err={worst:.2e}")


def brute_force_half_double_sum(S, W):
    n = W.shape[0]
    total = 0.0
    for i in range(n):
        for j in range(n):
            d = S[:, i] - S[:, j]
            total += W[i, j] * float(d @ d)
    return 0.5 * total


def test_03_laplacian_suite():
    rng = np.random.default_rng(103)
    worst_row, worst_sym, worst_eig, worst_trace = 0.0, 0.0, 0.0, 0.0
    n_regions, n_edges = 0, 0
    while n_regions < 100:
        h, w = rng.integers(3, 13, 2)
        bands = int(rng.integers(2, 10))
        X = rng.random((bands, h * w)) * rng.uniform(0.1, 0.5)
        part = build_partition(h, w, int(rng.integers(2, 8)))
        for g, idx in zip(build_graphs(X, part, 0.3), part.regions):
            if n_regions == 100:
                break
            L = g.laplacian
            S = rng.standard_normal((int(rng.integers(1, 6)), idx.size))
            worst_row = max(worst_row, np.abs(L.sum(axis=1)).max())
            worst_sym = max(worst_sym, np.abs(L - L.T).max())
            worst_eig = min(worst_eig, np.linalg.eigvalsh(L).min())
            worst_trace = max(worst_trace,
                              abs(graph_trace(S, L) - brute_force_half_double_sum(S, g.weights)))
            n_regions += 1
            n_edges += g.n_edges
    ok = worst_row < 1e-12 and worst_sym == 0 and worst_eig > -1e-10 and worst_trace < 1e-10
    record(3, "Laplacian row sums, symmetry, PSD, trace vs double sum on 100 regions", ok,
           f"row={worst_row:.1e}, asym={worst_sym:.1e}, min eig={worst_eig:.1e}, "
           f"trace err={worst_trace:.1e}, edges={n_edges}")


def test_04_admm_reductions():
    rng = np.random.default_rng(104)
    L, K, h, w = 64, 7, 8, 8
    A = rng.standard_normal((L, K))
    t = rng.standard_normal(L)
    B = JointDictionary(A, t)
    X = rng.standard_normal((L, h * w))

    lstsq = np.linalg.lstsq(B.assembled, X, rcond=None)[0]
    err_sc = np.abs(sparse_code(X, B, 0.0).coef - lstsq).max()

    lam = 1e-4
    part = build_partition(h, w, 4)
    graphs = build_graphs(X, part, 0.3)
    glr = run_lrb_glr(X, B, graphs, part, lambda3=0.0, lambda4=lam).coef
    err_glr = np.abs(glr - sparse_code(X, B, lam).coef).max()

    S1 = rng.standard_normal((K, h * w))
    S2 = np.zeros((1, h * w))
    oracle = np.linalg.lstsq(S1.T, X.T, rcond=None)[0].T
    err_bg = np.abs(learn_background(X, t, S1, S2, 0.0).values - oracle).max()

    ok = err_sc < 1e-5 and err_glr < 1e-4 and err_bg < 1e-5
    record(4, "ADMM reductions (1e-5 / 1e-4 / 1e-5)", ok,
           f"sparse_code={err_sc:.1e}, glr={err_glr:.1e}, background={err_bg:.1e}")


@pytest.fixture(scope="module")
def default_run(default_scene):
    t0 = time.perf_counter()
    result = run_pipeline(default_scene.cube, SYNTH_CONFIG, target=default_scene.target,
                          mask=default_scene.mask)
    return result, time.perf_counter() - t0


def test_05_convergence(default_run):
    result, _ = default_run
    traces = {
        "alg1 coding": result.background.coding.trace,
        "alg1 background": result.background.trace,
        "alg2": result.coding.trace,
    }
    ok = all(tr.residual < 1e-6 and tr.iterations < 200 and tr.converged for tr in traces.values())
    detail = ", ".join(f"{k}: {tr.iterations} it, res {tr.residual:.1e}" for k, tr in traces.items())
    record(5, "all ADMM loops converge below 1e-6 before 200 iterations", ok, detail)


def test_06_detection_quality(default_run, default_scene):
    result, seconds = default_run
    X = flatten(normalize(default_scene.cube))
    sam = sam_baseline(X, default_scene.target, shape=default_scene.mask.shape)
    auc, auc_sam = result.roc.auc, roc_auc(sam, default_scene.mask).auc
    record(6, "synthetic AUC >= 0.99 and > SAM", auc >= 0.99 and auc > auc_sam,
           f"AUC={auc:.6f}, SAM={auc_sam:.6f}, {seconds:.2f} s")


def test_07_auc_matches_mann_whitney():
    rng = np.random.default_rng(107)
    worst = 0.0
    for i in range(50):
        n = int(rng.integers(4, 200))
        # half the instances carry heavy ties
        scores = rng.integers(0, 5, n).astype(float) if i % 2 else rng.standard_normal(n)
        mask = rng.random(n) < rng.uniform(0.1, 0.9)
        mask[:2] = [True, False]
        n_pos, n_neg = mask.sum(), (~mask).sum()
        u = mannwhitneyu(scores[mask], scores[~mask]).statistic
        worst = max(worst, abs(roc_auc(scores, mask).auc - u / (n_pos * n_neg)))
    record(7, "trapezoid AUC equals Mann-Whitney on 50 instances within 1e-12",
           worst < 1e-12, f"max err={worst:.1e}")


def test_08_determinism(default_scene, tmp_path):
    paths = write_scene(default_scene, tmp_path / "scene")
    rasters = []
    for name in ("run1", "run2"):
        code = main(["detect", "--cube", str(paths["cube"]), "--mask", str(paths["mask"]),
                     "--target", str(paths["target"]), "--K", str(SYNTH_CONFIG.K),
                     "-o", str(tmp_path / name)])
        assert code == 0
        rasters.append((tmp_path / name / "map.raw").read_bytes())
    record(8, "two end-to-end runs give bit-identical rasters", rasters[0] == rasters[1],
           f"{len(rasters[0])} bytes")


SAN_DIEGO = {
    "sandiego1": {"K": 12, "auc_min": 0.995, "seconds": 5.71, "sam": 0.9944},
    "sandiego2": {"K": 10, "auc_min": 0.994, "seconds": 5.46, "sam": 0.9945},
}


def san_diego_inputs(name):
    root = os.environ.get("HSITD_SANDIEGO_DIR")
    if not root:
        return None
    base = Path(root) / name
    return load_cube(base / "scene"), load_mask(base / "mask.pgm")


@pytest.mark.slow
@pytest.mark.parametrize("name", list(SAN_DIEGO))
def test_09_san_diego_detection(name):
    title = f"{name} AUC and runtime"
    inputs = san_diego_inputs(name)
    if inputs is None:
        record_skip(9, title, "HSITD_SANDIEGO_DIR not set")
    cube, mask = inputs
    ref = SAN_DIEGO[name]
    t0 = time.perf_counter()
    result = run_pipeline(cube, PipelineConfig(K=ref["K"]), mask=mask)
    seconds = time.perf_counter() - t0
    auc = result.roc.auc
    ok = auc >= ref["auc_min"] and seconds <= 5 * ref["seconds"]
    record(9, title, ok, f"AUC={auc:.6f} (min {ref['auc_min']}), {seconds:.2f} s "
                         f"(max {5 * ref['seconds']:.2f} s)")


@pytest.mark.parametrize("name", list(SAN_DIEGO))
def test_10_san_diego_sam(name):
    title = f"{name} SAM baseline"
    inputs = san_diego_inputs(name)
    if inputs is None:
        record_skip(10, title, "HSITD_SANDIEGO_DIR not set")
    cube, mask = inputs
    scene = normalize(cube)
    t = average_target_spectrum(scene, mask)
    sam = sam_baseline(flatten(scene), t, shape=mask.shape)
    auc = roc_auc(sam, mask).auc
    ref = SAN_DIEGO[name]["sam"]
    record(10, title, abs(auc - ref) <= 0.005, f"SAM AUC={auc:.6f}, reference {ref} +/- 0.005")
