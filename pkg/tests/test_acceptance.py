"""End-to-end acceptance gate: oracle equivalence, invariants, and the
protocol-level trends on synthetic data, each with an explicit runtime
budget.  One test per criterion; `pytest -v` gives the per-criterion
pass/fail lines."""

import time

import numpy as np
import pytest

from hinprop.cli import main as cli_main
from hinprop.datagen import GenConfig, generate_dataset
from hinprop.experiment import ExperimentSpec, run_experiment, sweep_parameter
from hinprop.metapath import DEFAULT_METAPATHS, commuting_matrix, pathsim
from hinprop.propagate import (PropagationConfig, normalize_sym,
                               propagate_closed, propagate_iterative)
from hinprop.weights import SvrConfig, fit_svr

from conftest import random_hin
from oracles import closed_form_two_node, enumerate_path_instances

PROTOCOL_GEN = GenConfig(n_users=10_000, n_apps=1000, rng_seed=0)
PROTOCOL_SPEC = ExperimentSpec(gen=PROTOCOL_GEN, rng_seed=0)


@pytest.fixture(scope="module")
def protocol_run():
    """One full evaluation protocol run at benchmark scale, wall-clocked."""
    t0 = time.perf_counter()
    graph, truth = generate_dataset(PROTOCOL_GEN)
    report = run_experiment(PROTOCOL_SPEC, graph, truth)
    wall = time.perf_counter() - t0
    return graph, truth, report, wall


def test_criterion_01_commuting_matrix_matches_enumeration():
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    for _ in range(50):
        graph = random_hin(rng, max_nodes=20, edge_prob=0.25, max_weight=5)
        for path in DEFAULT_METAPATHS:
            got = commuting_matrix(graph, path)
            want = enumerate_path_instances(graph, path.split("-"))
            assert got.dtype == np.int64
            assert np.array_equal(got, want), path
    assert time.perf_counter() - t0 < 10.0


def test_criterion_02_pathsim_bounds_symmetry_diagonal():
    rng = np.random.default_rng(7)
    t0 = time.perf_counter()
    for _ in range(1000):
        n = int(rng.integers(1, 12))
        inner = int(rng.integers(1, 9))
        h = rng.integers(0, 4, size=(n, inner))
        h[rng.random(n) < 0.2] = 0          # force some all-zero rows
        m = h @ h.T
        s = pathsim(m)
        assert (s >= 0.0).all() and (s <= 1.0).all()
        assert np.array_equal(s, s.T)
        diag = np.diag(m)
        assert (s[diag > 0, diag > 0] == 1.0).all()
        # both-endpoint-zero denominators must yield 0, not NaN
        zero = diag == 0
        assert (s[np.ix_(zero, zero)] == 0.0).all()
        assert not np.isnan(s).any()
    assert time.perf_counter() - t0 < 5.0


def test_criterion_03_closed_and_iterative_solvers_agree():
    t0 = time.perf_counter()
    cfg = PropagationConfig(lam=2.0, tol=1e-9, max_iter=5000)   # alpha = 1/3
    for k in range(20):
        rng = np.random.default_rng(k)
        w = rng.random((200, 200))
        s = normalize_sym((w + w.T) / 2.0)
        y = np.zeros((200, 6))
        y[rng.integers(0, 200, 30), rng.integers(0, 6, 30)] = 1.0
        diff = np.abs(propagate_closed(s, y, cfg) -
                      propagate_iterative(s, y, cfg))
        assert diff.max() < 1e-8
    assert time.perf_counter() - t0 < 30.0


def test_criterion_04_two_node_hand_inversion():
    t0 = time.perf_counter()
    s = np.array([[0.0, 1.0], [1.0, 0.0]])
    y = np.array([[1.0], [0.0]])
    got = propagate_closed(s, y, PropagationConfig(lam=1.0))    # alpha = 1/2
    want = closed_form_two_node()
    assert np.max(np.abs(got[:, 0] - want)) < 1e-12
    assert time.perf_counter() - t0 < 1.0


def test_criterion_05_svr_band_and_direction_recovery():
    t0 = time.perf_counter()
    rng = np.random.default_rng(123)
    x = rng.random((500, 4))
    w_true = np.array([1.2, 0.4, 2.0, 0.8])
    y = x @ w_true + 0.3
    cfg = SvrConfig(epsilon=0.2, C=10.0, tol=1e-7)
    beta = fit_svr(x, y, cfg)
    resid = np.abs(y - x @ beta.raw - beta.bias)
    assert resid.max() <= cfg.epsilon + 1e-6
    cosine = (beta.raw @ w_true /
              (np.linalg.norm(beta.raw) * np.linalg.norm(w_true)))
    assert cosine >= 0.99
    assert time.perf_counter() - t0 < 10.0


def test_criterion_06_accuracy_trend_and_baseline_margins(protocol_run):
    _, _, report, wall = protocol_run
    tpm = [report.mean_accuracy("tpathmine", fi) for fi in range(5)]
    knn = [report.mean_accuracy("knn", fi) for fi in range(5)]
    maj = [report.mean_accuracy("majority", fi) for fi in range(5)]
    steps = np.diff(tpm)
    assert (steps > -1.0).all(), f"adjacent dip over 1pp in {np.round(tpm, 2)}"
    assert tpm[-1] > tpm[0], f"no upward trend: {np.round(tpm, 2)}"
    for fi in range(5):
        assert tpm[fi] > knn[fi], f"fraction index {fi}: {tpm[fi]} <= {knn[fi]}"
        assert tpm[fi] > maj[fi], f"fraction index {fi}: {tpm[fi]} <= {maj[fi]}"
    assert wall < 300.0, f"protocol run took {wall:.0f}s"


def test_criterion_07_shortest_app_path_gets_lowest_weight(protocol_run):
    _, _, report, _ = protocol_run
    means = report.beta_matrix().mean(axis=0)
    by_path = dict(zip(report.path_names, np.round(means, 4)))
    uau = means[report.path_names.index("U-A-U")]
    others = [means[k] for k, name in enumerate(report.path_names)
              if name != "U-A-U"]
    assert uau < min(others), (
        f"U-A-U mean normalized weight {uau:.4f} is not the strict minimum; "
        f"per-path means: {by_path}")


def test_dominant_paths_outweigh_shortest_app_path(protocol_run):
    # weaker, load-bearing form of the ranking: the two persistently
    # informative paths must each outweigh U-A-U on class-structured data
    _, _, report, _ = protocol_run
    means = report.beta_matrix().mean(axis=0)
    weight = dict(zip(report.path_names, means))
    assert weight["U-T-U"] > weight["U-A-U"]
    assert weight["U-A-T-A-U"] > weight["U-A-U"]


def test_criterion_08_lambda_sweep_stability_and_fraction_dominance(protocol_run):
    graph, truth, _, _ = protocol_run
    values = [1.0, 2.0, 4.0, 6.0, 8.0]
    t0 = time.perf_counter()
    sweep = sweep_parameter(PROTOCOL_SPEC, "lambda", values, graph, truth)
    wall = time.perf_counter() - t0
    table = {(v, f): acc for v, f, acc in sweep.rows}
    fractions = PROTOCOL_SPEC.fractions
    for f in fractions:
        col = [table[(v, f)] for v in values]
        assert max(col) - min(col) < 15.0, (f, np.round(col, 2))
    for v in values:
        low, high = table[(v, fractions[0])], table[(v, fractions[-1])]
        assert high > low, f"lambda {v}: acc({fractions[-1]}) {high:.2f} " \
                           f"<= acc({fractions[0]}) {low:.2f}"
    for rep in sweep.reports.values():
        assert rep.max_spectral() <= 1.0 + 1e-9
    assert wall < 600.0, f"sweep took {wall:.0f}s"


def test_criterion_09_spectral_radius_never_exceeds_one(protocol_run):
    _, _, report, _ = protocol_run
    assert report.spectral, "no spectral estimates recorded"
    assert report.max_spectral() <= 1.0 + 1e-9


def test_criterion_10_cli_determinism_and_thread_invariance(tmp_path):
    argv_tail = ["--set", "gen.n_users=2000", "--set", "gen.n_apps=300",
                 "--set", "experiment.fractions=[0.1,0.3,0.5]",
                 "--set", "experiment.repeats=2"]
    t0 = time.perf_counter()
    outs = []
    for name, threads in (("r1", None), ("r2", None), ("r8", 8)):
        out = tmp_path / name
        argv = ["evaluate", "--out", str(out)] + argv_tail
        if threads:
            argv += ["--threads", str(threads)]
        assert cli_main(argv) == 0
        outs.append(out)
    wall = time.perf_counter() - t0
    first = (outs[0] / "report.csv").read_bytes()
    assert (outs[1] / "report.csv").read_bytes() == first
    assert (outs[2] / "report.csv").read_bytes() == first
    assert (outs[1] / "weights_report.csv").read_bytes() == \
        (outs[0] / "weights_report.csv").read_bytes()
    assert wall < 600.0, f"three runs took {wall:.0f}s"
