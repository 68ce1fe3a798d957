import numpy as np
import pytest

from hinprop.errors import ConvergenceError
from hinprop.propagate import (FLAG_TIE, FLAG_UNREACHABLE, PropagationConfig,
                               assign_labels, combine_similarities,
                               label_matrix, normalize_degrees, normalize_sym,
                               propagate, propagate_closed,
                               propagate_iterative, spectral_radius_estimate)

from oracles import closed_form_two_node


def _random_normalized(rng, n):
    w = rng.random((n, n))
    w = w + w.T
    return normalize_sym(w)


def test_propagation_config():
    cfg = PropagationConfig(lam=2.0)
    assert cfg.alpha == pytest.approx(1.0 / 3.0)
    with pytest.raises(ValueError, match="lambda"):
        PropagationConfig(lam=0.0)
    with pytest.raises(ValueError, match="solver"):
        PropagationConfig(solver="magic")


def test_normalize_sym_examples():
    assert np.allclose(normalize_sym(np.array([[0.0, 1.0], [1.0, 0.0]])),
                       [[0, 1], [1, 0]])
    assert np.allclose(normalize_sym(np.array([[0.0, 2.0], [2.0, 0.0]])),
                       [[0, 1], [1, 0]])


def test_normalize_sym_isolated_row():
    w = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
    s = normalize_sym(w)
    assert (s[2, :] == 0).all() and (s[:, 2] == 0).all()
    with pytest.raises(ValueError, match="isolated"):
        normalize_sym(w, clamp_isolated=False)


def test_normalize_sym_validation():
    with pytest.raises(ValueError, match="negative"):
        normalize_sym(np.array([[0.0, -1.0], [-1.0, 0.0]]))
    with pytest.raises(ValueError, match="square"):
        normalize_sym(np.zeros((2, 3)))


def test_normalize_sym_in_place():
    w = np.array([[0.0, 2.0], [2.0, 0.0]])
    out = normalize_sym(w, out=w)
    assert out is w
    assert np.allclose(w, [[0, 1], [1, 0]])


def test_normalize_degrees():
    inv = normalize_degrees(np.array([4.0, 0.0, 1.0]))
    assert np.allclose(inv, [0.5, 0.0, 1.0])
    with pytest.raises(ValueError, match="nonnegative"):
        normalize_degrees(np.array([-1.0]))


def test_combine_similarities_examples():
    s1 = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert np.array_equal(combine_similarities([s1], [1.0]), s1)
    assert np.allclose(combine_similarities([s1, s1], [0.5, 0.5]), s1)
    got = combine_similarities([s1, np.zeros((2, 2))], [0.25, 0.75])
    assert np.allclose(got, [[0, 0.25], [0.25, 0]])


def test_combine_similarities_validation():
    s1 = np.zeros((2, 2))
    with pytest.raises(ValueError, match="weights"):
        combine_similarities([s1], [0.5, 0.5])
    with pytest.raises(ValueError, match="mismatched"):
        combine_similarities([s1, np.zeros((3, 3))], [0.5, 0.5])
    with pytest.raises(ValueError, match="no similarity"):
        combine_similarities([], [])


def test_label_matrix():
    y = label_matrix(np.array([2, 0, 1]), 3)
    assert y.tolist() == [[0, 1, 0], [0, 0, 0], [1, 0, 0]]


def test_closed_two_node_hand_oracle():
    s = np.array([[0.0, 1.0], [1.0, 0.0]])
    y = np.array([[1.0, 0.0], [0.0, 0.0]])
    f = propagate_closed(s, y, PropagationConfig(lam=1.0))  # alpha = 1/2
    assert np.max(np.abs(f[:, 0] - closed_form_two_node())) < 1e-12
    assert np.max(np.abs(f[:, 1])) < 1e-12
    assert assign_labels(f).labels.tolist() == [1, 1]


def test_closed_decoupled_nodes():
    y = label_matrix(np.array([1, 2, 0]), 2)
    cfg = PropagationConfig(lam=2.0)  # alpha = 1/3
    f = propagate_closed(np.zeros((3, 3)), y, cfg)
    assert np.allclose(f, (2.0 / 3.0) * y)
    labels = assign_labels(f).labels
    assert labels.tolist()[:2] == [1, 2]


def test_closed_zero_labels():
    f = propagate_closed(np.zeros((3, 3)), np.zeros((3, 2)),
                         PropagationConfig())
    assert np.array_equal(f, np.zeros((3, 2)))


def test_iterative_agreement_two_node():
    s = np.array([[0.0, 1.0], [1.0, 0.0]])
    y = np.array([[1.0, 0.0], [0.0, 0.0]])
    cfg = PropagationConfig(lam=1.0, tol=1e-10, max_iter=10_000)
    f_iter = propagate_iterative(s, y, cfg)
    f_closed = propagate_closed(s, y, cfg)
    assert np.max(np.abs(f_iter - f_closed)) < 1e-8


def test_iterative_decoupled_converges_immediately():
    y = np.array([[1.0, 0.0], [0.0, 1.0]])
    cfg = PropagationConfig(lam=2.0, tol=1e-6)
    f = propagate_iterative(np.zeros((2, 2)), y, cfg)
    assert np.allclose(f, (2.0 / 3.0) * y)


def test_small_alpha_pins_seeds():
    rng = np.random.default_rng(0)
    s = _random_normalized(rng, 30)
    y = label_matrix(rng.integers(1, 4, size=30), 3)
    f = propagate(s, y, PropagationConfig(lam=99.0))  # alpha = 0.01
    assert np.max(np.abs(f - 0.99 * y)) < 0.02
    assert np.array_equal(assign_labels(f).labels, y.argmax(axis=1) + 1)


def test_iterative_max_iter_error():
    s = np.array([[0.0, 1.0], [1.0, 0.0]])
    y = np.array([[1.0, 0.0], [0.0, 0.0]])
    cfg = PropagationConfig(lam=1.0, tol=1e-14, max_iter=3)
    with pytest.raises(ConvergenceError) as info:
        propagate_iterative(s, y, cfg)
    err = info.value
    assert err.best is not None and err.best.shape == (2, 2)
    assert err.residual > 0
    assert err.n_iter == 3


def test_propagate_dispatch():
    rng = np.random.default_rng(1)
    s = _random_normalized(rng, 20)
    y = label_matrix(rng.integers(0, 3, size=20), 2)
    tight = PropagationConfig(lam=2.0, tol=1e-12, max_iter=50_000)
    f_closed = propagate(s, y, PropagationConfig(lam=2.0, solver="closed"))
    f_iter = propagate(s, y, tight if tight.solver == "iterative" else
                       PropagationConfig(lam=2.0, solver="iterative",
                                         tol=1e-12, max_iter=50_000))
    f_auto = propagate(s, y, PropagationConfig(lam=2.0, solver="auto"))
    assert np.max(np.abs(f_iter - f_closed)) < 1e-10
    assert np.array_equal(f_auto, f_closed)
    # auto above the size threshold takes the iterative branch
    tiny = PropagationConfig(lam=2.0, solver="auto", closed_max_n=2,
                             max_iter=2, tol=0.0)
    with pytest.raises(ConvergenceError):
        propagate(s, y, tiny)


def test_closed_iterative_agreement_random():
    rng = np.random.default_rng(2)
    for _ in range(5):
        n = int(rng.integers(20, 120))
        s = _random_normalized(rng, n)
        y = label_matrix(rng.integers(0, 7, size=n), 6)
        cfg = PropagationConfig(lam=2.0, tol=1e-9, max_iter=5000)
        f_closed = propagate_closed(s, y, cfg)
        f_iter = propagate_iterative(s, y, cfg)
        assert np.max(np.abs(f_closed - f_iter)) < 1e-8


def test_assign_labels_rules():
    res = assign_labels(np.array([[0.2, 0.5, 0.3],
                                  [0.5, 0.5, 0.0],
                                  [0.0, 0.0, 0.0]]))
    assert res.labels.tolist() == [2, 1, 1]
    assert res.flags == ["", FLAG_TIE, FLAG_UNREACHABLE]


def test_assign_labels_nan():
    with pytest.raises(ValueError, match="NaN"):
        assign_labels(np.array([[np.nan, 0.0]]))


def test_assign_labels_scale_invariant():
    rng = np.random.default_rng(3)
    f = rng.random((40, 5))
    f[5] = 0.0
    a = assign_labels(f)
    b = assign_labels(3.7 * f)
    assert np.array_equal(a.labels, b.labels)
    assert a.flags == b.flags


def test_seed_dominance_zero_similarity():
    seeds = np.array([3, 1, 0, 2])
    y = label_matrix(seeds, 3)
    f = propagate(np.zeros((4, 4)), y, PropagationConfig())
    labels = assign_labels(f).labels
    assert (labels[seeds > 0] == seeds[seeds > 0]).all()


def test_second_seed_never_hurts_its_class():
    # adding a class-1 seed connected to node 3 must not lower F(3, 0)
    rng = np.random.default_rng(4)
    s = _random_normalized(rng, 6)
    base = np.array([1, 0, 2, 0, 0, 0])
    more = np.array([1, 1, 2, 0, 0, 0])
    cfg = PropagationConfig(lam=2.0)
    f_base = propagate(s, label_matrix(base, 2), cfg)
    f_more = propagate(s, label_matrix(more, 2), cfg)
    assert f_more[3, 0] >= f_base[3, 0]
    assert (f_more[:, 0] >= f_base[:, 0] - 1e-15).all()


def test_spectral_radius_estimate():
    s = np.array([[0.0, 1.0], [1.0, 0.0]])
    est = spectral_radius_estimate(lambda v: s @ v, 2, max_iter=50)
    assert 0.99 <= est <= 1.0 + 1e-12
    assert spectral_radius_estimate(lambda v: np.zeros(3), 3) == 0.0
    rng = np.random.default_rng(5)
    for _ in range(5):
        n = int(rng.integers(5, 40))
        m = rng.standard_normal((n, n))
        m = (m + m.T) / 2.0
        est = spectral_radius_estimate(lambda v: m @ v, n, max_iter=200)
        true = float(np.max(np.abs(np.linalg.eigvalsh(m))))
        assert est <= true + 1e-9          # Rayleigh quotient lower bound
        assert est >= 0.5 * true           # and not wildly loose
