import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import digamma

from gesthmm.errors import (
    AlphabetMismatchError,
    DegenerateSequenceError,
    EmptyDatasetError,
    InvalidDimensionsError,
)
from gesthmm.hmm import HmmPointParams, ObsSeq, sample_sequence
from gesthmm.vb import (
    DirichletHmm,
    VbConfig,
    accumulate_counts,
    dirichlet_mean,
    expected_counts,
    geometric_params,
    learn_class,
    learn_shared_prior,
    uninformative_prior,
    vb_fit,
    vb_fit_trace,
)

from conftest import random_params
from oracles import brute_force_counts


def random_dh(rng, M, N, scale=3.0):
    return DirichletHmm(
        rng.random((M, M)) * scale + 0.1, rng.random((N, M)) * scale + 0.1, rng.random(M) * scale + 0.1
    )


def test_uninformative_prior():
    dh = uninformative_prior(2, 3, 1.0)
    np.testing.assert_array_equal(dh.hA, np.ones((2, 2)))
    np.testing.assert_array_equal(dh.hC, np.ones((3, 2)))
    np.testing.assert_array_equal(dh.hpi, np.ones(2))
    m = dirichlet_mean(dh)
    np.testing.assert_allclose(m.C, np.full((3, 2), 1 / 3))
    np.testing.assert_allclose(m.A, np.full((2, 2), 0.5))
    with pytest.raises(InvalidDimensionsError):
        uninformative_prior(2, 3, 0.0)
    with pytest.raises(InvalidDimensionsError):
        uninformative_prior(0, 3, 1.0)


def test_dirichlet_mean_columns():
    dh = DirichletHmm(
        [[2.0, 1.0, 1.0], [2.0, 1.0, 1.0], [4.0, 1.0, 1.0]],
        [[5.0, 1.0, 1.0], [1.0, 1.0, 1.0]],
        [1.0, 1.0, 1.0],
    )
    m = dirichlet_mean(dh)
    np.testing.assert_allclose(m.C[:, 0], [5 / 6, 1 / 6])
    np.testing.assert_allclose(m.A[:, 0], [0.25, 0.25, 0.5])
    np.testing.assert_allclose(m.A.sum(axis=0), 1, atol=1e-12)


def test_geometric_params_examples():
    assert math.isclose(digamma(1.0), -0.5772156649015329)
    assert math.isclose(digamma(2.0), 0.42278433509846713)
    g = geometric_params(uninformative_prior(2, 2, 1.0))
    np.testing.assert_allclose(g.C, np.full((2, 2), math.exp(-1)), rtol=1e-12)
    assert g.C[:, 0].sum() == pytest.approx(0.7357588823428847)
    one = geometric_params(DirichletHmm([[3.7]], [[2.0], [5.0]], [0.4]))
    assert one.A[0, 0] == pytest.approx(1.0, abs=1e-15)
    assert one.pi[0] == pytest.approx(1.0, abs=1e-15)


def test_geometric_approaches_mean():
    mean = np.array([[0.2], [0.3], [0.5]])
    dh = DirichletHmm([[1.0]], 1e4 * mean, [1.0])
    np.testing.assert_allclose(geometric_params(dh).C, mean, atol=1e-3)


def test_geometric_columns_sub_stochastic(rng):
    for _ in range(20):
        g = geometric_params(random_dh(rng, 3, 4))
        assert np.all(g.A.sum(axis=0) <= 1) and np.all(g.C.sum(axis=0) <= 1) and g.pi.sum() <= 1


def test_expected_counts_single_step():
    point = HmmPointParams(np.eye(2), [[0.9, 0.1], [0.1, 0.9]], [0.5, 0.5])
    s = expected_counts(ObsSeq([1], 2), point)
    np.testing.assert_allclose(s.wpi, [0.9, 0.1])
    np.testing.assert_array_equal(s.WA, 0)
    np.testing.assert_allclose(s.WC[0], [0.9, 0.1])
    np.testing.assert_array_equal(s.WC[1], 0)


def test_expected_counts_single_state():
    point = HmmPointParams([[1.0]], [[0.2], [0.5], [0.3]], [1.0])
    y = ObsSeq([1, 3, 3, 2, 3], 3)
    s = expected_counts(y, point)
    np.testing.assert_allclose(s.wpi, [1.0])
    np.testing.assert_allclose(s.WA, [[4.0]])
    np.testing.assert_allclose(s.WC[:, 0], [1, 1, 3])


def test_expected_counts_match_enumeration(rng):
    for _ in range(20):
        point = geometric_params(random_dh(rng, 3, 4))
        y = ObsSeq(rng.integers(1, 5, size=5), 4)
        s = expected_counts(y, point)
        wpi, WA, WC, logZ = brute_force_counts(y, point)
        np.testing.assert_allclose(s.wpi, wpi, atol=1e-9)
        np.testing.assert_allclose(s.WA, WA, atol=1e-9)
        np.testing.assert_allclose(s.WC, WC, atol=1e-9)
        assert s.log_norm == pytest.approx(logZ, abs=1e-9)


def test_expected_counts_errors():
    point = HmmPointParams(np.eye(2), np.eye(2), [1.0, 0.0])
    with pytest.raises(DegenerateSequenceError):
        expected_counts(ObsSeq([2], 2), point)
    with pytest.raises(AlphabetMismatchError):
        expected_counts(ObsSeq([1], 3), point)


def test_count_conservation_multi_sequence(rng):
    point = geometric_params(random_dh(rng, 4, 3))
    data = [ObsSeq(rng.integers(1, 4, size=T), 3) for T in (3, 7, 1, 12)]
    s = accumulate_counts(data, point)
    assert s.wpi.sum() == pytest.approx(4, abs=1e-8)
    assert s.WA.sum() == pytest.approx(sum(len(y) - 1 for y in data), abs=1e-8)
    assert s.WC.sum() == pytest.approx(sum(len(y) for y in data), abs=1e-8)


def test_vb_fit_single_state_closed_form():
    prior = uninformative_prior(1, 2, 1.0)
    post, deltas = vb_fit_trace([ObsSeq([1, 1, 1, 1], 2)], prior, VbConfig())
    np.testing.assert_array_equal(post.hpi, [2.0])
    np.testing.assert_array_equal(post.hA, [[4.0]])
    np.testing.assert_array_equal(post.hC[:, 0], [5.0, 1.0])
    # the first update already lands on the fixed point
    assert deltas[1] == 0.0 and len(deltas) == 2


def test_vb_fit_errors():
    with pytest.raises(EmptyDatasetError):
        vb_fit([], uninformative_prior(2, 2))
    with pytest.raises(AlphabetMismatchError):
        vb_fit([ObsSeq([1], 3)], uninformative_prior(2, 2))


def test_prior_dominance():
    prior = DirichletHmm(np.full((2, 2), 1e6), np.full((3, 2), 1e6) * [[1], [2], [3]], np.full(2, 1e6))
    post = vb_fit([ObsSeq([1, 2, 1], 3)], prior)
    a, b = dirichlet_mean(post), dirichlet_mean(prior)
    for x, y in ((a.A, b.A), (a.C, b.C), (a.pi, b.pi)):
        np.testing.assert_allclose(x, y, atol=1e-4)


def test_shared_prior_single_state_reduction():
    y = ObsSeq([1, 1, 1, 1], 2)
    assert learn_shared_prior([y], 1) == vb_fit([y], uninformative_prior(1, 2))


def test_shared_prior_count_conservation(rng):
    data = [ObsSeq(rng.integers(1, 4, size=T), 3) for T in (5, 9, 13)]
    post = learn_shared_prior(data, 3, VbConfig(max_iters=5))
    prior = uninformative_prior(3, 3)
    assert post.hC.sum() - prior.hC.sum() == pytest.approx(27, abs=1e-8)
    assert post.hA.sum() - prior.hA.sum() == pytest.approx(24, abs=1e-8)
    assert post.hpi.sum() - prior.hpi.sum() == pytest.approx(3, abs=1e-8)


def test_shared_prior_duplicate_sequences_double_counts():
    y = ObsSeq([1, 2, 2, 1, 2], 2)
    twice = learn_shared_prior([y, y], 1)
    prior = uninformative_prior(1, 2)
    once = learn_shared_prior([y], 1)
    np.testing.assert_allclose(twice.hC - prior.hC, 2 * (once.hC - prior.hC))
    np.testing.assert_allclose(twice.hA - prior.hA, 2 * (once.hA - prior.hA))


def test_learn_class():
    prior = uninformative_prior(1, 2)
    assert learn_class(prior, [], VbConfig()) is prior
    post = learn_class(prior, [ObsSeq([1, 1, 1, 1], 2)])
    np.testing.assert_array_equal(post.hC[:, 0], [5.0, 1.0])


def test_learn_class_monotone(rng):
    prior = random_dh(rng, 3, 4)
    data = [ObsSeq(rng.integers(1, 5, size=8), 4) for _ in range(3)]
    post = learn_class(prior, data, VbConfig(max_iters=20))
    assert np.all(post.hA >= prior.hA) and np.all(post.hC >= prior.hC) and np.all(post.hpi >= prior.hpi)


def test_fixed_point_sanity(rng):
    true = random_params(rng, 2, 3)
    data = [sample_sequence(true, 20, s) for s in range(3)]
    prior = uninformative_prior(2, 3)
    cfg = VbConfig(max_iters=500, tol=1e-6)
    post, deltas = vb_fit_trace(data, prior, cfg)
    assert deltas[-1] < cfg.tol
    again = prior + accumulate_counts(data, geometric_params(post))
    assert again.max_abs_diff(post) < cfg.tol


def test_deterministic_given_seed(rng):
    data = [ObsSeq(rng.integers(1, 4, size=10), 3) for _ in range(2)]
    prior = uninformative_prior(3, 3)
    assert vb_fit(data, prior, VbConfig(seed=4)) == vb_fit(data, prior, VbConfig(seed=4))


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_permutation_symmetry(seed):
    rng = np.random.default_rng(seed)
    prior = random_dh(rng, 3, 3)
    data = [ObsSeq(rng.integers(1, 4, size=6), 3) for _ in range(2)]
    perm = rng.permutation(3)
    cfg = VbConfig(jitter=0.0, max_iters=30)
    lhs = vb_fit(data, prior.permuted(perm), cfg)
    rhs = vb_fit(data, prior, cfg).permuted(perm)
    for x, y in ((lhs.hA, rhs.hA), (lhs.hC, rhs.hC), (lhs.hpi, rhs.hpi)):
        np.testing.assert_allclose(x, y, rtol=1e-9, atol=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_single_state_is_exact_conjugate_update(seed):
    rng = np.random.default_rng(seed)
    N = 4
    prior = DirichletHmm([[rng.random() + 0.5]], rng.random((N, 1)) + 0.5, [rng.random() + 0.5])
    data = [ObsSeq(rng.integers(1, N + 1, size=int(rng.integers(1, 15))), N) for _ in range(3)]
    post = vb_fit(data, prior)
    counts = np.zeros(N)
    for y in data:
        np.add.at(counts, y.index, 1)
    np.testing.assert_allclose(post.hC[:, 0], prior.hC[:, 0] + counts, rtol=1e-12)
    assert post.hA[0, 0] == pytest.approx(prior.hA[0, 0] + sum(len(y) - 1 for y in data), rel=1e-12)
    assert post.hpi[0] == pytest.approx(prior.hpi[0] + 3, rel=1e-12)
