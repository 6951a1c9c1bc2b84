import numpy as np
import pytest

from npg.clime import (ClimeSettings, clime_column, clime_path, clime_raw, clime_solve,
                       clime_weights, hard_threshold, symmetrize_min_magnitude)
from npg.errors import InvalidInput, PilotRequired
from npg.rank_corr import rank_correlation_matrix

from conftest import chain_corr
from oracles import l1_tube_by_vertices


def random_r(seed, n=80, p=5):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, p)) @ rng.standard_normal((p, p))
    return rank_correlation_matrix(x)


def test_identity_column():
    for k in range(4):
        np.testing.assert_allclose(clime_column(np.eye(4), k, 0.3), 0.7 * np.eye(4)[k],
                                   atol=1e-12)


def test_identity_large_lambda_zero():
    assert np.all(clime_column(np.eye(4), 1, 1.0) == 0)


def test_zero_lambda_inverse():
    r = random_r(0, p=4).r_adjusted
    inv = np.linalg.inv(r)
    for k in range(4):
        np.testing.assert_allclose(clime_column(r, k, 0.0), inv[:, k], atol=1e-7)


@pytest.mark.parametrize("seed", range(4))
def test_column_matches_vertex_enumeration(seed):
    r = random_r(seed, p=4).r_adjusted
    for k in range(4):
        col = clime_column(r, k, 0.1)
        ref, _ = l1_tube_by_vertices(r, np.eye(4)[k], np.full(4, 0.1))
        assert np.abs(col).sum() == pytest.approx(ref, abs=1e-8)


def test_solve_identity_plain():
    est = clime_solve(np.eye(4), ClimeSettings(0.3))
    np.testing.assert_allclose(est.theta, 0.7 * np.eye(4), atol=1e-12)
    assert est.estimator == "CLIME"


def test_solve_population_model():
    sigma, theta = chain_corr(3)
    np.testing.assert_allclose(clime_solve(sigma, ClimeSettings(0.0)).theta, theta, atol=1e-7)


def test_hard_threshold_all_offdiagonal():
    est = clime_solve(random_r(1), ClimeSettings(0.05))
    theta = est.theta
    off = ~np.eye(5, dtype=bool)
    tau = 2 * np.max(np.abs(theta[off]))
    cut = hard_threshold(theta, tau)
    assert np.all(cut[off] == 0)
    np.testing.assert_array_equal(np.diag(cut), np.diag(theta))
    est2 = clime_solve(random_r(1), ClimeSettings(0.05, hard_threshold=tau))
    np.testing.assert_array_equal(est2.theta, cut)


def test_min_magnitude_examples():
    out = symmetrize_min_magnitude(np.array([[1.0, 0.5], [0.2, 1.0]]))
    assert out[0, 1] == out[1, 0] == 0.2
    s = random_r(2).r_adjusted
    np.testing.assert_array_equal(symmetrize_min_magnitude(s), s)
    tie = symmetrize_min_magnitude(np.array([[1.0, -0.3], [0.3, 1.0]]))
    assert tie[0, 1] == tie[1, 0] == -0.3


def test_min_magnitude_property():
    rng = np.random.default_rng(3)
    for _ in range(20):
        t = rng.standard_normal((6, 6))
        out = symmetrize_min_magnitude(t)
        for i in range(6):
            for j in range(6):
                if i == j:
                    continue
                small = t[i, j] if abs(t[i, j]) <= abs(t[j, i]) else t[j, i]
                assert abs(out[i, j]) == min(abs(t[i, j]), abs(t[j, i]))
                assert np.sign(out[i, j]) == np.sign(small)


def test_feasibility_plain_and_weighted():
    rd = random_r(4, n=150, p=10)
    r = rd.r_adjusted
    for lam in (0.02, 0.1, 0.3):
        raw, _ = clime_raw(r, lam)
        assert np.max(np.abs(r @ raw - np.eye(10))) <= lam + 1e-8
    pilot, _ = clime_raw(r, 0.1)
    W = clime_weights(pilot, rd.n)
    raw, _ = clime_raw(r, 0.005, W)
    assert np.all(np.abs(r @ raw - np.eye(10)) <= 0.005 * W + 1e-8)


def test_column_order_independent():
    r = random_r(5, n=100, p=8).r_adjusted
    raw, _ = clime_raw(r, 0.05)
    for k in np.random.default_rng(0).permutation(8):
        np.testing.assert_array_equal(clime_column(r, int(k), 0.05), raw[:, k])


def test_path_matches_cold_solves():
    r = random_r(6, n=100, p=8).r_adjusted
    lams = [0.4, 0.1, 0.02]
    for lam, warm in zip(lams, clime_path(r, lams)):
        cold, _ = clime_raw(r, lam)
        np.testing.assert_allclose(np.abs(warm).sum(axis=0), np.abs(cold).sum(axis=0),
                                   atol=1e-9)


def test_adaptive_requires_pilot():
    with pytest.raises(PilotRequired):
        ClimeSettings(0.1, adaptive=True)
    with pytest.raises(InvalidInput):
        ClimeSettings(-0.1)


def test_adaptive_population_sign_recovery():
    sigma, theta = chain_corr(10)
    est = clime_solve(sigma, ClimeSettings(0.002, adaptive=True, lambda_pilot=0.05), n=300)
    off = ~np.eye(10, dtype=bool)
    np.testing.assert_array_equal(np.sign(est.theta[off]), np.sign(theta[off]))
    assert est.estimator == "ACLIME"


def test_weights_from_symmetrized_flag():
    rd = random_r(7, n=100, p=6)
    a = clime_solve(rd, ClimeSettings(0.01, adaptive=True, lambda_pilot=0.1))
    b = clime_solve(rd, ClimeSettings(0.01, adaptive=True, lambda_pilot=0.1,
                                      weights_from_symmetrized=True))
    raw, _ = clime_raw(rd.r_adjusted, 0.1)
    np.testing.assert_array_equal(a.meta["weights"], clime_weights(raw, rd.n))
    np.testing.assert_array_equal(b.meta["weights"],
                                  clime_weights(symmetrize_min_magnitude(raw), rd.n))


def test_monotone_invariance_end_to_end():
    rng = np.random.default_rng(8)
    x = rng.standard_normal((60, 5)) @ rng.standard_normal((5, 5))
    g = np.exp(x) + x ** 3
    s = ClimeSettings(0.02, adaptive=True, lambda_pilot=0.1)
    a = clime_solve(rank_correlation_matrix(x), s)
    b = clime_solve(rank_correlation_matrix(g), s)
    np.testing.assert_array_equal(a.theta, b.theta)
