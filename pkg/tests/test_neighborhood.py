import numpy as np
import pytest

from npg.base import GraphSelection
from npg.errors import NonpositiveResidual, SingularSubmatrix
from npg.neighborhood import (NeighborhoodFit, aggregate, l1_asymmetry, nads_fit, nads_solve,
                              nds_fit, nds_path, nds_solve, reconstruct_precision,
                              symmetrize_l1, symmetrize_min_magnitude)
from npg.rank_corr import rank_correlation_matrix

from conftest import chain_corr
from oracles import l1_tube_by_vertices, symmetric_l1_by_linprog


def random_r(seed, n=60, p=6):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, p)) @ rng.standard_normal((p, p))
    return rank_correlation_matrix(x)


def _sub(r, k):
    idx = np.delete(np.arange(r.shape[0]), k)
    return r[np.ix_(idx, idx)], r[idx, k]


def test_large_lambda_gives_zero():
    r = random_r(0).r_adjusted
    for k in range(r.shape[0]):
        _, rk = _sub(r, k)
        fit = nds_fit(r, k, float(np.max(np.abs(rk))))
        assert np.all(fit.beta == 0) and fit.support == ()


def test_zero_lambda_population_regression():
    sigma, _ = chain_corr(3)
    for k in range(3):
        Rk, rk = _sub(sigma, k)
        fit = nds_fit(sigma, k, 0.0)
        np.testing.assert_allclose(fit.beta, np.linalg.solve(Rk, rk), atol=1e-10)


def test_zero_lambda_singular_rejected():
    r = np.ones((3, 3))
    with pytest.raises(SingularSubmatrix):
        nds_fit(r, 0, 0.0)


@pytest.mark.parametrize("seed", range(5))
def test_matches_vertex_enumeration(seed):
    r = random_r(seed, p=5).r_adjusted
    lam = 0.1
    for k in range(5):
        Rk, rk = _sub(r, k)
        fit = nds_fit(r, k, lam)
        ref, _ = l1_tube_by_vertices(Rk, rk, np.full(4, lam))
        assert np.abs(fit.beta).sum() == pytest.approx(ref, abs=1e-8)


@pytest.mark.parametrize("seed", range(5))
def test_adaptive_matches_vertex_enumeration(seed):
    rd = random_r(seed, p=5)
    r = rd.r_adjusted
    for k in range(5):
        Rk, rk = _sub(r, k)
        fit = nads_fit(rd, k, 0.1, 0.02)
        ref, _ = l1_tube_by_vertices(Rk, rk, 0.02 * fit.weights, fit.weights)
        assert np.abs(fit.beta) @ fit.weights == pytest.approx(ref, rel=1e-8, abs=1e-8)


def test_feasibility_plain_and_weighted():
    rd = random_r(11, n=120, p=12)
    r = rd.r_adjusted
    for k in range(12):
        Rk, rk = _sub(r, k)
        for lam in (0.02, 0.1, 0.3):
            fit = nds_fit(r, k, lam)
            assert np.max(np.abs(Rk @ fit.beta - rk)) <= lam + 1e-8
        fit = nads_fit(rd, k, 0.1, 0.01)
        assert np.all(np.abs(Rk @ fit.beta - rk) <= 0.01 * fit.weights + 1e-8)


def test_objective_monotone_in_lambda():
    for seed in range(5):
        r = random_r(seed, n=100, p=10).r_adjusted
        lams = np.geomspace(0.5, 0.005, 15)
        path = nds_path(r, lams)
        for k in range(10):
            norms = [np.abs(path[a][k].beta).sum() for a in range(len(lams))]
            assert all(b >= a - 1e-9 for a, b in zip(norms, norms[1:]))


def test_path_matches_cold_fits():
    r = random_r(3, n=80, p=8).r_adjusted
    lams = [0.3, 0.1, 0.03]
    path = nds_path(r, lams)
    for a, lam in enumerate(lams):
        for k in range(8):
            cold = nds_fit(r, k, lam)
            assert np.abs(path[a][k].beta).sum() == pytest.approx(np.abs(cold.beta).sum(),
                                                                  abs=1e-9)


def test_zero_pilot_gives_uniform_weights():
    r = random_r(4).r_adjusted
    k = 2
    _, rk = _sub(r, k)
    pilot = nds_fit(r, k, float(np.max(np.abs(rk))))
    fit = nads_fit(r, k, None, 0.05, n=50, pilot=pilot)
    np.testing.assert_array_equal(fit.weights, np.full(r.shape[0] - 1, 50.0))


def test_adaptive_zero_feasible_gives_zero():
    rd = random_r(5)
    r = rd.r_adjusted
    for k in range(r.shape[0]):
        _, rk = _sub(r, k)
        pilot = nds_fit(r, k, 0.1)
        w = 1.0 / (np.abs(pilot.beta) + 1.0 / rd.n)
        lam_ad = float(np.max(np.abs(rk) / w))
        assert np.all(nads_fit(rd, k, 0.1, lam_ad).beta == 0)


def test_adaptive_population_sign_recovery():
    sigma, theta = chain_corr(3)
    for k in range(3):
        fit = nads_fit(sigma, k, 0.05, 0.01, n=300)
        Rk, rk = _sub(sigma, k)
        true = np.linalg.solve(Rk, rk)
        on = np.abs(true) > 1e-12
        np.testing.assert_array_equal(np.sign(fit.beta[on]), np.sign(true[on]))
        assert np.all(fit.beta[~on] == 0)


def test_reconstruct_zero_fits_is_identity():
    p = 4
    fits = [NeighborhoodFit(k, np.zeros(p - 1), (), 1.0) for k in range(p)]
    np.testing.assert_array_equal(reconstruct_precision(fits, np.eye(p)), np.eye(p))


def test_reconstruct_population_model():
    sigma, theta = chain_corr(3)
    fits = [nds_fit(sigma, k, 0.0) for k in range(3)]
    np.testing.assert_allclose(reconstruct_precision(fits, sigma), theta, atol=1e-8)


def test_reconstruct_sign_flip():
    r = np.array([[1.0, 0.5], [0.5, 1.0]])
    fits = [NeighborhoodFit(0, np.array([0.3]), (1,), 0.1),
            NeighborhoodFit(1, np.array([0.3]), (0,), 0.1)]
    theta = reconstruct_precision(fits, r)
    assert theta[1, 0] < 0 and theta[0, 1] < 0


def test_reconstruct_nonpositive_residual():
    # indefinite input: 1 * 1 - 2 * 0.9 + 0.8 = 0 for node 1
    r = np.array([[1.0, 0.9], [0.9, 0.8]])
    fits = [NeighborhoodFit(0, np.array([0.0]), (), 0.1),
            NeighborhoodFit(1, np.array([1.0]), (0,), 0.1)]
    with pytest.raises(NonpositiveResidual):
        reconstruct_precision(fits, r)


def test_symmetrize_symmetric_unchanged():
    s = random_r(6).r_adjusted
    np.testing.assert_array_equal(symmetrize_l1(s), s)


def test_symmetrize_two_by_two():
    theta = np.array([[1.0, 0.4], [0.2, 1.0]])
    out = symmetrize_l1(theta)
    assert np.array_equal(out, out.T)
    assert l1_asymmetry(out, theta) <= 0.1 + 1e-12


def test_symmetrize_antisymmetric_perturbation():
    s = np.array([[2.0, 0.5], [0.5, 2.0]])
    e = np.array([[0.0, 0.01], [-0.01, 0.0]])
    np.testing.assert_allclose(symmetrize_l1(s + e), s, atol=1e-12)


@pytest.mark.parametrize("seed", range(8))
def test_symmetrize_l1_optimal_and_beats_candidates(seed):
    rng = np.random.default_rng(seed)
    p = 4 + seed % 4
    theta = rng.standard_normal((p, p))
    theta[rng.random((p, p)) < 0.3] = 0.0
    out = symmetrize_l1(theta)
    assert np.array_equal(out, out.T)
    obj = l1_asymmetry(out, theta)
    assert obj == pytest.approx(symmetric_l1_by_linprog(theta), abs=1e-8)
    assert obj <= l1_asymmetry(0.5 * (theta + theta.T), theta) + 1e-12
    assert obj <= l1_asymmetry(symmetrize_min_magnitude(theta), theta) + 1e-12


def test_symmetrize_falls_back_above_limit(caplog):
    rng = np.random.default_rng(0)
    theta = rng.standard_normal((6, 6))
    with caplog.at_level("WARNING"):
        out = symmetrize_l1(theta, max_p=5)
    np.testing.assert_array_equal(out, symmetrize_min_magnitude(theta))
    assert "min-magnitude" in caplog.text


def test_aggregate_examples():
    sup = [(), (2,), ()]
    assert aggregate(sup, "union").edges == {(1, 2)}
    assert aggregate(sup, "intersection").edges == set()
    assert len(aggregate([(), (), ()], "union")) == 0
    both = [(1,), (0, 2), (1,)]
    assert aggregate(both, "union") == aggregate(both, "intersection")
    with pytest.raises(ValueError):
        aggregate(sup, "majority")


def test_intersection_subset_of_union():
    r = random_r(9, n=100, p=10).r_adjusted
    for lam in (0.3, 0.1, 0.03):
        fits = [nds_fit(r, k, lam) for k in range(10)]
        u = aggregate(fits, "union")
        i = aggregate(fits, "intersection")
        assert isinstance(u, GraphSelection)
        assert i.edges <= u.edges


def test_monotone_invariance_end_to_end():
    rng = np.random.default_rng(12)
    x = rng.standard_normal((80, 6)) @ rng.standard_normal((6, 6))
    g = np.column_stack([np.exp(x[:, 0]), x[:, 1] ** 3, np.arctan(x[:, 2]),
                         x[:, 3] + 5.0, 2.0 * x[:, 4], np.exp(x[:, 5] / 3.0)])
    a = nds_solve(rank_correlation_matrix(x), 0.1)
    b = nds_solve(rank_correlation_matrix(g), 0.1)
    np.testing.assert_array_equal(a.theta, b.theta)
    a = nads_solve(rank_correlation_matrix(x), 0.1, 0.02)
    b = nads_solve(rank_correlation_matrix(g), 0.1, 0.02)
    np.testing.assert_array_equal(a.theta, b.theta)
