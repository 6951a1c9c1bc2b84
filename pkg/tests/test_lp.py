import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from npg.errors import DimensionMismatch, InvalidInput, LPError
from npg.lp import (L1ConstrainedProblem, LpStatus, TubeSolver, solve_l1_tube,
                    solve_standard_form)

from oracles import l1_tube_by_vertices, standard_form_by_bases


def random_tube(rng, q, m, weighted=False):
    A = rng.standard_normal((m, q))
    beta0 = rng.standard_normal(q) * (rng.random(q) < 0.6)
    t = rng.uniform(0.05, 0.8, m)
    b = A @ beta0 + rng.uniform(-1, 1, m) * t
    w = rng.uniform(0.2, 3.0, q) if weighted else None
    return A, b, t, w


def test_standard_form_examples():
    sol = solve_standard_form([-1.0, 0.0], [[1.0, 1.0]], [1.0])
    assert sol.optimal
    np.testing.assert_allclose(sol.x, [1.0, 0.0])
    assert sol.objective == pytest.approx(-1.0)
    sol = solve_standard_form([1.0, 1.0], [[1.0, -1.0]], [2.0])
    np.testing.assert_allclose(sol.x, [2.0, 0.0])
    assert sol.objective == pytest.approx(2.0)


def test_standard_form_infeasible_and_unbounded():
    assert solve_standard_form([1.0, 1.0], [[1.0, 1.0]], [-1.0]).status is LpStatus.INFEASIBLE
    assert solve_standard_form([-1.0, 0.0], [[1.0, -1.0]], [1.0]).status is LpStatus.UNBOUNDED
    with pytest.raises(LPError):
        solve_standard_form([1.0, 1.0], [[1.0, 1.0]], [-1.0]).raise_for_status()


def test_standard_form_redundant_rows():
    A = np.array([[1.0, 1.0, 1.0], [2.0, 2.0, 2.0]])
    sol = solve_standard_form([1.0, 2.0, 3.0], A, [1.0, 2.0])
    assert sol.optimal
    assert sol.objective == pytest.approx(1.0)


def test_standard_form_matches_basis_enumeration(rng):
    checked = 0
    for _ in range(60):
        A = rng.standard_normal((5, 8))
        b = A @ rng.uniform(0, 1, 8)
        c = rng.uniform(-1, 2, 8) + 0.0
        c += np.abs(c.min()) * (rng.random() < 0.5)
        ref, _ = standard_form_by_bases(c, A, b)
        sol = solve_standard_form(c, A, b)
        if np.isinf(ref) or sol.status is LpStatus.UNBOUNDED:
            continue
        assert sol.optimal
        assert sol.objective == pytest.approx(ref, abs=1e-7)
        assert np.max(np.abs(A @ sol.x - b)) < 1e-8
        assert np.all(sol.x >= -1e-9)
        checked += 1
    assert checked > 20


def test_tube_examples():
    for method in ("dual", "primal"):
        sol = solve_l1_tube(L1ConstrainedProblem(np.eye(3), [1.0, 0.0, 0.0], 0.4), method)
        np.testing.assert_allclose(sol.x, [0.6, 0.0, 0.0], atol=1e-12)
        assert sol.objective == pytest.approx(0.6)


def test_tube_zero_fast_path():
    sol = solve_l1_tube(L1ConstrainedProblem(np.eye(2), [0.3, -0.2], [0.3, 0.5]))
    assert sol.optimal and sol.iterations == 0
    assert np.array_equal(sol.x, np.zeros(2))


def test_tube_zero_width_inverts(rng):
    A = rng.standard_normal((4, 4)) + 3 * np.eye(4)
    b = rng.standard_normal(4)
    for method in ("dual", "primal"):
        sol = solve_l1_tube(L1ConstrainedProblem(A, b, 0.0), method)
        np.testing.assert_allclose(sol.x, np.linalg.solve(A, b), atol=1e-9)


def test_problem_validation():
    with pytest.raises(InvalidInput):
        L1ConstrainedProblem(np.eye(2), [1, 1], -0.1)
    with pytest.raises(InvalidInput):
        L1ConstrainedProblem(np.eye(2), [1, 1], 0.1, objective_weights=[1.0, 0.0])
    with pytest.raises(DimensionMismatch):
        L1ConstrainedProblem(np.eye(2), [1, 1, 1], 0.1)


def test_infeasible_tube_reports_status():
    A = np.array([[1.0], [1.0]])
    sol = solve_l1_tube(L1ConstrainedProblem(A, [1.0, -1.0], 0.1))
    assert sol.status is LpStatus.INFEASIBLE


def test_oracle_equivalence_weighted(rng):
    for _ in range(40):
        q, m = rng.integers(1, 7, size=2)
        A, b, t, w = random_tube(rng, q, m, weighted=True)
        ref, _ = l1_tube_by_vertices(A, b, t, w)
        for method in ("dual", "primal"):
            sol = solve_l1_tube(L1ConstrainedProblem(A, b, t, w), method)
            if np.isinf(ref):
                assert sol.status is LpStatus.INFEASIBLE
            else:
                assert sol.objective == pytest.approx(ref, abs=1e-7)


def test_dantzig_rule_agrees(rng):
    for _ in range(20):
        A, b, t, _ = random_tube(rng, 6, 6)
        a = solve_l1_tube(L1ConstrainedProblem(A, b, t), rule="bland")
        d = solve_l1_tube(L1ConstrainedProblem(A, b, t), rule="dantzig")
        assert a.objective == pytest.approx(d.objective, abs=1e-9)


def test_warm_path_matches_cold(rng):
    A = rng.standard_normal((10, 12))
    b = rng.standard_normal(10)
    solver = TubeSolver(A, b)
    for lam in np.geomspace(np.abs(b).max(), 0.05, 15):
        warm = solver.solve(lam)
        cold = solve_l1_tube(L1ConstrainedProblem(A, b, lam))
        assert warm.objective == pytest.approx(cold.objective, abs=1e-8)
        assert np.max(np.abs(A @ warm.x - b)) <= lam + 1e-8


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), c=st.floats(0.1, 20.0))
def test_homogeneity(seed, c):
    rng = np.random.default_rng(seed)
    A, b, t, _ = random_tube(rng, 5, 5)
    s1 = solve_l1_tube(L1ConstrainedProblem(A, b, t))
    s2 = solve_l1_tube(L1ConstrainedProblem(A, c * b, c * t))
    if s1.optimal:
        np.testing.assert_allclose(s2.x, c * s1.x, atol=1e-9 * max(1.0, c))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1))
def test_local_vertex_optimality(seed):
    rng = np.random.default_rng(seed)
    A, b, t, w = random_tube(rng, 4, 5, weighted=True)
    sol = solve_l1_tube(L1ConstrainedProblem(A, b, t, w))
    if not sol.optimal:
        return
    assert np.all(np.abs(A @ sol.x - b) <= t + 1e-9)
    for j in range(4):
        for d in (1e-4, -1e-4):
            x = sol.x.copy()
            x[j] += d
            feasible = np.all(np.abs(A @ x - b) <= t + 1e-12)
            if feasible:
                assert w @ np.abs(x) >= sol.objective - 1e-6
