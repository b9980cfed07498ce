import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eqhomotopy.catalog import builtin_example
from eqhomotopy.economy import compute_equilibrium
from eqhomotopy.ncp import fd_jacobian
from eqhomotopy.oracles import (
    LcpInstance,
    NewtonFailure,
    lcp_enumerate,
    newton_square_solve,
    normalized_equilibrium_system,
)


class TestLcpEnumerate:
    def test_interior(self):
        sols = lcp_enumerate(LcpInstance([[1.0]], [-1.0]))
        assert len(sols) == 1
        np.testing.assert_allclose(sols[0], [1.0])

    def test_boundary(self):
        sols = lcp_enumerate(LcpInstance([[1.0]], [2.0]))
        assert len(sols) == 1
        np.testing.assert_array_equal(sols[0], [0.0])

    def test_two_by_two(self):
        sols = lcp_enumerate(LcpInstance([[2.0, 0.0], [0.0, 2.0]], [-2.0, 1.0]))
        assert len(sols) == 1
        np.testing.assert_allclose(sols[0], [1.0, 0.0])

    def test_multiple_solutions(self):
        # f(x) = 1 - x: both x = 0 and x = 1 solve the LCP
        sols = lcp_enumerate(LcpInstance([[-1.0]], [1.0]))
        assert sorted(float(s[0]) for s in sols) == [0.0, 1.0]

    def test_singular_submatrix_skipped(self):
        sols = lcp_enumerate(LcpInstance([[0.0, 0.0], [0.0, 1.0]], [1.0, -1.0]))
        assert len(sols) == 1
        np.testing.assert_allclose(sols[0], [0.0, 1.0])

    def test_size_limit(self):
        with pytest.raises(ValueError):
            LcpInstance(np.eye(15), np.ones(15))

    def test_shape_check(self):
        with pytest.raises(ValueError):
            LcpInstance(np.eye(2), np.ones(3))


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), n=st.integers(1, 5))
def test_enumerated_solutions_are_complementary(seed, n):
    rng = np.random.default_rng(seed)
    inst = LcpInstance(rng.normal(size=(n, n)), rng.normal(size=n))
    for x in lcp_enumerate(inst):
        w = inst.M @ x + inst.q
        assert np.all(x >= 0)
        assert np.all(w >= -1e-9)
        assert abs(x @ w) <= 1e-8 * (1 + np.abs(x).sum() * np.abs(w).sum())


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), n=st.integers(1, 5))
def test_positive_definite_lcp_has_unique_solution(seed, n):
    rng = np.random.default_rng(seed)
    B = rng.normal(size=(n, n))
    M = B @ B.T + 0.1 * np.eye(n)
    assert len(lcp_enumerate(LcpInstance(M, rng.normal(size=n)))) == 1


class TestNewtonSquareSolve:
    def test_affine_one_step(self):
        A = np.array([[3.0, 1.0], [1.0, 2.0]])
        b = np.array([1.0, -1.0])
        calls = []

        def F(x):
            calls.append(1)
            return A @ x - b

        x = newton_square_solve(F, lambda x: A, np.zeros(2))
        np.testing.assert_allclose(x, np.linalg.solve(A, b), atol=1e-12)
        assert len(calls) == 2

    def test_scalar_quadratic(self):
        x = newton_square_solve(lambda x: x ** 2 - 2, lambda x: np.diag(2 * x), np.array([1.0]), tol=1e-15)
        assert x[0] == pytest.approx(np.sqrt(2), abs=1e-12)

    def test_singular(self):
        with pytest.raises(NewtonFailure):
            newton_square_solve(lambda x: x ** 2 + 1, lambda x: np.diag(2 * x), np.array([0.0]))

    def test_iteration_cap(self):
        with pytest.raises(NewtonFailure):
            newton_square_solve(lambda x: x ** 2 + 1, lambda x: np.diag(2 * x), np.array([3.0]), max_iter=5)


class TestNormalizedSystem:
    def test_ex1_symmetric(self):
        sys = normalized_equilibrium_system(builtin_example("ex1"))
        p = newton_square_solve(sys.F, sys.jac, np.array([0.45, 0.55]))
        np.testing.assert_allclose(p, [0.5, 0.5], atol=1e-10)

    def test_ex4_matches_homotopy(self):
        model = builtin_example("ex4")
        sys = normalized_equilibrium_system(model, active=[0])
        z = newton_square_solve(sys.F, sys.jac, np.array([0.45, 0.1, 0.45, 2.5]))
        r = compute_equilibrium(model)
        np.testing.assert_allclose(z[:3], r.prices, atol=1e-6)
        np.testing.assert_allclose(z[3:], r.activities, atol=1e-6)

    def test_jacobian_matches_finite_differences(self):
        model = builtin_example("ex3")
        sys = normalized_equilibrium_system(model, active=[4, 6])
        z = np.array([0.3, 0.2, 0.3, 0.2, 4.0, 5.0])
        np.testing.assert_allclose(sys.jac(z), fd_jacobian(sys.F, z), atol=1e-6)
