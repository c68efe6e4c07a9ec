import numpy as np
import pytest

from indric import symlin
from indric.errors import NonSquare, NotPositiveDefinite

from helpers import rand_spd, rand_sym


def test_min_eigenvalue_examples():
    assert symlin.min_eigenvalue(np.diag([2.0, 3.0])) == pytest.approx(2.0, abs=1e-10)
    assert symlin.min_eigenvalue(np.array([[0.0, 1.0], [1.0, 0.0]])) == pytest.approx(
        -1.0, abs=1e-10
    )
    assert symlin.min_eigenvalue(np.array([[2.0, 1.0], [1.0, 2.0]])) == pytest.approx(
        1.0, abs=1e-10
    )


def test_is_definite_examples():
    assert symlin.is_definite(np.eye(3), 0.5)
    assert not symlin.is_definite(np.zeros((2, 2)), 1e-9)
    assert not symlin.is_definite(np.array([[1.0, 2.0], [2.0, 1.0]]), 0.0)


def test_solve_definite_examples():
    b = np.array([[1.0, 2.0], [3.0, 4.0]])
    np.testing.assert_array_equal(symlin.solve_definite(np.eye(2), b), b)
    np.testing.assert_allclose(
        symlin.solve_definite(2.0 * np.eye(2), np.eye(2)), 0.5 * np.eye(2), atol=1e-15
    )
    rhs = np.array([[1.0], [8.0]])
    np.testing.assert_allclose(
        symlin.solve_definite(np.diag([1.0, 4.0]), rhs), [[1.0], [2.0]], atol=1e-15
    )


def test_solve_definite_vector_rhs():
    m = np.diag([2.0, 8.0])
    x = symlin.solve_definite(m, np.array([4.0, 16.0]))
    np.testing.assert_allclose(x, [2.0, 2.0], atol=1e-15)


def test_solve_definite_rejects_indefinite():
    with pytest.raises(NotPositiveDefinite):
        symlin.solve_definite(np.array([[1.0, 2.0], [2.0, 1.0]]), np.eye(2))
    with pytest.raises(NotPositiveDefinite):
        symlin.solve_definite(np.zeros((2, 2)), np.eye(2))


def test_symmetrize_examples():
    np.testing.assert_array_equal(
        symlin.symmetrize([[1.0, 2.0], [0.0, 1.0]]), [[1.0, 1.0], [1.0, 1.0]]
    )
    s = np.array([[2.0, -1.0], [-1.0, 5.0]])
    np.testing.assert_array_equal(symlin.symmetrize(s), s)
    np.testing.assert_array_equal(
        symlin.symmetrize([[0.0, 4.0], [-4.0, 0.0]]), np.zeros((2, 2))
    )


def test_symmetrize_idempotent():
    rng = np.random.default_rng(0)
    m = rng.standard_normal((5, 5))
    once = symlin.symmetrize(m)
    np.testing.assert_array_equal(symlin.symmetrize(once), once)


def test_symmetrize_rejects_nonsquare():
    with pytest.raises(NonSquare):
        symlin.symmetrize(np.zeros((2, 3)))


def test_eigen_shift_property():
    rng = np.random.default_rng(1)
    for _ in range(30):
        d = int(rng.integers(1, 7))
        m = rand_sym(rng, d, 3.0)
        c = float(rng.uniform(-5, 5))
        shifted = symlin.min_eigenvalue(m + c * np.eye(d))
        assert shifted == pytest.approx(symlin.min_eigenvalue(m) + c, abs=2 * symlin.EIG_TOL)


def test_spd_solve_residual_property():
    rng = np.random.default_rng(2)
    for _ in range(30):
        d = int(rng.integers(1, 7))
        m = rand_spd(rng, d)
        rhs = rng.standard_normal((d, d))
        x = symlin.solve_definite(m, rhs)
        resid = np.abs(m @ x - rhs).max()
        assert resid <= symlin.LIN_TOL * np.abs(rhs).max()


def test_spectrum_reproduces_trace_and_frobenius():
    rng = np.random.default_rng(3)
    for _ in range(30):
        d = int(rng.integers(1, 9))
        m = rand_sym(rng, d, 2.0)
        eigs = symlin.eigenvalues(m)
        assert eigs.sum() == pytest.approx(np.trace(m), rel=1e-10, abs=1e-12)
        assert (eigs**2).sum() == pytest.approx(
            (m * m).sum(), rel=1e-10, abs=1e-12
        )


def test_eigenvalues_sorted_and_batch_consistent():
    rng = np.random.default_rng(4)
    stack = np.array([rand_sym(rng, 3, 2.0) for _ in range(40)])
    batch = symlin.eigenvalues_stack(stack)
    assert np.all(np.diff(batch, axis=1) >= -1e-12)
    for k in (0, 7, 39):
        np.testing.assert_allclose(batch[k], symlin.eigenvalues(stack[k]), atol=1e-10)


def test_cholesky_reports_batch_index():
    good = np.eye(2)
    bad = np.array([[1.0, 2.0], [2.0, 1.0]])
    with pytest.raises(NotPositiveDefinite) as err:
        symlin.cholesky_stack(np.array([good, good, bad, good]))
    assert err.value.where == 2
