import numpy as np
import pytest

from indric import symlin
from indric.linode import LyapunovData, solve_lyapunov_backward, solve_scalar_backward
from indric.timepath import MatrixPath, TimeGrid

from helpers import rand_psd


def _const_data(grid, a, c, q, g):
    return LyapunovData(
        Ahat=MatrixPath.constant(a, grid),
        Chat=MatrixPath.constant(c, grid),
        Qhat=MatrixPath.constant(q, grid),
        terminal=g,
    )


def test_zero_rhs_keeps_terminal():
    grid = TimeGrid(1.0, 50)
    g = np.array([[2.0, 0.5], [0.5, -1.0]])
    z = np.zeros((2, 2))
    p = solve_lyapunov_backward(_const_data(grid, z, z, z, g), grid)
    for k in range(51):
        np.testing.assert_array_equal(p.samples[k], g)


def test_scalar_exponential_closed_form():
    grid = TimeGrid(1.0, 200)
    a = np.array([[1.0]])
    z = np.zeros((1, 1))
    p = solve_lyapunov_backward(_const_data(grid, a, z, z, np.array([[1.0]])), grid)
    assert p.samples[0, 0, 0] == pytest.approx(np.e**2, abs=1e-6)
    # whole trajectory, not just the endpoint
    expected = np.exp(2.0 * (1.0 - grid.nodes))
    np.testing.assert_allclose(p.samples[:, 0, 0], expected, atol=1e-6)


def test_terminal_bit_exact_and_symmetric():
    rng = np.random.default_rng(7)
    grid = TimeGrid(1.0, 60)
    g = 0.5 * (lambda m: m + m.T)(rng.standard_normal((3, 3)))
    data = LyapunovData(
        Ahat=MatrixPath(grid, rng.standard_normal((61, 3, 3))),
        Chat=MatrixPath(grid, rng.standard_normal((61, 3, 3))),
        Qhat=MatrixPath(grid, symlin.symmetrize_stack(rng.standard_normal((61, 3, 3)))),
        terminal=g,
    )
    p = solve_lyapunov_backward(data, grid)
    np.testing.assert_array_equal(p.samples[-1], g)
    np.testing.assert_array_equal(p.samples, p.samples.transpose(0, 2, 1))


def test_linearity_in_forcing_and_terminal():
    rng = np.random.default_rng(8)
    grid = TimeGrid(1.0, 80)
    a = MatrixPath(grid, rng.standard_normal((81, 2, 2)))
    c = MatrixPath(grid, rng.standard_normal((81, 2, 2)))
    q1 = symlin.symmetrize_stack(rng.standard_normal((81, 2, 2)))
    q2 = symlin.symmetrize_stack(rng.standard_normal((81, 2, 2)))
    g1 = symlin.symmetrize(rng.standard_normal((2, 2)))
    g2 = symlin.symmetrize(rng.standard_normal((2, 2)))
    p1 = solve_lyapunov_backward(LyapunovData(a, c, MatrixPath(grid, q1), g1), grid)
    p2 = solve_lyapunov_backward(LyapunovData(a, c, MatrixPath(grid, q2), g2), grid)
    p12 = solve_lyapunov_backward(
        LyapunovData(a, c, MatrixPath(grid, q1 + q2), g1 + g2), grid
    )
    np.testing.assert_allclose(p12.samples, p1.samples + p2.samples, atol=1e-10)


def test_order_four_on_affine_coefficients():
    # coefficients affine in t: the interpolant reproduces them exactly on
    # every grid, so the march shows its full order
    def solve(n):
        grid = TimeGrid(1.0, n)
        t = grid.nodes
        a = (0.3 + 0.4 * t)[:, None, None]
        c = (0.2 - 0.1 * t)[:, None, None]
        q = (0.5 + t)[:, None, None]
        data = LyapunovData(
            MatrixPath(grid, a), MatrixPath(grid, c), MatrixPath(grid, q), np.array([[1.0]])
        )
        return solve_lyapunov_backward(data, grid).samples[0, 0, 0]

    ref = solve(320)
    err1 = abs(solve(40) - ref)
    err2 = abs(solve(80) - ref)
    assert 10.0 < err1 / err2 < 24.0


def test_positivity_of_psd_forced_solutions():
    rng = np.random.default_rng(9)
    grid = TimeGrid(1.0, 100)
    for _ in range(100):
        d = int(rng.integers(1, 4))
        a = MatrixPath.constant(rng.uniform(-1, 1, (d, d)), grid)
        c = MatrixPath.constant(rng.uniform(-1, 1, (d, d)), grid)
        q = MatrixPath.constant(rand_psd(rng, d), grid)
        g = rand_psd(rng, d)
        p = solve_lyapunov_backward(LyapunovData(a, c, q, g), grid)
        assert symlin.min_eig_stack(p.samples).min() >= -1e-8


def test_scalar_backward_constant():
    grid = TimeGrid(1.0, 40)
    zero = MatrixPath.constant(np.zeros((1, 1)), grid)
    phi = solve_scalar_backward(zero, zero, 0.7, grid)
    np.testing.assert_allclose(phi.scalar_values, 0.7, atol=0.0)


def test_scalar_backward_exponential():
    grid = TimeGrid(1.0, 200)
    lam = MatrixPath.constant(np.array([[1.3]]), grid)
    zero = MatrixPath.constant(np.zeros((1, 1)), grid)
    alpha_g = 0.4
    phi = solve_scalar_backward(lam, zero, alpha_g, grid)
    expected = alpha_g * np.exp(1.3 * (1.0 - grid.nodes))
    np.testing.assert_allclose(phi.scalar_values, expected, atol=1e-8)


def test_scalar_backward_with_forcing_closed_form():
    # rate 2, forcing 0.5 (unit state cost at alpha = 0.5), terminal 0.5:
    # y(t) = 0.5 e^{2(1-t)} (1 + (1 - e^{2(t-1)})/2)
    grid = TimeGrid(1.0, 400)
    lam = MatrixPath.constant(np.array([[2.0]]), grid)
    forcing = MatrixPath.constant(np.array([[0.5]]), grid)
    phi = solve_scalar_backward(lam, forcing, 0.5, grid)
    t = grid.nodes
    expected = 0.5 * np.exp(2.0 * (1.0 - t)) * (1.0 + 0.5 * (1.0 - np.exp(2.0 * (t - 1.0))))
    assert phi.scalar_values[0] == pytest.approx(expected[0], abs=1e-4)
    assert expected[0] == pytest.approx(5.291885, abs=1e-6)
    np.testing.assert_allclose(phi.scalar_values, expected, atol=1e-4)
