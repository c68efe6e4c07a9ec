import numpy as np
import pytest

from indric.errors import OutOfDomain
from indric.timepath import CONSTANT_LEFT, MatrixPath, TimeGrid


def test_grid_validation():
    with pytest.raises(ValueError):
        TimeGrid(0.0, 10)
    with pytest.raises(ValueError):
        TimeGrid(1.0, 1)
    g = TimeGrid(2.0, 4)
    np.testing.assert_allclose(g.nodes, [0.0, 0.5, 1.0, 1.5, 2.0])


def test_constant_path_eval_anywhere():
    g = TimeGrid(1.0, 10)
    m = np.array([[1.0, 2.0], [2.0, 5.0]])
    p = MatrixPath.constant(m, g)
    for t in (0.0, 0.31, 0.5, 1.0):
        np.testing.assert_array_equal(p.eval(t), m)


def test_linear_interpolation_midpoint():
    g = TimeGrid(1.0, 2)
    samples = np.array([[[0.0]], [[2.0]], [[4.0]]])
    p = MatrixPath(g, samples)
    assert p.eval(0.25)[0, 0] == pytest.approx(1.0, abs=1e-15)
    assert p.eval(1.0)[0, 0] == 4.0


def test_eval_exact_at_nodes_bit_identical():
    g = TimeGrid(1.0, 7)  # nodes are not exactly representable
    rng = np.random.default_rng(5)
    samples = rng.standard_normal((8, 2, 2))
    p = MatrixPath(g, samples)
    for k, t in enumerate(g.nodes):
        np.testing.assert_array_equal(p.eval(t), samples[k])
    many = p.eval_many(g.nodes)
    np.testing.assert_array_equal(many, samples)


def test_constant_left_mode():
    g = TimeGrid(1.0, 2)
    samples = np.array([[[1.0]], [[2.0]], [[3.0]]])
    p = MatrixPath(g, samples, CONSTANT_LEFT)
    assert p.eval(0.25)[0, 0] == 1.0
    assert p.eval(0.5)[0, 0] == 2.0
    assert p.eval(0.75)[0, 0] == 2.0
    assert p.eval(1.0)[0, 0] == 3.0
    np.testing.assert_array_equal(p.half_samples(), samples[:-1])


def test_eval_outside_domain():
    g = TimeGrid(1.0, 4)
    p = MatrixPath.constant(np.eye(1), g)
    with pytest.raises(OutOfDomain):
        p.eval(-0.1)
    with pytest.raises(OutOfDomain):
        p.eval(1.1)
    with pytest.raises(OutOfDomain):
        p.eval_many(np.array([0.2, 1.2]))


def test_quadrature_examples():
    g = TimeGrid(1.0, 17)
    c = np.array([[3.0, 1.0], [1.0, -2.0]])
    np.testing.assert_allclose(MatrixPath.constant(c, g).quadrature(), c, atol=1e-14)

    ramp = MatrixPath(g, g.nodes[:, None, None].copy())
    assert ramp.quadrature()[0, 0] == pytest.approx(0.5, abs=1e-15)

    g2 = TimeGrid(1.0, 1000)
    exp_path = MatrixPath(g2, np.exp(2.0 * g2.nodes)[:, None, None])
    exact = (np.e**2 - 1.0) / 2.0
    assert exp_path.quadrature()[0, 0] == pytest.approx(exact, abs=1e-5)


def test_quadrature_linearity():
    rng = np.random.default_rng(6)
    g = TimeGrid(1.5, 33)
    f = MatrixPath(g, rng.standard_normal((34, 2, 2)))
    h = MatrixPath(g, rng.standard_normal((34, 2, 2)))
    a, b = 1.7, -0.4
    combo = MatrixPath(g, a * f.samples + b * h.samples)
    np.testing.assert_allclose(
        combo.quadrature(), a * f.quadrature() + b * h.quadrature(), atol=1e-12
    )


def test_quadrature_second_order():
    exact = (np.e**2 - 1.0) / 2.0
    errs = []
    for n in (100, 200):
        g = TimeGrid(1.0, n)
        p = MatrixPath(g, np.exp(2.0 * g.nodes)[:, None, None])
        errs.append(abs(p.quadrature()[0, 0] - exact))
    ratio = errs[0] / errs[1]
    assert 3.0 < ratio < 5.0


def test_half_samples_linear():
    g = TimeGrid(1.0, 4)
    samples = np.arange(5.0)[:, None, None]
    p = MatrixPath(g, samples)
    np.testing.assert_array_equal(p.half_samples()[:, 0, 0], [0.5, 1.5, 2.5, 3.5])
