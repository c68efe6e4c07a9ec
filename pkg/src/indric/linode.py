"""Backward-in-time integrators for the two linear ODE shapes we need.

Both integrate with the classical 4-stage Runge-Kutta scheme at the fixed
grid step, evaluating coefficients at half-nodes through each path's own
interpolant.  Fixed steps keep every trajectory aligned to the shared
grid, which the outer fixed-point iteration in :mod:`indric.riccati`
relies on; accuracy is controlled by the step count alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .symlin import sym_matrix
from .timepath import MatrixPath, same_grid


@dataclass
class LyapunovData:
    """Closed-loop data for the matrix ODE  Pdot + Ahat^T P + P Ahat + Chat^T P Chat + Qhat = 0.

    ``Qhat`` must be symmetric at every node and ``terminal`` symmetric;
    the solution then stays symmetric and satisfies P(T) = terminal.
    """

    Ahat: MatrixPath
    Chat: MatrixPath
    Qhat: MatrixPath
    terminal: np.ndarray

    def __post_init__(self):
        self.terminal = sym_matrix(self.terminal, tol=1e-12)
        d = self.terminal.shape[0]
        for name, path in (("Ahat", self.Ahat), ("Chat", self.Chat), ("Qhat", self.Qhat)):
            if path.shape != (d, d):
                raise DimensionMismatch(f"{name} has shape {path.shape}, expected {(d, d)}")
        if not same_grid(self.Ahat, self.Chat, self.Qhat):
            raise DimensionMismatch("coefficient paths live on different grids")


def _lyap_rhs(a_t, c_t, q, p):
    # a_t, c_t are pre-transposed: rhs = -(A^T P + P A + C^T P C + Q)
    return -(a_t @ p + p @ a_t.T + c_t @ p @ c_t.T + q)


def solve_lyapunov_backward(data: LyapunovData, grid) -> MatrixPath:
    """Integrate the Lyapunov-type matrix ODE backward from P(T) = terminal.

    Classical RK4 with symmetrization after each step; the terminal sample
    is the terminal matrix itself, bit-exactly.
    """
    if grid != data.Ahat.grid:
        raise DimensionMismatch("data paths do not live on the requested grid")
    n = grid.n_steps
    h = grid.step
    a_n = data.Ahat.samples.transpose(0, 2, 1)
    a_h = data.Ahat.half_samples().transpose(0, 2, 1)
    c_n = data.Chat.samples.transpose(0, 2, 1)
    c_h = data.Chat.half_samples().transpose(0, 2, 1)
    q_n = data.Qhat.samples
    q_h = data.Qhat.half_samples()

    out = np.empty_like(q_n)
    p = data.terminal
    out[n] = p
    for k in range(n - 1, -1, -1):
        k1 = _lyap_rhs(a_n[k + 1], c_n[k + 1], q_n[k + 1], p)
        k2 = _lyap_rhs(a_h[k], c_h[k], q_h[k], p - 0.5 * h * k1)
        k3 = _lyap_rhs(a_h[k], c_h[k], q_h[k], p - 0.5 * h * k2)
        k4 = _lyap_rhs(a_n[k], c_n[k], q_n[k], p - h * k3)
        p = p - (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        p = 0.5 * (p + p.T)
        out[k] = p
    return MatrixPath(grid, out)


def solve_scalar_backward(rate: MatrixPath, forcing: MatrixPath, terminal, grid) -> MatrixPath:
    """Integrate  ydot + rate*y + forcing = 0  backward from y(T) = terminal.

    Scalar counterpart of :func:`solve_lyapunov_backward`, same RK4 scheme.
    """
    if not (rate.is_scalar and forcing.is_scalar):
        raise DimensionMismatch("rate and forcing must be 1x1 paths")
    if grid != rate.grid or grid != forcing.grid:
        raise DimensionMismatch("paths do not live on the requested grid")
    n = grid.n_steps
    h = grid.step
    lam_n = rate.scalar_values
    lam_h = rate.half_samples()[:, 0, 0]
    f_n = forcing.scalar_values
    f_h = forcing.half_samples()[:, 0, 0]

    out = np.empty(n + 1)
    y = float(terminal)
    out[n] = y
    # stiff rates can overflow the march; callers validate the output
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(n - 1, -1, -1):
            k1 = -(lam_n[k + 1] * y + f_n[k + 1])
            k2 = -(lam_h[k] * (y - 0.5 * h * k1) + f_h[k])
            k3 = -(lam_h[k] * (y - 0.5 * h * k2) + f_h[k])
            k4 = -(lam_n[k] * (y - h * k3) + f_n[k])
            y = y - (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            out[k] = y
    return MatrixPath(grid, out[:, None, None])
