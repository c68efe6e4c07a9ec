"""Backward solver for matrix Riccati differential equations with
possibly indefinite cost weights.

The equation, with all coefficients time-varying on [0, T]:

    Pdot + A^T P + P A + C^T P C + Q
        = (P B + C^T P D)(R + D^T P D)^{-1}(P B + C^T P D)^T,
    P(T) = G,    subject to  R + D^T P D > 0  along the solution.

``quasilinearize`` iterates linear Lyapunov-type ODEs against the feedback
gain of the previous iterate, starting from the zero matrix.  When the
equation is solvable the iterates decrease monotonically to the solution;
when it is not, one of the two bounds that characterize solvability fails
and the solver reports which one, and where.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property

import numpy as np

from . import linode, symlin
from .errors import DimensionMismatch, NotPositiveDefinite, SingularD
from .symlin import symmetrize, symmetrize_stack, sym_matrix
from .timepath import MatrixPath, TimeGrid, same_grid

# det(D^T D) at or below this value counts as a singular D.
SINGULAR_TOL = 1e-12


@dataclass(eq=False)
class RiccatiProblem:
    """System data (A, B, C, D), cost weights (R, Q, G) and the shared grid."""

    grid: TimeGrid
    A: MatrixPath
    B: MatrixPath
    C: MatrixPath
    D: MatrixPath
    R: MatrixPath
    Q: MatrixPath
    G: np.ndarray

    def __post_init__(self):
        self.G = sym_matrix(self.G, tol=1e-12)
        d = self.G.shape[0]
        for name in ("A", "B", "C", "D", "R", "Q"):
            path = getattr(self, name)
            if path.shape != (d, d):
                raise DimensionMismatch(
                    f"{name} has shape {path.shape}, expected {(d, d)}"
                )
        if not same_grid(self.A, self.B, self.C, self.D, self.R, self.Q):
            raise DimensionMismatch("all coefficient paths must share one grid")
        if self.A.grid != self.grid:
            raise DimensionMismatch("coefficient paths do not live on the problem grid")
        for name in ("R", "Q"):
            path = getattr(self, name)
            skew = np.abs(path.samples - path.samples.transpose(0, 2, 1)).max(initial=0.0)
            if skew > 1e-12 * (1.0 + np.abs(path.samples).max(initial=0.0)):
                raise DimensionMismatch(f"{name} is not symmetric at every node")
            setattr(self, name, MatrixPath(path.grid, symmetrize_stack(path.samples), path.interpolation))

    @classmethod
    def from_constants(cls, A, B, C, D, R, Q, G, horizon, n_steps):
        """Build a constant-coefficient problem; scalars are accepted for d = 1."""
        G = np.atleast_2d(np.asarray(G, dtype=float))
        grid = TimeGrid(horizon, n_steps)
        paths = [
            MatrixPath.constant(np.atleast_2d(np.asarray(m, dtype=float)), grid)
            for m in (A, B, C, D, R, Q)
        ]
        return cls(grid, *paths, G=G)

    @property
    def dim(self):
        return self.G.shape[0]

    @cached_property
    def _nodes(self):
        """Node sample stacks for the batched kernels."""
        return {name: getattr(self, name).samples for name in "ABCDRQ"}


class FailureKind(str, Enum):
    CONSTRAINT_LOSS = "ConstraintLoss"
    NO_DECREASE = "NoDecrease"
    MAX_ITERATIONS = "MaxIterations"
    UNBOUNDED_BELOW = "UnboundedBelow"


@dataclass
class SolveFailure:
    """Why (and where) the iteration stopped without producing a solution."""

    kind: FailureKind
    at_time: float | None
    at_iteration: int
    diagnostics: str = ""


@dataclass
class SolverOptions:
    """Tolerances for :func:`quasilinearize`.

    ``None`` fields are resolved from the problem scale: convergence at
    1e-9*(1+||G||), positivity floor at 1e-8*(1+max||R||), divergence
    floor at 1e6*(1+||G||+T*max||Q||).
    """

    max_iter: int = 200
    conv_tol: float | None = None
    delta_floor: float | None = None
    mono_tol: float = 1e-7
    unbounded_floor: float | None = None

    def resolve(self, prob: RiccatiProblem):
        g_norm = float(np.abs(prob.G).max(initial=0.0))
        conv = self.conv_tol if self.conv_tol is not None else 1e-9 * (1.0 + g_norm)
        floor = (
            self.delta_floor
            if self.delta_floor is not None
            else 1e-8 * (1.0 + prob.R.max_abs())
        )
        unbounded = (
            self.unbounded_floor
            if self.unbounded_floor is not None
            else 1e6 * (1.0 + g_norm + prob.grid.horizon * prob.Q.max_abs())
        )
        return conv, floor, unbounded


@dataclass
class RiccatiSolution:
    """Converged trajectory plus the synthesized gain and health diagnostics.

    ``gap`` is the smallest eigenvalue of R + D^T P D along the trajectory
    (the solver's positivity margin), ``sup_residual`` the worst equation
    defect measured with central differences at interior nodes, and
    ``iterate_history_norms`` the per-iteration sup-norm changes.
    ``decrease_margins`` records the largest eigenvalue of each consecutive
    iterate difference from the second iterate on (monotone decrease holds
    when these stay at roundoff level).
    """

    P: MatrixPath
    gain: MatrixPath
    gap: MatrixPath
    iterations: int
    sup_residual: float
    iterate_history_norms: list[float] = field(default_factory=list)
    decrease_margins: list[float] = field(default_factory=list)


def feedback(P, t, prob: RiccatiProblem):
    """Gain  -(R + D^T P D)^{-1}(B^T P + D^T P C)  at time t.

    Raises NotPositiveDefinite when R + D^T P D is not positive definite,
    i.e. exactly when the constraint fails at ``t``.
    """
    P = np.asarray(P, dtype=float)
    B = prob.B.eval(t)
    C = prob.C.eval(t)
    D = prob.D.eval(t)
    R = prob.R.eval(t)
    m = symmetrize(R + D.T @ P @ D)
    num = B.T @ P + D.T @ P @ C
    return -symlin.solve_definite(m, num)


def closed_loop_form(P, U, t, prob: RiccatiProblem):
    """Quadratic form (A+BU)^T P + P(A+BU) + (C+DU)^T P(C+DU) at time t."""
    P = np.asarray(P, dtype=float)
    U = np.asarray(U, dtype=float)
    acl = prob.A.eval(t) + prob.B.eval(t) @ U
    ccl = prob.C.eval(t) + prob.D.eval(t) @ U
    return symmetrize(acl.T @ P + P @ acl + ccl.T @ P @ ccl)


def completion_identity_residual(P, U, t, prob: RiccatiProblem):
    """Defect of the completion-of-squares identity at (P, U, t).

    The cost-difference form of an arbitrary gain U against the feedback
    gain equals (U - K)^T (R + D^T P D)(U - K); this returns the max-abs
    entry of the difference of the two sides, which is pure roundoff
    (<= 1e-10 * scale) for any admissible input.
    """
    P = np.asarray(P, dtype=float)
    U = np.asarray(U, dtype=float)
    k = feedback(P, t, prob)
    R = prob.R.eval(t)
    D = prob.D.eval(t)
    lhs = (
        closed_loop_form(P, U, t, prob)
        + U.T @ R @ U
        - closed_loop_form(P, k, t, prob)
        - k.T @ R @ k
    )
    dd = U - k
    rhs = dd.T @ (R + D.T @ P @ D) @ dd
    return float(np.abs(lhs - rhs).max())


def _feedback_stack(prob: RiccatiProblem, p_stack):
    """Batched feedback gains at every node for a trajectory stack."""
    s = prob._nodes
    b_t = s["B"].transpose(0, 2, 1)
    d_t = s["D"].transpose(0, 2, 1)
    m = symmetrize_stack(s["R"] + d_t @ p_stack @ s["D"])
    num = b_t @ p_stack + d_t @ p_stack @ s["C"]
    return -symlin.solve_definite_stack(m, num)


def _gap_values(prob: RiccatiProblem, p_stack):
    """min-eig of R + D^T P D at every node."""
    s = prob._nodes
    d_t = s["D"].transpose(0, 2, 1)
    return symlin.min_eig_stack(symmetrize_stack(s["R"] + d_t @ p_stack @ s["D"]))


def residual(P: MatrixPath, prob: RiccatiProblem):
    """Sup of the equation defect over interior nodes.

    The time derivative is formed by central differences on the grid, so
    for a converged trajectory this is dominated by O(h^2) truncation.
    """
    if P.grid != prob.grid:
        raise DimensionMismatch("trajectory grid differs from problem grid")
    s = prob._nodes
    p = P.samples
    h = prob.grid.step
    sl = slice(1, -1)
    pdot = (p[2:] - p[:-2]) / (2.0 * h)
    pi = p[sl]
    a, b, c, d, r, q = (s[k][sl] for k in "ABCDRQ")
    a_t = a.transpose(0, 2, 1)
    c_t = c.transpose(0, 2, 1)
    d_t = d.transpose(0, 2, 1)
    lin = pdot + a_t @ pi + pi @ a + c_t @ pi @ c + q
    n = pi @ b + c_t @ pi @ d
    m = symmetrize_stack(r + d_t @ pi @ d)
    x = symlin.solve_definite_stack(m, n.transpose(0, 2, 1))
    return float(np.abs(lin - n @ x).max())


def _riccati_rhs(a, b, c, d, r, q, p):
    """Right-hand side of the full equation, dP/dt at a single time."""
    m = symmetrize(r + d.T @ p @ d)
    n = p @ b + c.T @ p @ d
    x = symlin.solve_definite(m, n.T)
    return -(a.T @ p + p @ a + c.T @ p @ c + q) + n @ x


def _locate_frontier(prob: RiccatiProblem, delta_floor):
    """Estimate where backward solvability degenerates.

    Marches the full (nonlinear) equation backward from G and returns the
    first node, counted down from T, at which the positivity margin falls
    under ``delta_floor`` (or the march blows up).  Returns None when the
    march reaches t = 0 with the margin intact.
    """
    grid = prob.grid
    h = grid.step
    nodes = {k: getattr(prob, k).samples for k in "ABCDRQ"}
    halves = {k: getattr(prob, k).half_samples() for k in "ABCDRQ"}
    p = prob.G
    gap = symlin.min_eigenvalue(
        symmetrize(nodes["R"][-1] + nodes["D"][-1].T @ p @ nodes["D"][-1])
    )
    if gap < delta_floor:
        return grid.horizon
    for k in range(grid.n_steps - 1, -1, -1):
        hi = [nodes[key][k + 1] for key in "ABCDRQ"]
        mid = [halves[key][k] for key in "ABCDRQ"]
        lo = [nodes[key][k] for key in "ABCDRQ"]
        try:
            k1 = _riccati_rhs(*hi, p)
            k2 = _riccati_rhs(*mid, p - 0.5 * h * k1)
            k3 = _riccati_rhs(*mid, p - 0.5 * h * k2)
            k4 = _riccati_rhs(*lo, p - h * k3)
        except NotPositiveDefinite:
            return float(grid.nodes[k])
        p = p - (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        p = 0.5 * (p + p.T)
        if not np.isfinite(p).all():
            return float(grid.nodes[k])
        gap = symlin.min_eigenvalue(symmetrize(lo[4] + lo[3].T @ p @ lo[3]))
        if gap < delta_floor:
            return float(grid.nodes[k])
    return None


def quasilinearize(prob: RiccatiProblem, opts: SolverOptions | None = None):
    """Solve the equation by iterated linearization from the zero matrix.

    Each iterate solves the linear Lyapunov-type ODE closed with the
    previous iterate's feedback gain, backward from G.  After every
    iterate the positivity margin, a lower bound on the iterate itself and
    (from the second iterate on) monotone decrease are checked; any
    violation aborts with the matching :class:`SolveFailure`.  Convergence
    is declared when consecutive iterates agree to ``conv_tol`` in sup
    norm, after which the gain, the margin trajectory and the equation
    residual are recomputed from the converged trajectory.

    Returns a :class:`RiccatiSolution` or a :class:`SolveFailure`.  A
    ConstraintLoss failure carries the estimated time at which backward
    solvability degenerates (see :func:`_locate_frontier`).
    """
    opts = opts if opts is not None else SolverOptions()
    conv_tol, delta_floor, unbounded_floor = opts.resolve(prob)
    grid = prob.grid
    n, d = grid.n_steps, prob.dim
    s = prob._nodes
    u = np.zeros((n + 1, d, d))
    p_prev = None
    history: list[float] = []
    decrease: list[float] = []

    for it in range(1, opts.max_iter + 1):
        acl = s["A"] + s["B"] @ u
        ccl = s["C"] + s["D"] @ u
        qcl = symmetrize_stack(s["Q"] + u.transpose(0, 2, 1) @ s["R"] @ u)
        data = linode.LyapunovData(
            MatrixPath(grid, acl), MatrixPath(grid, ccl), MatrixPath(grid, qcl), prob.G
        )
        p_path = linode.solve_lyapunov_backward(data, grid)
        p = p_path.samples

        if not np.isfinite(p).all():
            return SolveFailure(
                FailureKind.UNBOUNDED_BELOW,
                at_time=None,
                at_iteration=it,
                diagnostics="iterate diverged to non-finite values",
            )
        gap = _gap_values(prob, p)
        if np.any(gap < delta_floor):
            worst = int(np.argmax(gap < delta_floor))
            frontier = _locate_frontier(prob, delta_floor)
            at = frontier if frontier is not None else float(grid.nodes[worst])
            return SolveFailure(
                FailureKind.CONSTRAINT_LOSS,
                at_time=at,
                at_iteration=it,
                diagnostics=(
                    f"positivity margin {gap.min():.3e} fell under the floor"
                    f" {delta_floor:.3e}; iterate {it} violates on"
                    f" t <= {grid.nodes[np.where(gap < delta_floor)[0][-1]]:.6g}"
                ),
            )
        eigs_low = symlin.min_eig_stack(p)
        if eigs_low.min() < -unbounded_floor:
            worst = int(np.argmin(eigs_low))
            return SolveFailure(
                FailureKind.UNBOUNDED_BELOW,
                at_time=float(grid.nodes[worst]),
                at_iteration=it,
                diagnostics=f"iterate dropped below -{unbounded_floor:.3e}",
            )

        if p_prev is None:
            history.append(float(np.abs(p).max()))
        else:
            diff = p - p_prev
            change = float(np.abs(diff).max())
            history.append(change)
            up = symlin.max_eig_stack(diff)
            dec = float(up.max())
            decrease.append(dec)
            if dec > opts.mono_tol:
                worst = int(np.argmax(up))
                return SolveFailure(
                    FailureKind.NO_DECREASE,
                    at_time=float(grid.nodes[worst]),
                    at_iteration=it,
                    diagnostics=(
                        f"iterate increased by {dec:.3e} (> {opts.mono_tol:.1e});"
                        " unsolvable weights or too coarse a grid"
                    ),
                )
            if change < conv_tol:
                try:
                    gain = _feedback_stack(prob, p)
                except NotPositiveDefinite as exc:
                    at = _locate_frontier(prob, delta_floor)
                    return SolveFailure(
                        FailureKind.CONSTRAINT_LOSS,
                        at_time=at,
                        at_iteration=it,
                        diagnostics=f"gain synthesis failed: {exc}",
                    )
                return RiccatiSolution(
                    P=p_path,
                    gain=MatrixPath(grid, gain),
                    gap=MatrixPath(grid, gap[:, None, None]),
                    iterations=it,
                    sup_residual=residual(p_path, prob),
                    iterate_history_norms=history,
                    decrease_margins=decrease,
                )

        try:
            u = _feedback_stack(prob, p)
        except NotPositiveDefinite as exc:
            at = _locate_frontier(prob, delta_floor)
            return SolveFailure(
                FailureKind.CONSTRAINT_LOSS,
                at_time=at,
                at_iteration=it,
                diagnostics=f"gain synthesis failed between nodes: {exc}",
            )
        p_prev = p

    return SolveFailure(
        FailureKind.MAX_ITERATIONS,
        at_time=None,
        at_iteration=opts.max_iter,
        diagnostics=f"no convergence after {opts.max_iter} iterations"
        + (f"; last change {history[-1]:.3e}" if history else ""),
    )


def normalize_D(prob: RiccatiProblem) -> RiccatiProblem:
    """Change control variables so that D becomes the identity.

    Substituting v = D u maps (B, D, R) to (B D^{-1}, I, D^{-T} R D^{-1})
    and leaves the cost, the dynamics and therefore the solution P(.)
    unchanged.  Requires D(t) invertible at every node, checked through
    det(D^T D) against SINGULAR_TOL.
    """
    d_s = prob.D.samples
    dtd = symmetrize_stack(d_s.transpose(0, 2, 1) @ d_s)
    try:
        low = symlin.cholesky_stack(dtd)
    except NotPositiveDefinite as exc:
        at = float(prob.grid.nodes[exc.where]) if exc.where is not None else None
        raise SingularD(f"D^T D not positive definite at t={at}", at_time=at) from exc
    det = np.einsum("nii->ni", low).prod(axis=1) ** 2
    if np.any(det <= SINGULAR_TOL):
        worst = int(np.argmax(det <= SINGULAR_TOL))
        at = float(prob.grid.nodes[worst])
        raise SingularD(f"det(D^T D) = {det[worst]:.3e} at t={at}", at_time=at)
    dinv = symlin.solve_definite_stack(dtd, d_s.transpose(0, 2, 1))
    b_n = prob.B.samples @ dinv
    r_n = symmetrize_stack(dinv.transpose(0, 2, 1) @ prob.R.samples @ dinv)
    eye = MatrixPath.constant(np.eye(prob.dim), prob.grid)
    return RiccatiProblem(
        grid=prob.grid,
        A=prob.A,
        B=MatrixPath(prob.grid, b_n, prob.B.interpolation),
        C=prob.C,
        D=eye,
        R=MatrixPath(prob.grid, r_n, prob.R.interpolation),
        Q=prob.Q,
        G=prob.G,
    )
