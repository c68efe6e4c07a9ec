"""Solvability certificates for the indefinite Riccati equation.

A *scalar certificate* is a positive function m(.) solving a linear
backward ODE built from the system data alone, such that cost weights with
R >= -m * D^T D are guaranteed solvable.  The certificate depends on a
tuning parameter alpha in (0, 1); ``alpha_scan`` searches for the alpha
with the largest margin.  ``certify_general`` checks the matrix-valued
generalization for a caller-supplied certificate path, and the
``CostWeights`` helpers support the cone-algebra property tests
(homogeneity, super-additivity, monotonicity of the solvable set).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import linode, symlin
from .errors import (
    AlphaOutOfRange,
    DimensionMismatch,
    NonPositiveScale,
    NotNormalized,
    NotPositiveDefinite,
    SingularD,
)
from .riccati import SINGULAR_TOL, RiccatiProblem, RiccatiSolution
from .symlin import symmetrize_stack, sym_matrix
from .timepath import MatrixPath

ALPHA_LO = 1e-3
ALPHA_HI = 1.0 - 1e-3


class CertVerdict(str, Enum):
    CERTIFIED = "Certified"
    ENVELOPE_NOT_POSITIVE = "EnvelopeNotPositive"
    MARGIN_NEGATIVE = "MarginNegative"
    D_NOT_INVERTIBLE = "DNotInvertible"
    G_NOT_POSITIVE = "GNotPositive"


@dataclass
class Certificate:
    """Outcome of the scalar certificate check at one alpha.

    ``rate`` is the worst-case growth rate entering the certificate ODE,
    ``envelope`` the certificate function itself, and ``margin`` the
    smallest eigenvalue of R + envelope * D^T D over all nodes.  The
    verdict is Certified exactly when G > 0, D is invertible everywhere,
    the envelope stays positive and the margin is nonnegative.
    """

    alpha: float
    rate: MatrixPath | None
    envelope: MatrixPath | None
    margin: float | None
    verdict: CertVerdict

    @property
    def certified(self):
        return self.verdict is CertVerdict.CERTIFIED


def _check_alpha(alpha):
    if not 0.0 < alpha < 1.0:
        raise AlphaOutOfRange(f"alpha must lie in (0, 1), got {alpha}")


def _rate_parts(prob: RiccatiProblem):
    """Node stacks (S1, S2) with rate(alpha) = min-eig(S1 - S2/(1-alpha)).

    S1 = A^T + A + C^T C and S2 = (B + C^T D)(D^T D)^{-1}(B^T + D^T C);
    raises SingularD when D^T D is singular at some node.
    """
    a = prob.A.samples
    b = prob.B.samples
    c = prob.C.samples
    d = prob.D.samples
    s1 = symmetrize_stack(a.transpose(0, 2, 1) + a + c.transpose(0, 2, 1) @ c)
    dtd = symmetrize_stack(d.transpose(0, 2, 1) @ d)
    try:
        low = symlin.cholesky_stack(dtd)
    except NotPositiveDefinite as exc:
        at = float(prob.grid.nodes[exc.where]) if exc.where is not None else None
        raise SingularD(f"D^T D not positive definite at t={at}", at_time=at) from exc
    det = np.einsum("nii->ni", low).prod(axis=1) ** 2
    if np.any(det <= SINGULAR_TOL):
        worst = int(np.argmax(det <= SINGULAR_TOL))
        raise SingularD(
            f"det(D^T D) = {det[worst]:.3e}", at_time=float(prob.grid.nodes[worst])
        )
    cross = b + c.transpose(0, 2, 1) @ d
    y = symlin.solve_definite_stack(dtd, cross.transpose(0, 2, 1))
    s2 = symmetrize_stack(cross @ y)
    return s1, s2


def certificate_rate(prob: RiccatiProblem, alpha) -> MatrixPath:
    """Scalar path of the growth rate driving the certificate ODE."""
    _check_alpha(alpha)
    s1, s2 = _rate_parts(prob)
    lam = symlin.min_eig_stack(s1 - s2 / (1.0 - alpha))
    return MatrixPath(prob.grid, lam[:, None, None])


def scalar_certificate(prob: RiccatiProblem, alpha) -> MatrixPath:
    """Solve the certificate ODE backward from alpha * min-eig(G).

    envelope_dot + rate * envelope + alpha * min-eig(Q) = 0.
    """
    _check_alpha(alpha)
    rate = certificate_rate(prob, alpha)
    minq = symlin.min_eig_stack(prob.Q.samples)
    forcing = MatrixPath(prob.grid, (alpha * minq)[:, None, None])
    terminal = alpha * symlin.min_eigenvalue(prob.G)
    return linode.solve_scalar_backward(rate, forcing, terminal, prob.grid)


def _margin_of(prob: RiccatiProblem, envelope_values):
    dtd = symmetrize_stack(prob.D.samples.transpose(0, 2, 1) @ prob.D.samples)
    stack = prob.R.samples + envelope_values[:, None, None] * dtd
    return float(symlin.min_eig_stack(symmetrize_stack(stack)).min())


def _envelope_ceiling(s1, terminal, forcing_values, horizon):
    """Largest value a genuine certificate envelope can reach.

    The rate never exceeds min-eig(S1) for any alpha, so anything above
    (|terminal| + T max|forcing|) e^{max(rate,0) T} (times safety) is an
    unstable-integration artifact, not a certificate.
    """
    lam_hi = float(symlin.min_eig_stack(s1).max())
    growth = np.exp(min(max(lam_hi, 0.0) * horizon, 700.0))
    base = abs(terminal) + horizon * float(np.abs(forcing_values).max(initial=0.0))
    return 10.0 * (base + 1e-30) * growth


def _envelope_usable(values, ceiling):
    return bool(np.isfinite(values).all() and np.abs(values).max() <= ceiling)


def certify_scalar(prob: RiccatiProblem, alpha) -> Certificate:
    """Run the scalar certificate at one alpha; all outcomes become verdicts.

    An envelope whose integration is not trustworthy (non-finite values,
    or magnitudes above any legitimate growth bound, which happens when
    the rate is too stiff for the grid) is rejected as not positive.
    """
    _check_alpha(alpha)
    if symlin.min_eigenvalue(prob.G) <= 0.0:
        return Certificate(alpha, None, None, None, CertVerdict.G_NOT_POSITIVE)
    try:
        s1, s2 = _rate_parts(prob)
    except SingularD:
        return Certificate(alpha, None, None, None, CertVerdict.D_NOT_INVERTIBLE)
    lam = symlin.min_eig_stack(s1 - s2 / (1.0 - alpha))
    rate = MatrixPath(prob.grid, lam[:, None, None])
    minq = symlin.min_eig_stack(prob.Q.samples)
    forcing = MatrixPath(prob.grid, (alpha * minq)[:, None, None])
    terminal = alpha * symlin.min_eigenvalue(prob.G)
    envelope = linode.solve_scalar_backward(rate, forcing, terminal, prob.grid)
    values = envelope.scalar_values
    ceiling = _envelope_ceiling(s1, terminal, forcing.scalar_values, prob.grid.horizon)
    if not _envelope_usable(values, ceiling):
        return Certificate(alpha, rate, envelope, None, CertVerdict.ENVELOPE_NOT_POSITIVE)
    margin = _margin_of(prob, values)
    if values.min() <= 0.0:
        return Certificate(alpha, rate, envelope, margin, CertVerdict.ENVELOPE_NOT_POSITIVE)
    if margin < 0.0:
        return Certificate(alpha, rate, envelope, margin, CertVerdict.MARGIN_NEGATIVE)
    return Certificate(alpha, rate, envelope, margin, CertVerdict.CERTIFIED)


_INVPHI = (np.sqrt(5.0) - 1.0) / 2.0


def alpha_scan(prob: RiccatiProblem, n_coarse: int = 32):
    """Search (0, 1) for the alpha with the largest certificate margin.

    A uniform coarse grid over [ALPHA_LO, ALPHA_HI] guards against local
    traps (the margin need not be unimodal), then a golden-section pass
    refines around the coarse maximizer to an interval below 1e-6.
    Returns ``(best_alpha, certificate_at_best_alpha)``.
    """
    if n_coarse < 8:
        raise ValueError(f"n_coarse must be at least 8, got {n_coarse}")
    if symlin.min_eigenvalue(prob.G) <= 0.0:
        return 0.5, certify_scalar(prob, 0.5)
    try:
        s1, s2 = _rate_parts(prob)
    except SingularD:
        return 0.5, certify_scalar(prob, 0.5)

    minq = symlin.min_eig_stack(prob.Q.samples)
    ming = symlin.min_eigenvalue(prob.G)
    grid = prob.grid

    def score(alpha):
        lam = symlin.min_eig_stack(s1 - s2 / (1.0 - alpha))
        rate = MatrixPath(grid, lam[:, None, None])
        forcing = MatrixPath(grid, (alpha * minq)[:, None, None])
        envelope = linode.solve_scalar_backward(rate, forcing, alpha * ming, grid)
        values = envelope.scalar_values
        ceiling = _envelope_ceiling(s1, alpha * ming, forcing.scalar_values, grid.horizon)
        if not _envelope_usable(values, ceiling) or values.min() <= 0.0:
            return -np.inf
        return _margin_of(prob, values)

    alphas = np.linspace(ALPHA_LO, ALPHA_HI, n_coarse)
    scores = [score(a) for a in alphas]
    best_idx = int(np.argmax(scores))
    best_alpha, best_score = float(alphas[best_idx]), scores[best_idx]

    lo = alphas[max(best_idx - 1, 0)]
    hi = alphas[min(best_idx + 1, n_coarse - 1)]
    x1 = hi - _INVPHI * (hi - lo)
    x2 = lo + _INVPHI * (hi - lo)
    f1, f2 = score(x1), score(x2)
    while hi - lo > 1e-6:
        if f1 >= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _INVPHI * (hi - lo)
            f1 = score(x1)
            if f1 > best_score:
                best_alpha, best_score = float(x1), f1
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _INVPHI * (hi - lo)
            f2 = score(x2)
            if f2 > best_score:
                best_alpha, best_score = float(x2), f2
    return best_alpha, certify_scalar(prob, best_alpha)


@dataclass
class GeneralCertificate:
    """Outcome of the matrix certificate check (normalized problems, D = I).

    All four conditions are evaluated at every node with a scale-relative
    slack; the margins reported are the exact minima, the verdict applies
    the slack.
    """

    alpha: float
    verdict: str
    certified: bool
    min_certificate_eig: float
    terminal_excess: float
    ode_margin: float | None
    dominance_margin: float
    slack: float


def certify_general(
    prob: RiccatiProblem, certificate: MatrixPath, certificate_dot: MatrixPath, alpha
) -> GeneralCertificate:
    """Check a caller-supplied matrix certificate path on a D-normalized problem.

    Conditions, all nodewise: the certificate is positive definite, its
    terminal value is dominated by alpha*G, the backward differential
    inequality built from (A, C, Q, B) holds, and R + certificate >= 0.
    The derivative path must be supplied by the caller (no numerical
    differentiation here, by design).
    """
    _check_alpha(alpha)
    eye = np.eye(prob.dim)
    if np.abs(prob.D.samples - eye).max() > 1e-12:
        raise NotNormalized("certify_general requires D = I; call normalize_D first")
    if certificate.grid != prob.grid or certificate_dot.grid != prob.grid:
        raise DimensionMismatch("certificate paths must live on the problem grid")

    r_a = symmetrize_stack(certificate.samples)
    r_dot = symmetrize_stack(certificate_dot.samples)
    a = prob.A.samples
    b = prob.B.samples
    c = prob.C.samples
    q = prob.Q.samples
    r = prob.R.samples
    scale = max(float(np.abs(x).max(initial=0.0)) for x in (r_a, r_dot, a, c, q, r))
    slack = 1e-9 * (1.0 + scale)

    min_cert = float(symlin.min_eig_stack(r_a).min())
    terminal_excess = float(
        symlin.max_eig_stack((r_a[-1] - alpha * prob.G)[None])[0]
    )
    dominance = float(symlin.min_eig_stack(symmetrize_stack(r + r_a)).min())

    ode_margin = None
    if min_cert > 0.0:
        w = r_a @ b + c.transpose(0, 2, 1) @ r_a
        x = symlin.solve_definite_stack(r_a, w.transpose(0, 2, 1))
        quad = symmetrize_stack(w @ x)
        lhs = (
            r_dot
            + a.transpose(0, 2, 1) @ r_a
            + r_a @ a
            + c.transpose(0, 2, 1) @ r_a @ c
            + alpha * q
            - quad / (1.0 - alpha)
        )
        ode_margin = float(symlin.min_eig_stack(symmetrize_stack(lhs)).min())

    if min_cert <= 0.0:
        verdict, ok = "CertificateNotPositive", False
    elif terminal_excess > slack:
        verdict, ok = "TerminalNotDominated", False
    elif ode_margin < -slack:
        verdict, ok = "DifferentialConditionFails", False
    elif dominance < -slack:
        verdict, ok = "WeightsNotDominated", False
    else:
        verdict, ok = "Certified", True
    return GeneralCertificate(
        alpha=float(alpha),
        verdict=verdict,
        certified=ok,
        min_certificate_eig=min_cert,
        terminal_excess=terminal_excess,
        ode_margin=ode_margin,
        dominance_margin=dominance,
        slack=slack,
    )


def lower_bound_check(sol: RiccatiSolution, certificate: MatrixPath, alpha) -> bool:
    """True iff P(t) >= certificate(t)/alpha at every node (within 1e-6)."""
    _check_alpha(alpha)
    if certificate.grid != sol.P.grid:
        raise DimensionMismatch("certificate grid differs from solution grid")
    diff = symmetrize_stack(sol.P.samples - certificate.samples / alpha)
    return bool(symlin.min_eig_stack(diff).min() >= -1e-6)


@dataclass
class CostWeights:
    """The (R, Q, G) triple the solvable-set algebra acts on."""

    R: MatrixPath
    Q: MatrixPath
    G: np.ndarray

    def __post_init__(self):
        self.G = sym_matrix(self.G, tol=1e-12)
        if self.R.grid != self.Q.grid or self.R.shape != self.Q.shape:
            raise DimensionMismatch("R and Q must share grid and shape")


def scale_weights(w: CostWeights, lam) -> CostWeights:
    """Componentwise scaling by lam > 0."""
    if not lam > 0.0:
        raise NonPositiveScale(f"scale factor must be positive, got {lam}")
    return CostWeights(
        R=MatrixPath(w.R.grid, lam * w.R.samples, w.R.interpolation),
        Q=MatrixPath(w.Q.grid, lam * w.Q.samples, w.Q.interpolation),
        G=lam * w.G,
    )


def add_weights(w1: CostWeights, w2: CostWeights) -> CostWeights:
    """Componentwise sum; grids and dimensions must match."""
    if w1.R.grid != w2.R.grid or w1.R.shape != w2.R.shape or w1.G.shape != w2.G.shape:
        raise DimensionMismatch("weight triples live on different grids or dimensions")
    return CostWeights(
        R=MatrixPath(w1.R.grid, w1.R.samples + w2.R.samples, w1.R.interpolation),
        Q=MatrixPath(w1.Q.grid, w1.Q.samples + w2.Q.samples, w1.Q.interpolation),
        G=w1.G + w2.G,
    )


def weights_of(prob: RiccatiProblem) -> CostWeights:
    """Extract the cost weights of a problem."""
    return CostWeights(R=prob.R, Q=prob.Q, G=prob.G)


def with_weights(prob: RiccatiProblem, w: CostWeights) -> RiccatiProblem:
    """Same system data, different cost weights."""
    return RiccatiProblem(
        grid=prob.grid, A=prob.A, B=prob.B, C=prob.C, D=prob.D, R=w.R, Q=w.Q, G=w.G
    )
