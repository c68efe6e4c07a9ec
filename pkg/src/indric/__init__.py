"""Indefinite matrix Riccati differential equations: backward solver,
solvability certificates, and Monte Carlo verification of the associated
linear-quadratic control problem."""

from . import certify, cli, demos, linode, lqmc, riccati, symlin, timepath
from .certify import (
    Certificate,
    CertVerdict,
    CostWeights,
    add_weights,
    alpha_scan,
    certificate_rate,
    certify_general,
    certify_scalar,
    lower_bound_check,
    scalar_certificate,
    scale_weights,
)
from .lqmc import CostEstimate, SimConfig, simulate_cost, verify_optimality
from .riccati import (
    FailureKind,
    RiccatiProblem,
    RiccatiSolution,
    SolveFailure,
    SolverOptions,
    normalize_D,
    quasilinearize,
    residual,
)
from .timepath import MatrixPath, TimeGrid

__version__ = "0.1.0"

__all__ = [
    "Certificate",
    "CertVerdict",
    "CostEstimate",
    "CostWeights",
    "FailureKind",
    "MatrixPath",
    "RiccatiProblem",
    "RiccatiSolution",
    "SimConfig",
    "SolveFailure",
    "SolverOptions",
    "TimeGrid",
    "add_weights",
    "alpha_scan",
    "certificate_rate",
    "certify",
    "certify_general",
    "certify_scalar",
    "cli",
    "demos",
    "linode",
    "lower_bound_check",
    "lqmc",
    "normalize_D",
    "quasilinearize",
    "residual",
    "riccati",
    "scalar_certificate",
    "scale_weights",
    "simulate_cost",
    "symlin",
    "timepath",
    "verify_optimality",
]
