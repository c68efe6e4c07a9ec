"""Monte Carlo verification of Riccati solutions through the control link.

The solution value x0^T P(0) x0 is the minimal cost of the associated
linear-quadratic problem under the state equation
dx = (Ax + Bu)dt + (Cx + Du)dw with scalar Wiener noise.  This module
simulates the closed loop u = gain(t) x by Euler-Maruyama, estimates the
cost by the left-endpoint rule plus terminal cost, and compares feedback
gains under common random numbers.

Reproducibility contract: Gaussian increments come from a Philox counter
generator keyed by the seed, mapped through the inverse normal CDF (one
uniform per increment, fixed consumption).  Path p owns the counter block
starting at p * stride, where stride is n_steps_sim rounded up to a
multiple of four, so its increments are a pure function of
(seed, p, n_steps_sim) regardless of batching or scheduling; costs are
reduced in path-index order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.random import Generator, Philox
from scipy.special import ndtri

from .errors import DimensionMismatch
from .riccati import RiccatiProblem, RiccatiSolution
from .timepath import MatrixPath, TimeGrid

_UNIFORM_FLOOR = 1e-300
_UNIFORM_CEIL = 1.0 - 1e-16


@dataclass
class SimConfig:
    """Simulation setup: path count, time resolution, seed and start state."""

    n_paths: int
    n_steps_sim: int
    seed: int
    x0: np.ndarray

    def __post_init__(self):
        if self.n_paths < 1:
            raise ValueError(f"n_paths must be at least 1, got {self.n_paths}")
        self.x0 = np.asarray(self.x0, dtype=float).reshape(-1)


@dataclass
class CostEstimate:
    mean: float
    std_error: float
    n_paths: int


def _stride(n_steps):
    # counter blocks advance four 64-bit outputs at a time
    return 4 * ((n_steps + 3) // 4)


def _increments(seed, first_path, n_paths, n_steps):
    """Standard normal increments for paths [first_path, first_path + n_paths)."""
    stride = _stride(n_steps)
    bitgen = Philox(key=seed)
    bitgen.advance(first_path * (stride // 4))
    u = Generator(bitgen).random((n_paths, stride))[:, :n_steps]
    return ndtri(np.clip(u, _UNIFORM_FLOOR, _UNIFORM_CEIL))


def simulate_cost_paths(
    prob: RiccatiProblem, gain: MatrixPath, cfg: SimConfig, block_paths: int = 2048
):
    """Per-path closed-loop costs, in path order.

    ``block_paths`` only batches the work; the result is bit-identical for
    any block size.
    """
    if cfg.n_steps_sim < prob.grid.n_steps:
        raise ValueError("n_steps_sim must be at least the problem grid resolution")
    if cfg.x0.shape != (prob.dim,):
        raise DimensionMismatch(
            f"x0 has shape {cfg.x0.shape}, expected ({prob.dim},)"
        )
    steps = cfg.n_steps_sim
    h = prob.grid.horizon / steps
    times = np.arange(steps + 1) * h

    k_nodes = gain.eval_many(times[:-1])
    a = prob.A.eval_many(times[:-1])
    b = prob.B.eval_many(times[:-1])
    c = prob.C.eval_many(times[:-1])
    d = prob.D.eval_many(times[:-1])
    q = prob.Q.eval_many(times[:-1])
    r = prob.R.eval_many(times[:-1])
    # closed-loop drift/diffusion and running-cost form at left endpoints
    drift = a + b @ k_nodes
    diff = c + d @ k_nodes
    w = q + k_nodes.transpose(0, 2, 1) @ r @ k_nodes

    sqrt_h = np.sqrt(h)
    costs = np.empty(cfg.n_paths)
    for start in range(0, cfg.n_paths, block_paths):
        stop = min(start + block_paths, cfg.n_paths)
        z = _increments(cfg.seed, start, stop - start, steps)
        x = np.broadcast_to(cfg.x0, (stop - start, prob.dim)).copy()
        acc = np.zeros(stop - start)
        for k in range(steps):
            acc += h * np.einsum("pi,ij,pj->p", x, w[k], x)
            dw = (sqrt_h * z[:, k])[:, None]
            x = x + h * (x @ drift[k].T) + dw * (x @ diff[k].T)
        acc += np.einsum("pi,ij,pj->p", x, prob.G, x)
        costs[start:stop] = acc
    return costs


def simulate_cost(prob: RiccatiProblem, gain: MatrixPath, cfg: SimConfig) -> CostEstimate:
    """Sample mean and standard error of the closed-loop cost."""
    costs = simulate_cost_paths(prob, gain, cfg)
    mean = float(np.mean(costs))
    if cfg.n_paths > 1:
        se = float(np.std(costs, ddof=1) / np.sqrt(cfg.n_paths))
    else:
        se = 0.0
    return CostEstimate(mean=mean, std_error=se, n_paths=cfg.n_paths)


@dataclass
class PerturbationResult:
    """Comparison of one perturbed gain against the synthesized one.

    ``mean_excess`` and ``excess_std_error`` come from the per-path cost
    differences (common random numbers); ``pooled_std_error`` combines the
    two marginal errors.  ``not_better`` asserts the synthesized gain is
    no worse at three pooled sigmas; ``strictly_worse`` asserts the
    perturbation loses at three paired sigmas.
    """

    estimate: CostEstimate
    mean_excess: float
    excess_std_error: float
    pooled_std_error: float
    not_better: bool
    strictly_worse: bool


@dataclass
class OptimalityReport:
    """Monte Carlo evidence that the synthesized gain attains x0^T P(0) x0."""

    optimal: CostEstimate
    reference_value: float
    allowance: float
    value_ok: bool
    perturbed: list[PerturbationResult] = field(default_factory=list)

    @property
    def passed(self):
        return self.value_ok and all(p.not_better for p in self.perturbed)


def verify_optimality(
    prob: RiccatiProblem,
    sol: RiccatiSolution,
    cfg: SimConfig,
    perturbations: list[MatrixPath],
) -> OptimalityReport:
    """Estimate the closed-loop cost and race it against perturbed gains.

    All estimates share the seed, so perturbation comparisons use common
    random numbers (a zero perturbation reproduces the optimal estimate
    bit-exactly).  The discretization allowance is C*dt with C estimated
    by a Richardson comparison against a run at twice the step count.
    """
    costs_opt = simulate_cost_paths(prob, sol.gain, cfg)
    mean_opt = float(np.mean(costs_opt))
    se_opt = (
        float(np.std(costs_opt, ddof=1) / np.sqrt(cfg.n_paths)) if cfg.n_paths > 1 else 0.0
    )
    optimal = CostEstimate(mean=mean_opt, std_error=se_opt, n_paths=cfg.n_paths)

    fine_cfg = SimConfig(
        n_paths=cfg.n_paths, n_steps_sim=2 * cfg.n_steps_sim, seed=cfg.seed, x0=cfg.x0
    )
    fine = simulate_cost(prob, sol.gain, fine_cfg)
    allowance = 2.0 * abs(mean_opt - fine.mean)

    p0 = sol.P.eval(0.0)
    reference = float(cfg.x0 @ p0 @ cfg.x0)
    value_ok = abs(mean_opt - reference) <= 4.0 * se_opt + allowance

    results = []
    for delta in perturbations:
        pert_gain = MatrixPath(
            sol.gain.grid, sol.gain.samples + delta.eval_many(sol.gain.grid.nodes)
        )
        costs_pert = simulate_cost_paths(prob, pert_gain, cfg)
        mean_pert = float(np.mean(costs_pert))
        se_pert = (
            float(np.std(costs_pert, ddof=1) / np.sqrt(cfg.n_paths))
            if cfg.n_paths > 1
            else 0.0
        )
        excess = costs_pert - costs_opt
        mean_excess = float(np.mean(excess))
        se_excess = (
            float(np.std(excess, ddof=1) / np.sqrt(cfg.n_paths)) if cfg.n_paths > 1 else 0.0
        )
        pooled = float(np.hypot(se_opt, se_pert))
        results.append(
            PerturbationResult(
                estimate=CostEstimate(mean=mean_pert, std_error=se_pert, n_paths=cfg.n_paths),
                mean_excess=mean_excess,
                excess_std_error=se_excess,
                pooled_std_error=pooled,
                not_better=mean_opt <= mean_pert + 3.0 * pooled,
                strictly_worse=mean_excess > 3.0 * se_excess,
            )
        )
    return OptimalityReport(
        optimal=optimal,
        reference_value=reference,
        allowance=allowance,
        value_ok=value_ok,
        perturbed=results,
    )
