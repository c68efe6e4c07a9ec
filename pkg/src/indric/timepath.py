"""Time-varying matrices on a shared uniform grid over [0, T].

Every coefficient and every solution trajectory in this package lives on
one uniform grid, so that the backward integrators, the certificate scans
and the simulator all see the same sample times.  A path is its samples
plus a declared interpolation rule; the interpolant *is* the function, and
evaluation anywhere in [0, T] (integrator half-nodes included) goes
through it.  Paths are immutable after construction and freely shareable.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DimensionMismatch, OutOfDomain

LINEAR = "piecewise-linear"
CONSTANT_LEFT = "piecewise-constant-left"
_MODES = (LINEAR, CONSTANT_LEFT)

# Evaluation snaps to a node when within this fraction of a step, so that
# node hits reproduce stored samples bit-exactly despite t/h roundoff.
_SNAP = 1e-9


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid t_k = k*T/n_steps, k = 0..n_steps."""

    horizon: float
    n_steps: int

    def __post_init__(self):
        if not self.horizon > 0.0:
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        if self.n_steps < 2:
            raise ValueError(f"n_steps must be at least 2, got {self.n_steps}")

    @cached_property
    def nodes(self):
        return np.arange(self.n_steps + 1) * (self.horizon / self.n_steps)

    @property
    def step(self):
        return self.horizon / self.n_steps


class MatrixPath:
    """Matrix-valued function on [0, T]: one sample per grid node plus a rule."""

    def __init__(self, grid, samples, interpolation=LINEAR):
        samples = np.asarray(samples, dtype=float)
        if samples.ndim != 3:
            raise DimensionMismatch(
                f"samples must have shape (n_steps+1, rows, cols), got {samples.shape}"
            )
        if samples.shape[0] != grid.n_steps + 1:
            raise DimensionMismatch(
                f"expected {grid.n_steps + 1} samples, got {samples.shape[0]}"
            )
        if interpolation not in _MODES:
            raise ValueError(f"unknown interpolation mode {interpolation!r}")
        self.grid = grid
        self.samples = samples
        self.interpolation = interpolation

    @classmethod
    def constant(cls, m, grid, interpolation=LINEAR):
        m = np.asarray(m, dtype=float)
        if m.ndim == 0:
            m = m.reshape(1, 1)
        samples = np.broadcast_to(m, (grid.n_steps + 1,) + m.shape).copy()
        return cls(grid, samples, interpolation)

    @property
    def shape(self):
        return self.samples.shape[1:]

    @property
    def is_scalar(self):
        return self.shape == (1, 1)

    @property
    def scalar_values(self):
        """The (n_steps+1,) value vector of a 1x1 path."""
        if not self.is_scalar:
            raise DimensionMismatch(f"not a scalar path, shape {self.shape}")
        return self.samples[:, 0, 0]

    def _locate(self, t):
        span = self.grid.horizon
        slack = _SNAP * span
        if t < -slack or t > span + slack:
            raise OutOfDomain(f"t={t} outside [0, {span}]")
        u = min(max(t, 0.0), span) / self.grid.step
        k = int(np.floor(u))
        k = min(max(k, 0), self.grid.n_steps)
        frac = u - k
        if frac < _SNAP:
            return k, 0.0
        if frac > 1.0 - _SNAP:
            return k + 1, 0.0
        return k, frac

    def eval(self, t):
        """Value at time t; exact sample at nodes, interpolated in between."""
        k, frac = self._locate(float(t))
        if frac == 0.0:
            return self.samples[k].copy()
        if self.interpolation == CONSTANT_LEFT:
            return self.samples[k].copy()
        return (1.0 - frac) * self.samples[k] + frac * self.samples[k + 1]

    def eval_many(self, ts):
        """Vectorized eval: (m,) times -> (m, rows, cols) values."""
        ts = np.asarray(ts, dtype=float)
        span = self.grid.horizon
        slack = _SNAP * span
        if (ts < -slack).any() or (ts > span + slack).any():
            raise OutOfDomain("some times fall outside [0, T]")
        u = np.clip(ts, 0.0, span) / self.grid.step
        k = np.floor(u).astype(int)
        k = np.clip(k, 0, self.grid.n_steps)
        frac = u - k
        snap_up = frac > 1.0 - _SNAP
        k = np.where(snap_up, k + 1, k)
        frac = np.where(snap_up | (frac < _SNAP), 0.0, frac)
        if self.interpolation == CONSTANT_LEFT:
            return self.samples[k].copy()
        hi = np.minimum(k + 1, self.grid.n_steps)
        w = frac[:, None, None]
        return (1.0 - w) * self.samples[k] + w * self.samples[hi]

    def half_samples(self):
        """Values at the step midpoints t_{k+1/2}, per the declared rule."""
        if self.interpolation == CONSTANT_LEFT:
            return self.samples[:-1].copy()
        return 0.5 * (self.samples[:-1] + self.samples[1:])

    def quadrature(self):
        """Trapezoidal integral over [0, T]; exact for piecewise-linear data."""
        h = self.grid.step
        inner = self.samples[1:-1].sum(axis=0)
        return h * (0.5 * self.samples[0] + inner + 0.5 * self.samples[-1])

    def max_abs(self):
        """Largest absolute entry over all nodes."""
        return float(np.abs(self.samples).max(initial=0.0))


def same_grid(*paths):
    """True iff all paths share one grid (same horizon and step count)."""
    g0 = paths[0].grid
    return all(p.grid == g0 for p in paths[1:])
