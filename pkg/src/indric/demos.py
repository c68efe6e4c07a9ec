"""Built-in demo problems used by the CLI and the test suite.

Three small control problems with indefinite control weights:

* ``2d-rotation``: two states coupled through rotation-like input and
  noise matrices, diagonal drift, unit terminal weight, running cost on
  the controls only.
* ``1d-general``: scalar problem with free drift/input/noise/state-cost
  constants.
* ``1d-constant``: the scalar benchmark a = c = q = 0, b = d = g = 1 on
  [0, 1]; the single interesting knob is the control weight r.
"""

from __future__ import annotations

import numpy as np

from .riccati import RiccatiProblem


def demo_2d_rotation(a1=1.0, a2=1.0, r1=-0.02, r2=-0.02, horizon=1.0, n_steps=1000):
    A = np.diag([a1, a2])
    B = np.array([[0.0, 1.0], [-1.0, 0.0]])
    C = np.array([[0.0, 1.0], [1.0, 0.0]])
    D = np.eye(2)
    R = np.diag([r1, r2])
    Q = np.zeros((2, 2))
    G = np.eye(2)
    return RiccatiProblem.from_constants(A, B, C, D, R, Q, G, horizon, n_steps)


def demo_1d_general(a=0.5, b=1.0, c=0.5, q=-0.1, r=0.0, horizon=1.0, n_steps=1000):
    return RiccatiProblem.from_constants(a, b, c, 1.0, r, q, 1.0, horizon, n_steps)


def demo_1d_constant(r=-0.05, horizon=1.0, n_steps=1000):
    return RiccatiProblem.from_constants(0.0, 1.0, 0.0, 1.0, r, 0.0, 1.0, horizon, n_steps)


DEMOS = {
    "2d-rotation": (demo_2d_rotation, ("a1", "a2", "r1", "r2")),
    "1d-general": (demo_1d_general, ("a", "b", "c", "q", "r")),
    "1d-constant": (demo_1d_constant, ("r",)),
}


def build_demo(name, n_steps=1000, horizon=1.0, **params):
    """Instantiate a named demo, overriding only the parameters it exposes."""
    if name not in DEMOS:
        raise KeyError(f"unknown demo {name!r}; choose from {sorted(DEMOS)}")
    builder, allowed = DEMOS[name]
    unknown = set(params) - set(allowed)
    if unknown:
        raise KeyError(f"demo {name!r} does not take parameters {sorted(unknown)}")
    return builder(horizon=horizon, n_steps=n_steps, **params)
