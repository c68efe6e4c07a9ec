"""Shared generators for the randomized property tests."""

import numpy as np

from indric.riccati import RiccatiProblem


def rand_sym(rng, d, scale=1.0):
    m = rng.uniform(-scale, scale, (d, d))
    return 0.5 * (m + m.T)


def rand_psd(rng, d, scale=1.0):
    m = rng.uniform(-scale, scale, (d, d))
    return m @ m.T * (scale / d)


def rand_spd(rng, d, lo=0.1, hi=10.0):
    """Well-conditioned SPD matrix with eigenvalues in [lo, hi]."""
    q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    eigs = rng.uniform(lo, hi, d)
    return 0.5 * ((q * eigs) @ q.T + ((q * eigs) @ q.T).T)


def random_system(rng, d):
    """Bounded system data with a well-conditioned D."""
    a = rng.uniform(-1, 1, (d, d)) / np.sqrt(d)
    b = rng.uniform(-1, 1, (d, d)) / np.sqrt(d)
    c = rng.uniform(-1, 1, (d, d)) / np.sqrt(d)
    dmat = np.eye(d) + 0.3 * rng.uniform(-1, 1, (d, d))
    return a, b, c, dmat


def solvable_weights(rng, d):
    """Strongly definite control weight, PSD state and terminal weights."""
    r = rand_psd(rng, d) + np.eye(d)
    q = rand_psd(rng, d, 0.8)
    g = rand_psd(rng, d, 0.8)
    return r, q, g


def solvable_problem(rng, d, n_steps=400, horizon=1.0):
    a, b, c, dmat = random_system(rng, d)
    r, q, g = solvable_weights(rng, d)
    return RiccatiProblem.from_constants(a, b, c, dmat, r, q, g, horizon, n_steps)


def bisect(f, lo, hi, tol=1e-12, max_iter=200):
    """Plain bisection for a sign change of f on [lo, hi]."""
    flo, fhi = f(lo), f(hi)
    assert flo * fhi < 0, "no sign change on the bracket"
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0 or hi - lo < tol:
            return mid
        if flo * fm < 0:
            hi, fhi = mid, fm
        else:
            lo, flo = mid, fm
    return 0.5 * (lo + hi)


def scalar_implicit_p0(r):
    """P(0) for the scalar benchmark from the separable closed form.

    The trajectory satisfies ln P - r/P = t - (1 + r); at t = 0 this pins
    P(0) by a one-dimensional root find, independent of any ODE solver.
    """
    f = lambda p: np.log(p) - r / p + (1.0 + r)
    return bisect(f, 1e-6, 1.0)


def scalar_loss_time(r):
    """Time where the scalar benchmark's margin r + P hits zero (r < 0)."""
    return float(np.log(-r) + 2.0 + r)
