"""Shared fixtures and independent numerical oracles for the test suite."""

import numpy as np
import pytest

from folded_simplex import geometry, load_arctic_lake

# Reference parameters used across tests: a 3-part setting with known
# outside-mass structure, and the 5-part covariance of the recovery study.
MU_3 = np.array([0.561, 0.547])
SIGMA_3 = np.array([[0.5, 0.25], [0.25, 0.35]])

MU_5_NEG = np.array([1.715, 0.914, 0.115, 0.167])
MU_5_POS = np.array([-0.566, -0.979, -0.648, -0.651])
SIGMA_5 = np.array(
    [
        [0.149, -0.458, 0.002, -0.005],
        [-0.458, 1.523, 0.000, 0.007],
        [0.002, 0.000, 0.037, -0.047],
        [-0.005, 0.007, -0.047, 0.061],
    ]
)


@pytest.fixture(scope="session")
def arctic_lake():
    parts, depth, names = load_arctic_lake()
    return parts


def random_compositions(n, n_parts, seed, concentration=2.0):
    """Dirichlet test compositions away from extreme boundary values."""
    rng = np.random.default_rng(seed)
    return rng.dirichlet(np.full(n_parts, concentration), size=n)


def fd_jacobian_dets_inside(x, a, h=1e-7):
    """|det| of the forward transform x -> t(x, a) by central differences.

    Differentiates in the first D-1 free coordinates (the last part
    carries the unit-sum constraint), batched over rows of ``x``. This
    is the oracle for the inside-branch change-of-variables factor.
    """
    x = np.atleast_2d(x)
    n, n_parts = x.shape
    d = n_parts - 1

    def to_full(free):
        return np.concatenate(
            [free, 1.0 - free.sum(axis=-1, keepdims=True)], axis=-1
        )

    free = x[:, :d]
    plus = np.repeat(free[:, None, :], d, axis=1) + h * np.eye(d)
    minus = np.repeat(free[:, None, :], d, axis=1) - h * np.eye(d)
    t_plus = geometry.alpha_transform(to_full(plus.reshape(-1, d)), a)
    t_minus = geometry.alpha_transform(to_full(minus.reshape(-1, d)), a)
    cols = (t_plus - t_minus).reshape(n, d, d) / (2.0 * h)
    jac = np.swapaxes(cols, 1, 2)  # J[i, out, in]
    return np.abs(np.linalg.det(jac))


def fd_jacobian_dets_fold(y, a, h=1e-7):
    """|det| of the folding map y -> fold(y, a) by central differences.

    Measured in the first D-1 parts of the output composition; batched
    over rows of ``y``. Oracle for the folded-branch factor (its inverse
    direction). The step scales with each row's magnitude: folded
    pre-images can sit thousands of units out, where a fixed 1e-7 step
    would be pure roundoff.
    """
    y = np.atleast_2d(y)
    n, d = y.shape
    step = h * np.maximum(1.0, np.abs(y).max(axis=1))  # (n,)
    eye = np.eye(d)
    offsets = step[:, None, None] * eye
    plus = y[:, None, :] + offsets
    minus = y[:, None, :] - offsets
    x_plus, _ = geometry.fold(plus.reshape(-1, d), a)
    x_minus, _ = geometry.fold(minus.reshape(-1, d), a)
    cols = (x_plus[:, :d] - x_minus[:, :d]).reshape(n, d, d) / (
        2.0 * step[:, None, None]
    )
    jac = np.swapaxes(cols, 1, 2)
    return np.abs(np.linalg.det(jac))


def dirichlet_integral(log_density_fn, n_parts, draws, seed, concentration=1.0):
    """Monte-Carlo integral of a simplex density by importance sampling.

    Uses a Dirichlet proposal; with concentration 1 the proposal density
    over the free coordinates is the constant (D-1)!.
    """
    from math import factorial, lgamma

    rng = np.random.default_rng(seed)
    x = rng.dirichlet(np.full(n_parts, concentration), size=draws)
    logf = log_density_fn(x)
    if concentration == 1.0:
        log_q = np.full(draws, np.log(float(factorial(n_parts - 1))))
    else:
        c = concentration
        log_norm = lgamma(n_parts * c) - n_parts * lgamma(c)
        log_q = log_norm + (c - 1.0) * np.log(x).sum(axis=1)
    ratio = np.exp(logf - log_q)
    return float(ratio.mean()), float(ratio.std() / np.sqrt(draws))
