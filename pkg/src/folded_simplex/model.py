"""The folded multivariate normal distribution on the simplex.

A normal vector Y in R^{D-1} induces a composition by folding: points in
the transform image map through the plain inverse, points outside are
folded in. The resulting density on the simplex has two branches,

    inside:  jacobian(x) * phi(t(x); mu, sigma)
    folded:  jacobian(x) / w*^{2(D-1)} * phi(t(x)/w*^2; mu, sigma)

where ``t`` is the power transform, ``phi`` the (D-1)-variate normal
density, ``jacobian`` the transform's change-of-variables factor and
``w*`` the fold scale. The two branch densities integrate to the normal
mass inside/outside the transform image, so their plain sum is the exact
density of the sampling procedure, while the ``p``-weighted mixture (the
form used for likelihood fitting) reweights the branches.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cholesky, solve_triangular

from . import geometry
from .errors import DataValidationError, NotPositiveDefiniteError

__all__ = [
    "FoldedNormalParams",
    "BranchLogDensities",
    "branch_log_densities",
    "log_density",
    "log_sampling_density",
    "logistic_normal_log_density",
    "sample",
]

_LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True)
class FoldedNormalParams:
    """Parameter set (alpha, p, mu, sigma) of the folded normal model.

    ``mu`` has length D-1 and ``sigma`` is a symmetric positive-definite
    (D-1) x (D-1) matrix, both living in the transformed space. ``p`` is
    the mixing weight of the inside branch; when ``alpha`` is 0 the model
    is the logistic normal and ``p`` must be 1.
    """

    alpha: float
    p: float
    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "mu", np.atleast_1d(np.asarray(self.mu, float)))
        object.__setattr__(self, "sigma", np.asarray(self.sigma, float))
        if not -1.0 <= self.alpha <= 1.0:
            raise DataValidationError(f"alpha must lie in [-1, 1], got {self.alpha}")
        if not 0.0 <= self.p <= 1.0:
            raise DataValidationError(f"p must lie in [0, 1], got {self.p}")
        if self.alpha == 0.0 and self.p != 1.0:
            raise DataValidationError("p must equal 1 when alpha is 0")
        d = self.mu.shape[0]
        if self.sigma.shape != (d, d):
            raise DataValidationError(
                f"sigma must be {(d, d)} to match mu, got {self.sigma.shape}"
            )
        if np.abs(self.sigma - self.sigma.T).max() > 1e-10:
            raise DataValidationError("sigma must be symmetric (tol 1e-10)")
        _chol(self.sigma)  # raises if not positive definite

    @property
    def n_parts(self) -> int:
        return self.mu.shape[0] + 1


@dataclass(frozen=True)
class BranchLogDensities:
    """Per-branch log-densities, Jacobians included, mixing weights not."""

    log_inside: np.ndarray | float
    log_folded: np.ndarray | float

    def log_sum(self) -> np.ndarray | float:
        """Log of the plain branch sum (the sampling density)."""
        return np.logaddexp(self.log_inside, self.log_folded)


def _chol(sigma: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor, mapping failure to the library error."""
    try:
        return cholesky(sigma, lower=True)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - scipy raises its own
        raise NotPositiveDefiniteError(str(exc)) from exc
    except Exception as exc:
        raise NotPositiveDefiniteError(
            f"covariance is not positive definite: {exc}"
        ) from exc


def normal_logpdf(y: np.ndarray, mu: np.ndarray, chol_lower: np.ndarray) -> np.ndarray:
    """Multivariate normal log-density from a precomputed Cholesky factor.

    ``y`` may be a single vector or an (n, d) batch; non-finite rows get
    -inf rather than propagating NaNs (they arise as folded images of
    barycentric points).
    """
    y = np.atleast_2d(np.asarray(y, dtype=float))
    d = mu.shape[0]
    logdet = 2.0 * np.log(np.diag(chol_lower)).sum()
    dev = y - mu
    bad = ~np.isfinite(dev).all(axis=1)
    if bad.any():
        dev = np.where(bad[:, None], 0.0, dev)
    q = solve_triangular(chol_lower, dev.T, lower=True)
    quad = (q * q).sum(axis=0)
    out = -0.5 * (d * _LOG_2PI + logdet + quad)
    if bad.any():
        out[bad] = -np.inf
    return out


def branch_log_densities(
    x: np.ndarray, params: FoldedNormalParams
) -> BranchLogDensities:
    """Log-density of each branch at composition(s) ``x``.

    Both branches include their full change-of-variables factors. The
    inside branch integrates (over the simplex) to the normal mass of
    the transform image and the folded branch to the complement, so
    ``log_sum()`` is the exact log-density of :func:`sample`'s output.

    Requires ``params.alpha != 0``.
    """
    a = params.alpha
    if a == 0.0:
        raise ValueError("branch densities are defined for alpha != 0")
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    xb = np.atleast_2d(x)
    n_parts = xb.shape[-1]
    d = n_parts - 1
    if params.n_parts != n_parts:
        raise DataValidationError(
            f"params are for {params.n_parts} parts, data has {n_parts}"
        )

    h = geometry.helmert_submatrix(n_parts)
    w = geometry.alpha_clr(xb, a)
    y1 = w @ h.T
    ws = (a * w).min(axis=-1)

    logj0 = geometry.log_jacobian_inside(xb, a)
    lower = _chol(params.sigma)
    log_inside = logj0 + normal_logpdf(y1, params.mu, lower)

    # Guard barycentric points: the folded pre-image escapes to infinity
    # and carries no density.
    safe = np.abs(ws) >= geometry.FOLD_SCALE_FLOOR
    ws_safe = np.where(safe, ws, 1.0)
    y2 = y1 / ws_safe[:, None] ** 2
    logjf = logj0 - 2.0 * d * np.log(np.abs(ws_safe))
    log_folded = logjf + normal_logpdf(y2, params.mu, lower)
    log_folded = np.where(safe, log_folded, -np.inf)

    if single:
        return BranchLogDensities(float(log_inside[0]), float(log_folded[0]))
    return BranchLogDensities(log_inside, log_folded)


def log_density(x: np.ndarray, params: FoldedNormalParams) -> np.ndarray | float:
    """Log of the p-weighted two-branch mixture (the fitting objective).

    For ``alpha != 0`` this is log(p * f_in + (1-p) * f_fold) evaluated
    with a stable log-sum-exp, short-circuiting to a single branch when
    ``p`` is 0 or 1. At ``alpha == 0`` it is the logistic normal
    log-density. Note the weighted form is the likelihood the model is
    fitted by; the distribution of :func:`sample` has density
    exp(:func:`log_sampling_density`), the unweighted branch sum.
    """
    if params.alpha == 0.0:
        return logistic_normal_log_density(x, params.mu, params.sigma)
    parts = branch_log_densities(x, params)
    if params.p == 1.0:
        return parts.log_inside
    if params.p == 0.0:
        return parts.log_folded
    return np.logaddexp(
        np.log(params.p) + parts.log_inside,
        np.log1p(-params.p) + parts.log_folded,
    )


def log_sampling_density(
    x: np.ndarray, alpha: float, mu: np.ndarray, sigma: np.ndarray
) -> np.ndarray | float:
    """Exact log-density of the folding sampler's output.

    The plain sum of the two branch densities; integrates to 1 over the
    simplex. The branch masses are induced by (alpha, mu, sigma), so no
    mixing weight enters. At ``alpha == 0`` this is the logistic normal.
    """
    if alpha == 0.0:
        return logistic_normal_log_density(x, mu, sigma)
    params = FoldedNormalParams(alpha=alpha, p=0.5, mu=mu, sigma=sigma)
    return branch_log_densities(x, params).log_sum()


def logistic_normal_log_density(
    x: np.ndarray, mu: np.ndarray, sigma: np.ndarray
) -> np.ndarray | float:
    """Log-density of the logistic normal (the alpha -> 0 limit).

    Normal log-density of the isometric log-ratio coordinates plus the
    transform's log Jacobian, -sum_i log x_i - (1/2) log D.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    xb = np.atleast_2d(x)
    mu = np.atleast_1d(np.asarray(mu, float))
    n_parts = xb.shape[-1]
    if mu.shape[0] != n_parts - 1:
        raise DataValidationError(
            f"mu has length {mu.shape[0]}, expected {n_parts - 1}"
        )
    z = geometry.alpha_transform(xb, 0.0)
    lower = _chol(np.asarray(sigma, float))
    out = (
        normal_logpdf(z, mu, lower)
        - np.log(xb).sum(axis=-1)
        - 0.5 * np.log(n_parts)
    )
    return float(out[0]) if single else out


def sample(params: FoldedNormalParams, n: int, seed=None) -> np.ndarray:
    """Draw ``n`` compositions from the folded normal model.

    Draws Y ~ N(mu, sigma) and folds each point onto the simplex (or,
    at ``alpha == 0``, inverts the log-ratio transform, under which every
    point is an image). The mixing weight ``p`` in ``params`` is ignored:
    the branch proportions are induced by how much normal mass falls
    outside the transform image.

    Returns an (n, D) array; deterministic for a given ``seed``.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    rng = np.random.default_rng(seed)
    d = params.mu.shape[0]
    lower = _chol(params.sigma)
    y = rng.standard_normal((n, d)) @ lower.T + params.mu
    if n == 0:
        return np.empty((0, d + 1))
    if params.alpha == 0.0:
        h = geometry.helmert_submatrix(d + 1)
        return geometry.clr_inverse(y @ h)
    x, _ = geometry.fold(y, params.alpha)
    return x


# Convenience handle used by fitting code: branch densities evaluated on
# precomputed transforms (avoids re-deriving y1/y2/Jacobians per call).
@dataclass
class TransformedData:
    """Per-row transform quantities of a dataset at a fixed alpha."""

    alpha: float
    y1: np.ndarray
    y2: np.ndarray
    log_jac_inside: np.ndarray
    log_jac_folded: np.ndarray
    folded_ok: np.ndarray = field(repr=False)

    @classmethod
    def from_compositions(cls, x: np.ndarray, alpha: float) -> "TransformedData":
        if alpha == 0.0:
            raise ValueError("TransformedData requires alpha != 0")
        x = np.atleast_2d(np.asarray(x, dtype=float))
        n_parts = x.shape[-1]
        d = n_parts - 1
        h = geometry.helmert_submatrix(n_parts)
        w = geometry.alpha_clr(x, alpha)
        y1 = w @ h.T
        ws = (alpha * w).min(axis=-1)
        ok = np.abs(ws) >= geometry.FOLD_SCALE_FLOOR
        ws_safe = np.where(ok, ws, 1.0)
        y2 = y1 / ws_safe[:, None] ** 2
        logj0 = np.asarray(geometry.log_jacobian_inside(x, alpha), dtype=float)
        logjf = logj0 - 2.0 * d * np.log(np.abs(ws_safe))
        logjf = np.where(ok, logjf, -np.inf)
        return cls(alpha, y1, y2, logj0, logjf, ok)

    def take(self, rows: np.ndarray) -> "TransformedData":
        """Row subset (used by bootstrap resampling)."""
        return TransformedData(
            self.alpha,
            self.y1[rows],
            self.y2[rows],
            self.log_jac_inside[rows],
            self.log_jac_folded[rows],
            self.folded_ok[rows],
        )

    def branch_log_densities(
        self, mu: np.ndarray, chol_lower: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray]:
        log_in = self.log_jac_inside + normal_logpdf(self.y1, mu, chol_lower)
        log_fold = self.log_jac_folded + normal_logpdf(self.y2, mu, chol_lower)
        return log_in, log_fold
