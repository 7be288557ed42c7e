"""Hypothesis tests and confidence intervals for the transform parameter.

The resampling test maps the data to null-distributed compositions (apply
the fitted transform, invert the log-ratio transform) and re-estimates
alpha on bootstrap resamples of that null sample; confidence intervals
come from percentile bootstrap or from the curvature of the profile
log-likelihood. A Monte-Carlo routine estimates how much normal mass
falls outside the transform image and attributes it to simplex faces.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.stats import norm

from . import geometry
from .errors import (
    DataValidationError,
    FoldedSimplexError,
    NonConcaveProfileError,
    NumericFailureError,
)
from .estimation import AlphaSearchResult, fit_alpha, logistic_normal_fit
from .model import FoldedNormalParams, _chol

__all__ = [
    "BootstrapTestResult",
    "OutsideProbability",
    "bootstrap_test_alpha",
    "bootstrap_ci_alpha",
    "curvature_ci_alpha",
    "curvature_interval_from_profile",
    "outside_probability",
    "percentile_interval",
]


@dataclass(frozen=True)
class BootstrapTestResult:
    """Bootstrap test of 'the log-ratio transform suffices' (alpha = 0).

    ``alpha_obs`` is the observed statistic and ``alpha_boot`` the B
    resampled statistics (the estimate of alpha itself by default, or a
    likelihood-ratio statistic when requested via ``statistic='lr'``).
    """

    alpha_obs: float
    alpha_boot: np.ndarray
    p_value: float
    statistic: str = "alpha"


@dataclass(frozen=True)
class OutsideProbability:
    """Normal mass outside the transform image, allocated per face."""

    total: float
    per_component: np.ndarray
    draws: int


def outside_probability(
    params: FoldedNormalParams,
    draws: int = 1_000_000,
    seed=None,
    chunk: int = 1_000_000,
) -> OutsideProbability:
    """Monte-Carlo estimate of the mass left outside the simplex image.

    Draws from N(mu, sigma), maps to the zero-sum hyperplane and counts
    draws violating min_i(1 + alpha * w_i) > 0. Each outside draw is
    attributed to exactly one component: the argmin of 1 + alpha * w_i
    (ties to the lowest index), i.e. the most-violated face.
    """
    if params.alpha == 0.0:
        raise ValueError("every point is inside the image at alpha = 0")
    if draws < 1:
        raise ValueError("draws must be positive")
    rng = np.random.default_rng(seed)
    d = params.mu.shape[0]
    n_parts = d + 1
    h = geometry.helmert_submatrix(n_parts)
    lower = _chol(params.sigma)

    counts = np.zeros(n_parts, dtype=np.int64)
    remaining = draws
    while remaining > 0:
        m = min(chunk, remaining)
        y = rng.standard_normal((m, d)) @ lower.T + params.mu
        s = 1.0 + params.alpha * (y @ h)
        outside = s.min(axis=1) <= 0.0
        if outside.any():
            counts += np.bincount(s[outside].argmin(axis=1), minlength=n_parts)
        remaining -= m

    per_component = counts / draws
    return OutsideProbability(
        total=float(per_component.sum()),
        per_component=per_component,
        draws=draws,
    )


def _null_transformed(data: np.ndarray, alpha_obs: float) -> np.ndarray:
    """Map data onto compositions exactly log-ratio distributed under H0.

    Applies the fitted transform, then the inverse log-ratio transform,
    so the resulting sample is what the data would look like had the
    log-ratio model generated it.
    """
    z = geometry.alpha_transform(data, alpha_obs)
    return geometry.alpha_transform_inverse(z, 0.0)


def _lr_statistic(search: AlphaSearchResult, data: np.ndarray) -> float:
    ll0 = logistic_normal_fit(data, validate=False).log_likelihood
    return 2.0 * (search.best_fit.log_likelihood - ll0)


def bootstrap_test_alpha(
    data: np.ndarray,
    B: int = 299,
    seed: int | None = None,
    statistic: str = "alpha",
    grid: np.ndarray | None = None,
    tol: float = 1e-6,
    refine_tol: float = 1e-3,
    max_retries: int = 3,
) -> BootstrapTestResult:
    """Bootstrap test of alpha = 0 against alpha != 0.

    Procedure: estimate alpha on the data (the observed statistic),
    transform the data to a null sample via :func:`_null_transformed`,
    then resample its rows B times, re-estimating the statistic each
    time. The p-value is (#{boot >= observed} + 1) / (B + 1).

    ``statistic`` selects the raw alpha estimate (``'alpha'``) or the
    likelihood-ratio statistic 2*(l(alpha_hat) - l(0)) (``'lr'``), which
    shares the same null-transformation steps. A replicate whose refit
    fails is redrawn up to ``max_retries`` times before erroring.
    """
    if B < 19:
        raise DataValidationError("B must be at least 19")
    if statistic not in ("alpha", "lr"):
        raise ValueError("statistic must be 'alpha' or 'lr'")
    x = geometry.validate_compositions(data)
    x = np.atleast_2d(x)
    n = x.shape[0]

    def estimate(sample: np.ndarray) -> float:
        search = fit_alpha(
            sample,
            grid=grid,
            refine=True,
            tol=tol,
            refine_tol=refine_tol,
            validate=False,
        )
        if statistic == "lr":
            return _lr_statistic(search, sample)
        return search.best_alpha

    search_obs = fit_alpha(
        x, grid=grid, refine=True, tol=tol, refine_tol=refine_tol, validate=False
    )
    obs = (
        _lr_statistic(search_obs, x)
        if statistic == "lr"
        else search_obs.best_alpha
    )
    null_x = _null_transformed(x, search_obs.best_alpha)

    boot = np.empty(B)
    seeds = np.random.SeedSequence(seed).spawn(B)
    for b in range(B):
        rng = np.random.default_rng(seeds[b])
        for attempt in range(max_retries + 1):
            rows = rng.integers(0, n, size=n)
            try:
                boot[b] = estimate(null_x[rows])
                break
            except FoldedSimplexError:
                if attempt == max_retries:
                    raise NumericFailureError(
                        f"bootstrap replicate {b} failed {max_retries + 1} times"
                    )

    p_value = (int((boot >= obs).sum()) + 1) / (B + 1)
    return BootstrapTestResult(
        alpha_obs=float(obs), alpha_boot=boot, p_value=p_value, statistic=statistic
    )


def bootstrap_ci_alpha(
    data: np.ndarray,
    B: int = 1000,
    level: float = 0.95,
    seed: int | None = None,
    grid: np.ndarray | None = None,
    tol: float = 1e-6,
    refine_tol: float = 1e-3,
    max_retries: int = 3,
) -> tuple[float, float]:
    """Percentile bootstrap confidence interval for alpha.

    Resamples the observations with replacement, re-estimates alpha on
    each resample and returns the lower/upper (1-level)/2 empirical
    quantiles (inverse-CDF convention: the ceil(B*q)-th order statistic).
    """
    if B < 199:
        raise DataValidationError("B must be at least 199 for a stable interval")
    if not 0.0 < level < 1.0:
        raise DataValidationError("level must be in (0, 1)")
    x = np.atleast_2d(geometry.validate_compositions(data))
    n = x.shape[0]

    boot = np.empty(B)
    seeds = np.random.SeedSequence(seed).spawn(B)
    for b in range(B):
        rng = np.random.default_rng(seeds[b])
        for attempt in range(max_retries + 1):
            rows = rng.integers(0, n, size=n)
            try:
                boot[b] = fit_alpha(
                    x[rows],
                    grid=grid,
                    refine=True,
                    tol=tol,
                    refine_tol=refine_tol,
                    validate=False,
                ).best_alpha
                break
            except FoldedSimplexError:
                if attempt == max_retries:
                    raise NumericFailureError(
                        f"bootstrap replicate {b} failed {max_retries + 1} times"
                    )

    return percentile_interval(boot, level)


def percentile_interval(values: np.ndarray, level: float) -> tuple[float, float]:
    """Equal-tail interval via inverse-CDF (type-1) empirical quantiles.

    With B values and tail mass q = (1-level)/2, the endpoints are the
    ceil(B*q)-th smallest and ceil(B*(1-q))-th smallest order statistics
    (for B=199, level=0.95: the 5th smallest and 5th largest).
    """
    values = np.sort(np.asarray(values, dtype=float))
    B = values.shape[0]
    q = (1.0 - level) / 2.0
    k_lo = max(int(np.ceil(B * q)), 1)
    k_hi = min(int(np.ceil(B * (1.0 - q))), B)
    return float(values[k_lo - 1]), float(values[k_hi - 1])


def curvature_interval_from_profile(
    profile: Callable[[float], float],
    alpha_hat: float,
    level: float = 0.95,
    h: float = 1e-2,
) -> tuple[float, float]:
    """Wald interval from the finite-difference curvature of a profile.

    Central second difference at ``alpha_hat`` with step ``h`` gives the
    observed information -l''; the standard error is its inverse square
    root.

    Raises
    ------
    NonConcaveProfileError
        If the estimated second derivative is non-negative.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    l0 = profile(alpha_hat)
    lp = profile(alpha_hat + h)
    lm = profile(alpha_hat - h)
    second = (lp - 2.0 * l0 + lm) / h**2
    if not np.isfinite(second):
        raise NumericFailureError("profile curvature is not finite")
    if second >= 0.0:
        raise NonConcaveProfileError(
            f"profile log-likelihood is not concave at {alpha_hat:.4f} "
            f"(second difference {second:.3g} >= 0); no interval"
        )
    se = 1.0 / np.sqrt(-second)
    z = norm.ppf(0.5 + level / 2.0)
    return float(alpha_hat - z * se), float(alpha_hat + z * se)


def curvature_ci_alpha(
    data: np.ndarray,
    level: float = 0.95,
    h: float = 1e-2,
    grid: np.ndarray | None = None,
    tol: float = 1e-6,
) -> tuple[float, float]:
    """Observed-information confidence interval for alpha.

    Finds the profile maximum, then applies
    :func:`curvature_interval_from_profile` to the profile around it.
    Requires an interior maximum (strictly inside (-1, 1)).
    """
    x = np.atleast_2d(geometry.validate_compositions(data))
    search = fit_alpha(x, grid=grid, tol=tol, validate=False)
    a_hat = search.best_alpha
    if not (-1.0 + h) < a_hat < (1.0 - h):
        raise NonConcaveProfileError(
            f"profile maximum {a_hat:.4f} too close to the boundary for a "
            f"curvature interval with step {h}"
        )

    warm = search.best_fit.params

    def profile(a: float) -> float:
        from .estimation import em_fit

        if a == 0.0:
            return logistic_normal_fit(x, validate=False).log_likelihood
        return em_fit(x, a, tol=tol, init=warm, validate=False).log_likelihood

    return curvature_interval_from_profile(profile, a_hat, level=level, h=h)
