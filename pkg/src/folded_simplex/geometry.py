"""Maps between the simplex, the zero-sum hyperplane and Euclidean space.

The open simplex S^{D-1} holds compositions: strictly positive vectors
summing to 1. Three coordinate systems are used throughout:

* compositions ``x`` of length D on the simplex,
* zero-sum vectors ``w`` of length D on the hyperplane sum(w) = 0,
* unconstrained vectors ``y`` of length D-1, obtained from ``w`` by the
  Helmert sub-matrix.

The power-parameterized transform (``alpha_transform``) maps the simplex
one-to-one onto a bounded region of R^{D-1} when ``a != 0`` and reduces to
the isometric log-ratio transform as ``a -> 0``. Points outside that region
are mapped back onto the simplex by a folding transform, mirroring the
construction of the folded normal on the real line.

All functions operate on the last axis and broadcast over leading axes.
"""

from __future__ import annotations

import enum
from functools import lru_cache

import numpy as np

from .errors import (
    DataValidationError,
    FoldFailureError,
    InvalidDimensionError,
    OutOfRegionError,
    SingularFoldError,
)

__all__ = [
    "FoldBranch",
    "helmert_submatrix",
    "validate_compositions",
    "closure",
    "clr",
    "clr_inverse",
    "alpha_power",
    "alpha_clr",
    "alpha_clr_inverse",
    "alpha_transform",
    "alpha_transform_inverse",
    "in_alpha_region",
    "fold_scale",
    "fold",
    "unfold",
    "log_jacobian_inside",
    "log_jacobian_folded",
]

# Below this magnitude the fold scale is treated as zero (the fold is
# undefined at the barycenter, where the scale vanishes).
FOLD_SCALE_FLOOR = 1e-12


class FoldBranch(enum.Enum):
    """Which branch of the folding transform produced a composition."""

    INSIDE = "inside"
    FOLDED = "folded"


@lru_cache(maxsize=64)
def helmert_submatrix(n_parts: int) -> np.ndarray:
    """Orthonormal (D-1) x D matrix spanning the zero-sum hyperplane.

    Row i (1-based) has entries 1/sqrt(i(i+1)) in the first i positions,
    -i/sqrt(i(i+1)) in position i+1 and zeros afterwards. Rows are
    orthonormal and orthogonal to the all-ones vector, so left
    multiplication is an isometry from {w : sum(w) = 0} onto R^{D-1}.

    Parameters
    ----------
    n_parts : int
        Number of parts D (>= 2).

    Returns
    -------
    (D-1, D) ndarray, read-only.
    """
    if n_parts < 2:
        raise InvalidDimensionError(f"need at least 2 parts, got {n_parts}")
    d = n_parts - 1
    h = np.zeros((d, n_parts))
    for i in range(1, n_parts):
        s = 1.0 / np.sqrt(i * (i + 1))
        h[i - 1, :i] = s
        h[i - 1, i] = -i * s
    h.flags.writeable = False
    return h


def closure(parts: np.ndarray) -> np.ndarray:
    """Rescale positive parts to unit sum along the last axis."""
    parts = np.asarray(parts, dtype=float)
    if parts.shape[-1] < 2:
        raise InvalidDimensionError("compositions need at least 2 parts")
    if not np.all(np.isfinite(parts)):
        raise DataValidationError("composition entries must be finite")
    if np.any(parts <= 0.0):
        raise DataValidationError(
            "composition entries must be strictly positive; zero or "
            "negative parts are outside the scope of this model"
        )
    return parts / parts.sum(axis=-1, keepdims=True)


def validate_compositions(
    x: np.ndarray, atol: float = 1e-6, normalize: bool = False
) -> np.ndarray:
    """Check (and exactly re-close) compositions on the last axis.

    Entries must be strictly positive. Unless ``normalize`` is set, row
    sums must already be within ``atol`` of 1; rows are then rescaled to
    machine-precision unit sum.
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1] < 2:
        raise InvalidDimensionError("compositions need at least 2 parts")
    if not np.all(np.isfinite(x)):
        raise DataValidationError("composition entries must be finite")
    if np.any(x <= 0.0):
        raise DataValidationError(
            "composition entries must be strictly positive; zero or "
            "negative parts are outside the scope of this model"
        )
    sums = x.sum(axis=-1)
    if not normalize and np.any(np.abs(sums - 1.0) > atol):
        worst = float(np.abs(sums - 1.0).max())
        raise DataValidationError(
            f"rows must sum to 1 within {atol:g} (worst deviation "
            f"{worst:.3g}); pass normalize=True to rescale"
        )
    return x / sums[..., None]


def clr(x: np.ndarray) -> np.ndarray:
    """Centered log-ratio transform: log parts minus their mean.

    Output sums to zero along the last axis.
    """
    logx = np.log(_as_composition(x))
    return logx - logx.mean(axis=-1, keepdims=True)


def clr_inverse(w: np.ndarray) -> np.ndarray:
    """Inverse centered log-ratio: softmax along the last axis.

    The maximum is subtracted before exponentiating, so any constant
    shift of ``w`` gives the same composition and overflow cannot occur.
    """
    w = np.asarray(w, dtype=float)
    e = np.exp(w - w.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def alpha_power(x: np.ndarray, a: float) -> np.ndarray:
    """Power transform u_i = x_i^a / sum_j x_j^a (a composition again)."""
    xa = _as_composition(x) ** a
    return xa / xa.sum(axis=-1, keepdims=True)


def alpha_clr(x: np.ndarray, a: float) -> np.ndarray:
    """Zero-sum stage of the power transform: (D * u - 1) / a.

    Requires ``a != 0``; use :func:`clr`, its pointwise limit, at a = 0.
    """
    if a == 0.0:
        raise ValueError("alpha_clr requires a != 0; use clr at a = 0")
    x = _as_composition(x)
    n_parts = x.shape[-1]
    return (n_parts * alpha_power(x, a) - 1.0) / a


def alpha_clr_inverse(m: np.ndarray, a: float) -> np.ndarray:
    """Map a zero-sum vector back to the simplex for ``a != 0``.

    Computes x_i proportional to (1 + a*m_i)^(1/a), evaluated as
    exp(log1p(a*m_i)/a) with the maximum subtracted, which is stable for
    tiny ``a``. Requires 1 + a*m_i > 0 for every component.
    """
    if a == 0.0:
        raise ValueError("alpha_clr_inverse requires a != 0; use clr_inverse")
    m = np.asarray(m, dtype=float)
    s = 1.0 + a * m
    if np.any(s <= 0.0):
        raise OutOfRegionError(
            "1 + a*m must be strictly positive componentwise; the point "
            "lies outside the image of the simplex (fold it instead)"
        )
    logpow = np.log1p(a * m) / a
    e = np.exp(logpow - logpow.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def alpha_transform(x: np.ndarray, a: float) -> np.ndarray:
    """Full transform from the simplex to R^{D-1}.

    Helmert projection of :func:`alpha_clr` (or of :func:`clr` at a = 0).
    One-to-one onto a bounded region for a != 0; onto all of R^{D-1} at
    a = 0, where it is the isometric log-ratio transform.
    """
    x = _as_composition(x)
    h = helmert_submatrix(x.shape[-1])
    w = clr(x) if a == 0.0 else alpha_clr(x, a)
    return w @ h.T


def alpha_transform_inverse(y: np.ndarray, a: float) -> np.ndarray:
    """Inverse of :func:`alpha_transform` on its image.

    Raises
    ------
    OutOfRegionError
        If ``y`` is outside the image of the simplex (only possible for
        a != 0).
    """
    y = np.asarray(y, dtype=float)
    h = helmert_submatrix(y.shape[-1] + 1)
    w = y @ h
    if a == 0.0:
        return clr_inverse(w)
    return alpha_clr_inverse(w, a)


def in_alpha_region(y: np.ndarray, a: float) -> np.ndarray | bool:
    """Whether Euclidean points are images of compositions.

    True iff a = 0, or min_i(1 + a * (H^T y)_i) > 0 (strict: boundary
    points count as outside because the transform Jacobian is undefined
    there). Returns a scalar bool for a single point, a bool array for a
    batch.
    """
    y = np.asarray(y, dtype=float)
    if a == 0.0:
        shape = y.shape[:-1]
        return True if shape == () else np.ones(shape, dtype=bool)
    h = helmert_submatrix(y.shape[-1] + 1)
    w = y @ h
    inside = (1.0 + a * w).min(axis=-1) > 0.0
    return bool(inside) if inside.ndim == 0 else inside


def fold_scale(x: np.ndarray, a: float) -> np.ndarray | float:
    """Extreme-coordinate scale w* = min_i(a * w_i) of a composition.

    Always lies in (-1, 0] for interior compositions, hitting 0 only at
    the barycenter. Tracks the constraint 1 + a*w_i > 0 for either sign
    of ``a`` (it equals a*min(w) for a > 0 and a*max(w) for a < 0).
    """
    ws = (a * alpha_clr(x, a)).min(axis=-1)
    return float(ws) if ws.ndim == 0 else ws


def fold(y: np.ndarray, a: float) -> tuple[np.ndarray, FoldBranch | np.ndarray]:
    """Map arbitrary points of R^{D-1} onto the simplex.

    Points inside the transform image map through the plain inverse;
    outside points are first shrunk by the squared extreme coordinate
    q* = min_i(a * (H^T y)_i) of their hyperplane representation:
    x = inverse(H^T y / q*^2).

    Returns
    -------
    (composition, branch)
        ``branch`` is a :class:`FoldBranch` for a single point or an
        array of them for a batch.

    Raises
    ------
    FoldFailureError
        If a folded point still violates the inverse's domain (can only
        happen on the measure-zero boundary of the region).
    """
    if a == 0.0:
        raise ValueError("fold requires a != 0; every point is inside at a = 0")
    y = np.asarray(y, dtype=float)
    single = y.ndim == 1
    ybatch = np.atleast_2d(y)
    n_parts = ybatch.shape[-1] + 1
    h = helmert_submatrix(n_parts)
    w = ybatch @ h

    s = 1.0 + a * w
    inside = s.min(axis=-1) > 0.0
    out = np.empty((ybatch.shape[0], n_parts))

    if np.any(inside):
        out[inside] = alpha_clr_inverse(w[inside], a)
    if np.any(~inside):
        w_out = w[~inside]
        qs = (a * w_out).min(axis=-1)
        m = w_out / qs[:, None] ** 2
        if np.any(1.0 + a * m <= 0.0):
            raise FoldFailureError(
                "folded point still outside the simplex (boundary input)"
            )
        out[~inside] = alpha_clr_inverse(m, a)

    if single:
        return out[0], FoldBranch.INSIDE if inside[0] else FoldBranch.FOLDED
    branches = np.where(inside, FoldBranch.INSIDE, FoldBranch.FOLDED)
    return out, branches


def unfold(
    x: np.ndarray, a: float, branch: FoldBranch = FoldBranch.INSIDE
) -> np.ndarray:
    """Pre-image of a composition under :func:`fold` on a given branch.

    The inside branch is exactly :func:`alpha_transform`; the folded
    branch rescales it by 1/w*^2, producing the unique outside point
    that folds back onto ``x``.

    Raises
    ------
    SingularFoldError
        On the folded branch when |w*| < 1e-12 (composition at or
        numerically at the barycenter).
    """
    if a == 0.0:
        raise ValueError("unfold requires a != 0")
    z = alpha_transform(x, a)
    if branch is FoldBranch.INSIDE:
        return z
    ws = np.asarray(fold_scale(x, a))
    if np.any(np.abs(ws) < FOLD_SCALE_FLOOR):
        raise SingularFoldError(
            "fold scale is zero at the barycenter; folded pre-image undefined"
        )
    return z / np.asarray(ws)[..., None] ** 2


def log_jacobian_inside(x: np.ndarray, a: float) -> np.ndarray | float:
    """Log Jacobian determinant of x -> alpha_transform(x, a).

    Equals (D - 1/2) log D + (a-1) sum_i log x_i - D log sum_j x_j^a and
    is continuous in ``a`` (at a = 0 it reduces to the isometric
    log-ratio Jacobian -sum_i log x_i - (1/2) log D).
    """
    x = _as_composition(x)
    n_parts = x.shape[-1]
    logx = np.log(x)
    log_s = np.log((x**a).sum(axis=-1))
    out = (
        (n_parts - 0.5) * np.log(n_parts)
        + (a - 1.0) * logx.sum(axis=-1)
        - n_parts * log_s
    )
    return float(out) if out.ndim == 0 else out


def log_jacobian_folded(x: np.ndarray, a: float) -> np.ndarray | float:
    """Log Jacobian determinant of the folded branch x -> unfold(x)/folded.

    The folded pre-image map is the composition of the plain transform
    with the 1/w*^2 rescaling, whose own determinant is w*^{-2(D-1)}, so
    the total is log_jacobian_inside(x, a) - 2(D-1) log |w*|. This is the
    factor multiplying the normal kernel in the folded branch density.

    Raises
    ------
    SingularFoldError
        If |w*| < 1e-12.
    """
    if a == 0.0:
        raise ValueError("log_jacobian_folded requires a != 0")
    x = _as_composition(x)
    n_parts = x.shape[-1]
    ws = np.asarray(fold_scale(x, a))
    if np.any(np.abs(ws) < FOLD_SCALE_FLOOR):
        raise SingularFoldError("fold scale is zero; folded Jacobian undefined")
    out = log_jacobian_inside(x, a) - 2.0 * (n_parts - 1) * np.log(np.abs(ws))
    return float(out) if np.ndim(out) == 0 else out


def _as_composition(x: np.ndarray) -> np.ndarray:
    """Light positivity/shape check used by the transform functions."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] < 2:
        raise InvalidDimensionError("compositions need at least 2 parts")
    if np.any(x <= 0.0):
        raise DataValidationError("composition entries must be strictly positive")
    return x
