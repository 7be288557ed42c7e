"""Tour of the coordinate systems: simplex, zero-sum plane, Euclidean space.

Shows the power transform at work on a single composition, what happens
as its parameter moves, and how points outside the transform's image get
folded back onto the simplex.

Run:  python demos/01_transforms_and_folding.py
"""

import numpy as np

from folded_simplex import (
    FoldBranch,
    alpha_transform,
    alpha_transform_inverse,
    clr,
    fold,
    fold_scale,
    helmert_submatrix,
    in_alpha_region,
    log_jacobian_folded,
    log_jacobian_inside,
    unfold,
)

x = np.array([0.5, 0.3, 0.2])
print("composition x =", x)

print("\n--- the transform family ---")
for a in (1.0, 0.5, 0.0, -0.5, -1.0):
    z = alpha_transform(x, a)
    back = alpha_transform_inverse(z, a)
    print(f"a={a:+.1f}: z = {np.round(z, 4)}  (round trip error "
          f"{np.abs(back - x).max():.1e})")

print("\nAt a=0 the transform is the isometric log-ratio map;")
print("clr(x) =", np.round(clr(x), 4), "(sums to zero)")

h = helmert_submatrix(3)
print("\nHelmert sub-matrix (orthonormal rows, kills the ones vector):")
print(np.round(h, 4))

print("\n--- the image region and folding ---")
a = 1.0
z = alpha_transform(x, a)
print(f"z_1(x) = {np.round(z, 4)} is inside the image:", in_alpha_region(z, a))

# Walk outward until we exit the image, then fold back in.
direction = z / np.linalg.norm(z)
for t in (1.0, 3.0, 6.0):
    y = z + t * direction
    inside = in_alpha_region(y, a)
    xf, branch = fold(y, a)
    print(f"y = z + {t:.0f}*u: inside={inside!s:5}  fold -> "
          f"{np.round(xf, 4)} ({branch.value})")

print("\nFolding is an involution on the outside region:")
y_out = unfold(x, a, FoldBranch.FOLDED)
xb, branch = fold(y_out, a)
print("unfold(x, folded) =", np.round(y_out, 4))
print("fold back         =", np.round(xb, 4), f"({branch.value})")
print("fold scale w*(x)  =", round(fold_scale(x, a), 4), "(always in (-1, 0))")

print("\n--- change-of-variables factors ---")
for a in (1.0, 0.5, -0.5):
    j_in = log_jacobian_inside(x, a)
    j_fold = log_jacobian_folded(x, a)
    print(f"a={a:+.1f}: log|J_inside| = {j_in:7.4f}   "
          f"log|J_folded| = {j_fold:7.4f}")
print("(at a=1 with three parts, log|J_inside| = 2.5 log 3 ="
      f" {2.5 * np.log(3):.4f} exactly)")
