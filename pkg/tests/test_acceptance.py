"""Acceptance suite: one test per release criterion, stated tolerances.

Each test prints a ``[criterion N] PASS`` line (visible with ``pytest -s``
or in captured output) and asserts its own runtime budget. Criterion 9
runs only when a Sharp-data CSV is supplied through the
FOLDED_SIMPLEX_SHARP_DATA environment variable, since that dataset is
not redistributable here.

Criterion 4 note: the two-sided table of outside probabilities is split
into sub-tests. The positive-alpha row of the published table cannot be
reproduced from its stated parameters (see tests and the measured values
they print); that sub-test is expected to fail and documents the
discrepancy rather than hiding it.
"""

import os
import time

import numpy as np
import pytest

from folded_simplex import (
    ARCTIC_LAKE_INFLUENTIAL_ROWS,
    FoldBranch,
    FoldedNormalParams,
    alpha_transform,
    alpha_transform_inverse,
    bootstrap_ci_alpha,
    bootstrap_test_alpha,
    contour_grid,
    covariance_distance,
    em_fit,
    euclidean_distance,
    fit_alpha,
    fold,
    frechet_mean,
    load_arctic_lake,
    log_sampling_density,
    logistic_normal_fit,
    outside_probability,
    profile_loglik,
    sample,
    unfold,
)

from conftest import (
    MU_3,
    MU_5_NEG,
    MU_5_POS,
    SIGMA_3,
    SIGMA_5,
    dirichlet_integral,
    fd_jacobian_dets_fold,
    fd_jacobian_dets_inside,
    random_compositions,
)

ALPHAS = (-1.0, -0.5, -0.1, 0.1, 0.5, 1.0)
PARTS = (3, 5, 10)

TABLE1_KAPPAS = (0.5, 1.0, 2.0, 3.0, 5.0, 7.0, 10.0)
TABLE1_NEG = (0.0281, 0.0925, 0.1997, 0.2800, 0.3900, 0.4630, 0.5377)
TABLE1_POS = (0.0223, 0.1048, 0.1849, 0.3060, 0.4217, 0.4750, 0.5356)


class Budget:
    """Context manager asserting a wall-clock limit for a criterion."""

    def __init__(self, seconds, label):
        self.limit = seconds
        self.label = label

    def __enter__(self):
        self.start = time.monotonic()
        return self

    def __exit__(self, exc_type, *exc):
        elapsed = time.monotonic() - self.start
        if exc_type is None:
            print(f"[{self.label}] PASS in {elapsed:.1f}s (budget {self.limit:.0f}s)")
            assert elapsed < self.limit, (
                f"{self.label} exceeded runtime budget: {elapsed:.1f}s"
            )
        return False


def test_c01_round_trip_identities():
    with Budget(10.0, "criterion 1"):
        for n_parts in PARTS:
            x = random_compositions(1000, n_parts, seed=n_parts)
            for a in ALPHAS:
                z = alpha_transform(x, a)
                assert np.abs(alpha_transform_inverse(z, a) - x).max() < 1e-8
                y_out = unfold(x, a, FoldBranch.FOLDED)
                xb, branch = fold(y_out, a)
                assert np.all(branch == FoldBranch.FOLDED)
                assert np.abs(xb - x).max() < 1e-8
                assert np.abs(unfold(xb, a, FoldBranch.FOLDED) - y_out).max() < 1e-8


def test_c02_jacobian_lemmas():
    from folded_simplex import log_jacobian_folded, log_jacobian_inside

    with Budget(30.0, "criterion 2"):
        for n_parts in PARTS:
            for a in ALPHAS:
                x = random_compositions(100, n_parts, seed=int(10 * abs(a)) + n_parts)
                dets = fd_jacobian_dets_inside(x, a)
                np.testing.assert_allclose(
                    np.exp(log_jacobian_inside(x, a)), dets, rtol=1e-4
                )
                y_out = unfold(x, a, FoldBranch.FOLDED)
                dets_fold = fd_jacobian_dets_fold(y_out, a)
                np.testing.assert_allclose(
                    np.exp(-log_jacobian_folded(x, a)), dets_fold, rtol=1e-4
                )


def test_c03_density_normalization():
    settings = [
        (1.0, MU_3, SIGMA_3),
        (1.0, MU_3, 5.0 * SIGMA_3),
        (-0.5, MU_3, SIGMA_3),
    ]
    with Budget(60.0, "criterion 3"):
        for i, (a, mu, sigma) in enumerate(settings):
            est, se = dirichlet_integral(
                lambda x: log_sampling_density(x, a, mu, sigma),
                n_parts=3,
                draws=2_000_000,
                seed=100 + i,
            )
            assert abs(est - 1.0) < 0.01, f"setting {i}: integral {est:.4f}"


def test_c04a_outside_probability_contour_settings():
    with Budget(120.0, "criterion 4a"):
        p1 = outside_probability(
            FoldedNormalParams(1.0, 1.0, MU_3, SIGMA_3), draws=10_000_000, seed=11
        )
        assert abs(p1.total - 0.15) <= 0.005
        np.testing.assert_allclose(
            p1.per_component, [0.008, 0.018, 0.124], atol=0.003
        )
        p2 = outside_probability(
            FoldedNormalParams(1.0, 1.0, MU_3, 5.0 * SIGMA_3),
            draws=10_000_000,
            seed=12,
        )
        assert abs(p2.total - 0.557) <= 0.005
        np.testing.assert_allclose(
            p2.per_component, [0.141, 0.138, 0.278], atol=0.003
        )


def test_c04b_outside_probability_table_negative_alpha():
    with Budget(90.0, "criterion 4b"):
        for kappa, expected in zip(TABLE1_KAPPAS, TABLE1_NEG):
            params = FoldedNormalParams(-0.5, 1.0, MU_5_NEG, kappa * SIGMA_5)
            got = outside_probability(params, draws=2_000_000, seed=13).total
            assert abs(got - expected) <= 0.005, (
                f"kappa={kappa}: {got:.4f} vs published {expected}"
            )


def test_c04c_outside_probability_table_positive_alpha():
    # The published positive-alpha row is not reproducible from its
    # stated mean vector: the measured values below disagree with the
    # printed ones far beyond Monte-Carlo error (while the negative-alpha
    # row, both contour-setting values including their per-face
    # allocations, and all spot checks of the second table reproduce
    # exactly). This test states the published numbers as written and is
    # expected to fail; the printout records the measured row.
    with Budget(90.0, "criterion 4c"):
        got = []
        for kappa in TABLE1_KAPPAS:
            params = FoldedNormalParams(0.5, 1.0, MU_5_POS, kappa * SIGMA_5)
            got.append(
                outside_probability(params, draws=2_000_000, seed=14).total
            )
        print("\n[criterion 4c] measured:", [round(v, 4) for v in got])
        print("[criterion 4c] published:", list(TABLE1_POS))
        diffs = np.abs(np.array(got) - np.array(TABLE1_POS))
        assert np.all(diffs <= 0.005), (
            f"published positive-alpha row not reproduced; |diff|={diffs.round(4)}"
        )


def test_c04d_outside_probability_table3_spots():
    spots = [(0.5, 1.0, 0.149), (1.0, 10.0, 0.937), (0.2, 0.5, 0.000)]
    with Budget(60.0, "criterion 4d"):
        for a, kappa, expected in spots:
            params = FoldedNormalParams(a, 1.0, MU_5_NEG, kappa * SIGMA_5)
            got = outside_probability(params, draws=2_000_000, seed=15).total
            assert abs(got - expected) <= 0.005, (
                f"alpha={a}, kappa={kappa}: {got:.4f} vs {expected}"
            )


def test_c05_contour_modality():
    with Budget(30.0, "criterion 5"):
        unimodal = contour_grid(
            FoldedNormalParams(1.0, 0.85, MU_3, SIGMA_3), resolution=200
        )
        assert unimodal.mode_count() == 1
        multimodal = contour_grid(
            FoldedNormalParams(1.0, 0.45, MU_3, 5.0 * SIGMA_3), resolution=200
        )
        assert multimodal.mode_count() >= 2


def test_c06_em_recovery_study():
    kappas = (0.5, 1.0, 5.0)
    sizes = (100, 500, 2000)
    reps = 50
    with Budget(600.0, "criterion 6"):
        for kappa in kappas:
            sigma = kappa * SIGMA_5
            true_params = FoldedNormalParams(0.5, 1.0, MU_5_POS, sigma)
            p_true = 1.0 - outside_probability(
                true_params, draws=1_000_000, seed=int(kappa * 100)
            ).total
            mean_err = {}
            for n in sizes:
                seeds = np.random.SeedSequence([60, int(kappa * 10), n]).spawn(reps)
                errs = np.empty((reps, 3))
                for r in range(reps):
                    x = sample(true_params, n, seed=seeds[r])
                    fit = em_fit(x, 0.5, validate=False)
                    assert np.all(np.diff(fit.trace) >= -1e-9), "EM trace dipped"
                    errs[r] = (
                        euclidean_distance(fit.params.mu, MU_5_POS),
                        covariance_distance(fit.params.sigma, sigma),
                        abs(fit.params.p - p_true),
                    )
                mean_err[n] = errs.mean(axis=0)
            for metric, name in enumerate(("mu", "sigma", "p")):
                seq = [mean_err[n][metric] for n in sizes]
                assert seq[0] > seq[1] > seq[2], (
                    f"kappa={kappa}: {name} errors not decreasing: {seq}"
                )


def test_c07_alpha_recovery():
    reps = 30
    with Budget(600.0, "criterion 7"):
        for a in (0.1, 0.5, 0.9):
            true_params = FoldedNormalParams(a, 1.0, MU_5_NEG, SIGMA_5)
            seeds = np.random.SeedSequence([70, int(a * 10)]).spawn(reps)
            errs = np.empty(reps)
            for r in range(reps):
                x = sample(true_params, 5000, seed=seeds[r])
                errs[r] = abs(fit_alpha(x, validate=False).best_alpha - a)
            assert errs.mean() < 0.05, f"alpha={a}: mean abs error {errs.mean():.4f}"


def test_c08_arctic_lake():
    parts, _, _ = load_arctic_lake()
    with Budget(120.0, "criterion 8"):
        assert abs(fit_alpha(parts).best_alpha - 0.362) <= 0.01
        keep = np.ones(len(parts), dtype=bool)
        keep[list(ARCTIC_LAKE_INFLUENTIAL_ROWS)] = False
        assert abs(fit_alpha(parts[keep]).best_alpha - 0.443) <= 0.01
        res = bootstrap_test_alpha(parts, B=299, seed=88)
        assert res.p_value <= 0.05, f"test failed to reject: p={res.p_value}"


SHARP_ENV = "FOLDED_SIMPLEX_SHARP_DATA"


@pytest.mark.skipif(
    SHARP_ENV not in os.environ,
    reason="conditional: requires the Sharp dataset via FOLDED_SIMPLEX_SHARP_DATA",
)
def test_c09_sharp_dataset_conditional():
    from folded_simplex.cli import DatasetFile

    x, _ = DatasetFile(path=os.environ[SHARP_ENV], normalize=True).load()
    with Budget(300.0, "criterion 9"):
        search = fit_alpha(x)
        assert abs(search.best_alpha - 0.419) <= 0.01
        assert abs(profile_loglik(x, 0.419) - 82.780) <= 0.05
        assert abs(profile_loglik(x, 0.0) - 57.316) <= 0.05
        np.testing.assert_allclose(
            frechet_mean(em_fit(x, 0.419)), [0.622, 0.272, 0.106], atol=0.005
        )
        np.testing.assert_allclose(
            frechet_mean(logistic_normal_fit(x)), [0.707, 0.241, 0.051], atol=0.005
        )
        np.testing.assert_allclose(
            x.mean(axis=0), [0.540, 0.275, 0.185], atol=0.005
        )


def test_c10_inference_sanity():
    coarse = np.round(np.arange(-1.0, 1.01, 0.1), 10)
    with Budget(900.0, "criterion 10"):
        # size under the null: logistic-normal data must not be rejected
        # much more often than the nominal level
        null_params = FoldedNormalParams(
            0.0, 1.0, np.array([0.3, -0.2]), np.array([[0.4, 0.1], [0.1, 0.3]])
        )
        reps = 100
        seeds = np.random.SeedSequence(1001).spawn(reps)
        rejections = 0
        for r in range(reps):
            x = sample(null_params, 200, seed=seeds[r])
            res = bootstrap_test_alpha(
                x, B=99, seed=2000 + r, grid=coarse, refine_tol=1e-3
            )
            rejections += res.p_value <= 0.05
        size = rejections / reps
        assert 0.01 <= size <= 0.12, f"empirical size {size:.3f}"

        # coverage of the percentile interval at a folded setting
        true_params = FoldedNormalParams(0.5, 1.0, MU_3, SIGMA_3)
        reps = 50
        seeds = np.random.SeedSequence(1002).spawn(reps)
        covered = 0
        for r in range(reps):
            x = sample(true_params, 600, seed=seeds[r])
            lo, hi = bootstrap_ci_alpha(
                x, B=199, level=0.95, seed=3000 + r, grid=coarse, refine_tol=1e-3
            )
            covered += lo <= 0.5 <= hi
        coverage = covered / reps
        assert coverage >= 0.90, f"coverage {coverage:.2f}"
        print(f"[criterion 10] size={size:.3f} coverage={coverage:.2f}")
