"""Means, PCA, metrics, contour grids and the recovery study."""

import numpy as np
import pytest

from folded_simplex import (
    DataValidationError,
    FoldedNormalParams,
    NotPositiveDefiniteError,
    StudyConfig,
    UnsupportedDimensionError,
    alpha_transform,
    contour_grid,
    covariance_distance,
    em_fit,
    euclidean_distance,
    fold,
    frechet_mean,
    logistic_normal_fit,
    recovery_study,
    sample,
    simplex_pca,
)

from conftest import MU_3, MU_5_POS, SIGMA_3, SIGMA_5, random_compositions


class TestFrechetMean:
    def test_alpha_one_is_arithmetic_mean(self):
        x = random_compositions(300, 3, seed=1)
        mean_z = alpha_transform(x, 1.0).mean(axis=0)
        back, _ = fold(mean_z, 1.0)
        np.testing.assert_allclose(back, x.mean(axis=0), atol=1e-12)

    def test_alpha_zero_is_normalized_geometric_mean(self):
        x = random_compositions(200, 4, seed=2)
        fit = logistic_normal_fit(x)
        gm = np.exp(np.log(x).mean(axis=0))
        np.testing.assert_allclose(
            frechet_mean(fit), gm / gm.sum(), atol=1e-12
        )

    def test_em_fit_mean_is_composition(self):
        x = sample(FoldedNormalParams(0.5, 1.0, MU_3, SIGMA_3), 400, seed=3)
        fit = em_fit(x, 0.5)
        m = frechet_mean(fit)
        assert np.all(m > 0)
        assert m.sum() == pytest.approx(1.0, abs=1e-12)

    def test_requires_convergence(self):
        x = sample(FoldedNormalParams(0.5, 1.0, MU_3, SIGMA_3), 300, seed=4)
        fit = em_fit(x, 0.5, max_iter=1)
        if not fit.converged:
            with pytest.raises(DataValidationError):
                frechet_mean(fit)


@pytest.fixture(scope="module")
def fit():
    x = sample(FoldedNormalParams(0.5, 1.0, MU_5_POS, SIGMA_5), 1500, seed=5)
    return em_fit(x, 0.5)


class TestSimplexPCA:

    def test_zero_eigenvalue_on_ones_direction(self, fit):
        pca = simplex_pca(fit, n_components=2)
        assert pca.eigenvalues[-1] == pytest.approx(0.0, abs=1e-12)
        v = pca.directions[-1]
        np.testing.assert_allclose(
            np.abs(v), np.full(len(v), 1 / np.sqrt(len(v))), atol=1e-8
        )

    def test_eigenvalues_match_similarity_transform(self, fit):
        pca = simplex_pca(fit, n_components=1)
        direct = np.sort(np.linalg.eigvalsh(fit.params.sigma))[::-1]
        np.testing.assert_allclose(pca.eigenvalues[:-1], direct, rtol=1e-10)
        assert pca.eigenvalues[-1] == pytest.approx(0.0, abs=1e-12)

    def test_curves_live_on_simplex(self, fit):
        pca = simplex_pca(fit, n_components=2, n_points=31)
        assert pca.curves.shape == (2, 31, 5)
        assert np.all(pca.curves > 0)
        np.testing.assert_allclose(pca.curves.sum(axis=-1), 1.0, atol=1e-10)

    def test_alpha_zero_variant(self):
        x = random_compositions(300, 3, seed=6)
        fit = logistic_normal_fit(x)
        pca = simplex_pca(fit, n_components=1)
        assert pca.curves.shape[2] == 3
        np.testing.assert_allclose(pca.curves.sum(axis=-1), 1.0, atol=1e-10)

    def test_component_count_validated(self, fit):
        with pytest.raises(DataValidationError):
            simplex_pca(fit, n_components=5)


class TestCovarianceDistance:
    def test_identity(self):
        a = np.array([[2.0, 0.3], [0.3, 1.5]])
        assert covariance_distance(a, a) == pytest.approx(0.0, abs=1e-12)

    def test_symmetry(self):
        rng = np.random.default_rng(7)
        for _ in range(5):
            m = rng.normal(size=(3, 3))
            a = m @ m.T + 0.5 * np.eye(3)
            m = rng.normal(size=(3, 3))
            b = m @ m.T + 0.5 * np.eye(3)
            assert covariance_distance(a, b) == pytest.approx(
                covariance_distance(b, a), rel=1e-10
            )

    def test_scaled_identity(self):
        for c in (0.2, 3.0):
            got = covariance_distance(c * np.eye(4), np.eye(4))
            assert got == pytest.approx(2.0 * abs(np.log(c)), rel=1e-12)

    def test_triangle_inequality(self):
        rng = np.random.default_rng(8)
        for _ in range(10):
            mats = []
            for _ in range(3):
                m = rng.normal(size=(2, 2))
                mats.append(m @ m.T + 0.3 * np.eye(2))
            a, b, c = mats
            assert covariance_distance(a, c) <= (
                covariance_distance(a, b) + covariance_distance(b, c) + 1e-9
            )

    def test_rejects_non_spd(self):
        with pytest.raises(NotPositiveDefiniteError):
            covariance_distance(np.eye(2), np.array([[1.0, 2.0], [2.0, 1.0]]))


class TestEuclideanDistance:
    def test_basic_values(self):
        assert euclidean_distance([1.0, 2.0], [1.0, 2.0]) == 0.0
        assert euclidean_distance([0.0, 0.0], [3.0, 4.0]) == 5.0

    def test_triangle_inequality(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            a, b, c = rng.normal(size=(3, 4))
            assert euclidean_distance(a, c) <= (
                euclidean_distance(a, b) + euclidean_distance(b, c) + 1e-12
            )

    def test_length_mismatch(self):
        with pytest.raises(DataValidationError):
            euclidean_distance([1.0], [1.0, 2.0])


class TestContourGrid:
    def test_rejects_wrong_dimension(self):
        params = FoldedNormalParams(0.5, 1.0, MU_5_POS, SIGMA_5)
        with pytest.raises(UnsupportedDimensionError):
            contour_grid(params)

    def test_rejects_tiny_resolution(self):
        params = FoldedNormalParams(1.0, 1.0, MU_3, SIGMA_3)
        with pytest.raises(DataValidationError):
            contour_grid(params, resolution=5)

    def test_boundary_marked_undefined(self):
        params = FoldedNormalParams(1.0, 1.0, MU_3, SIGMA_3)
        grid = contour_grid(params, resolution=40)
        on_boundary = grid.points.min(axis=1) < 1e-4
        assert np.all(~np.isfinite(grid.log_density[on_boundary]))
        assert np.all(np.isfinite(grid.log_density[~on_boundary]))

    def test_unimodal_setting(self):
        params = FoldedNormalParams(1.0, 0.85, MU_3, SIGMA_3)
        grid = contour_grid(params, resolution=120)
        assert grid.mode_count() == 1

    def test_multimodal_setting(self):
        params = FoldedNormalParams(1.0, 0.45, MU_3, 5.0 * SIGMA_3)
        grid = contour_grid(params, resolution=120)
        assert grid.mode_count() >= 2

    def test_mass_close_to_one(self):
        params = FoldedNormalParams(1.0, 0.85, MU_3, SIGMA_3)
        grid = contour_grid(params, resolution=150)
        assert grid.mass() == pytest.approx(1.0, abs=0.02)


@pytest.fixture(scope="module")
def tiny_cfg():
    return StudyConfig(
        alphas=(0.5,),
        kappas=(1.0,),
        ns=(100, 400),
        replications=3,
        base_mu=MU_5_POS,
        base_sigma=SIGMA_5,
        seed=42,
        true_p_draws=100_000,
        estimate_alpha=False,
    )


class TestRecoveryStudy:

    def test_deterministic(self, tiny_cfg):
        a = recovery_study(tiny_cfg)
        b = recovery_study(tiny_cfg)
        assert a.to_csv() == b.to_csv()

    def test_report_contents(self, tiny_cfg):
        report = recovery_study(tiny_cfg)
        assert len(report.rows) == 2
        for row in report.rows:
            assert row["failures"] == 0
            for key in ("mean_error_mu", "mean_error_sigma", "mean_error_p"):
                assert np.isfinite(row[key]) and row[key] >= 0

    def test_serialization_round_trip(self, tiny_cfg):
        import csv as csv_mod
        import io
        import json

        report = recovery_study(tiny_cfg)
        parsed = json.loads(report.to_json())
        assert parsed["columns"] == list(report.columns)
        rows = list(csv_mod.DictReader(io.StringIO(report.to_csv())))
        assert len(rows) == len(report.rows)
        assert float(rows[0]["mean_error_mu"]) == pytest.approx(
            report.rows[0]["mean_error_mu"], rel=1e-9
        )

    def test_config_validation(self):
        with pytest.raises(DataValidationError):
            StudyConfig(
                alphas=(0.0,),
                kappas=(1.0,),
                ns=(100,),
                replications=1,
                base_mu=MU_5_POS,
                base_sigma=SIGMA_5,
            )
        with pytest.raises(DataValidationError):
            StudyConfig(
                alphas=(0.5,),
                kappas=(-1.0,),
                ns=(100,),
                replications=1,
                base_mu=MU_5_POS,
                base_sigma=SIGMA_5,
            )
