import math

import numpy as np
import pytest
from scipy import integrate, stats

from graphlap.manifold import (
    ManifoldSpec,
    PointCloud,
    UnsupportedManifoldError,
    density,
    eval_truth,
    geodesic_dist,
    intrinsic_coords,
    on_manifold_residual,
    parse_family,
    sample_cloud,
)


class TestManifoldSpec:
    def test_intrinsic_dim_inferred(self):
        assert ManifoldSpec("sphere2", 3).intrinsic_dim == 2
        assert ManifoldSpec("interval", 1).intrinsic_dim == 1

    def test_wrong_intrinsic_dim(self):
        with pytest.raises(UnsupportedManifoldError):
            ManifoldSpec("circle", 2, intrinsic_dim=2)

    @pytest.mark.parametrize("kind,D", [("circle", 1), ("sphere2", 2), ("flat-torus-embedded", 3),
                                        ("swiss-roll", 2)])
    def test_ambient_too_small(self, kind, D):
        with pytest.raises(UnsupportedManifoldError):
            ManifoldSpec(kind, D)

    def test_unknown_kind(self):
        with pytest.raises(UnsupportedManifoldError):
            ManifoldSpec("klein-bottle", 4)

    def test_tilt_must_be_bounded(self):
        with pytest.raises(ValueError):
            ManifoldSpec("circle", 2, density="smooth-tilted", tilt=(1.0,))

    def test_dict_roundtrip(self):
        spec = ManifoldSpec("circle", 4, density="smooth-tilted", tilt=(0.5,), seed=3)
        assert ManifoldSpec.from_dict(spec.to_dict()) == spec


class TestSampleCloud:
    def test_circle_unit_norm(self):
        cloud = sample_cloud(ManifoldSpec("circle", 2, seed=1), 4)
        np.testing.assert_allclose(np.linalg.norm(cloud.points, axis=1), 1.0, atol=1e-12)

    def test_rotated_circle_stays_on_manifold(self):
        spec = ManifoldSpec("circle", 6, seed=2, rotation_seed=5)
        cloud = sample_cloud(spec, 50)
        np.testing.assert_allclose(np.linalg.norm(cloud.points, axis=1), 1.0, atol=1e-12)
        assert on_manifold_residual(spec, cloud.points).max() < 1e-12

    def test_interval_uniform_ks(self):
        cloud = sample_cloud(ManifoldSpec("interval", 1, seed=3), 1000)
        assert stats.kstest(cloud.points[:, 0], "uniform").statistic < 0.05

    def test_sphere_mean_near_zero(self):
        cloud = sample_cloud(ManifoldSpec("sphere2", 3, seed=4), 1000)
        assert np.linalg.norm(cloud.points.mean(axis=0)) < 0.1

    def test_tilted_circle_matches_density(self):
        a = 0.6
        spec = ManifoldSpec("circle", 2, density="smooth-tilted", tilt=(a,), seed=5)
        theta = intrinsic_coords(spec, sample_cloud(spec, 4000).points)[:, 0]

        def cdf(t):
            return (t + np.pi + a * np.sin(t)) / (2 * np.pi)

        assert stats.kstest(theta, cdf).pvalue > 0.01

    def test_tilted_density_normalised(self):
        a = -0.4
        spec = ManifoldSpec("circle", 2, density="smooth-tilted", tilt=(a,))
        th = np.linspace(-np.pi, np.pi, 20001)
        p = density(spec, np.column_stack([np.cos(th), np.sin(th)]))
        assert abs(integrate.trapezoid(p, th) - 1) < 1e-6

    @pytest.mark.parametrize("kind,D", [("flat-torus-embedded", 4), ("swiss-roll", 3),
                                        ("sphere2", 5), ("interval", 3)])
    def test_points_on_manifold(self, kind, D):
        spec = ManifoldSpec(kind, D, seed=6)
        cloud = sample_cloud(spec, 200)
        assert cloud.points.shape == (200, D)
        assert on_manifold_residual(spec, cloud.points).max() < 1e-10

    def test_seeded_determinism(self):
        spec = ManifoldSpec("sphere2", 5, seed=11)
        a = sample_cloud(spec, 100, "trig-1")
        b = sample_cloud(spec, 100, "trig-1")
        assert np.array_equal(a.points, b.points)
        assert np.array_equal(a.true_values, b.true_values)

    def test_different_seeds_differ(self):
        a = sample_cloud(ManifoldSpec("circle", 2, seed=1), 10)
        b = sample_cloud(ManifoldSpec("circle", 2, seed=2), 10)
        assert not np.allclose(a.points, b.points)

    def test_n_must_be_positive(self):
        with pytest.raises(ValueError):
            sample_cloud(ManifoldSpec("circle", 2), 0)

    def test_truth_metadata(self):
        cloud = sample_cloud(ManifoldSpec("circle", 2), 10, "holder-kink(0.5)")
        assert cloud.holder_beta == 0.5
        assert math.isinf(sample_cloud(ManifoldSpec("circle", 2), 10, "trig-3").holder_beta)

    def test_pointcloud_rejects_mismatched_truth(self):
        with pytest.raises(ValueError):
            PointCloud(np.zeros((3, 2)), ManifoldSpec("circle", 2), np.zeros(2))


class TestEvalTruth:
    spec = ManifoldSpec("circle", 2)

    def test_trig0_constant(self):
        pts = sample_cloud(ManifoldSpec("sphere2", 3, seed=1), 20).points
        np.testing.assert_array_equal(eval_truth(ManifoldSpec("sphere2", 3), pts, "trig-0"), 1.0)

    def test_trig1_at_base_point(self):
        assert eval_truth(self.spec, np.array([[1.0, 0.0]]), "trig-1")[0] == pytest.approx(1.0)

    def test_kink_closed_form(self):
        val = eval_truth(self.spec, np.array([[0.0, 1.0]]), "holder-kink(0.5)")[0]
        assert val == pytest.approx(math.sqrt(math.pi / 2), rel=1e-14)

    def test_kink_local_exponent(self):
        beta = 0.75
        th = np.array([1e-4, 1e-3, 1e-2])
        vals = eval_truth(self.spec, np.column_stack([np.cos(th), np.sin(th)]),
                          f"holder-kink({beta})")
        np.testing.assert_allclose(vals / th**beta, 1.0, rtol=1e-10)

    def test_kink_vanishes_far_from_base(self):
        th = np.array([0.95 * np.pi, -0.95 * np.pi])
        vals = eval_truth(self.spec, np.column_stack([np.cos(th), np.sin(th)]),
                          "holder-kink(1.5)")
        np.testing.assert_array_equal(vals, 0.0)

    def test_sphere_trig_is_chebyshev_of_height(self):
        pts = sample_cloud(ManifoldSpec("sphere2", 3, seed=3), 50).points
        z = pts[:, 2]
        np.testing.assert_allclose(eval_truth(ManifoldSpec("sphere2", 3), pts, "trig-3"),
                                   4 * z**3 - 3 * z, atol=1e-12)

    @pytest.mark.parametrize("fam", ["holder-kink(0)", "holder-kink(2.5)", "trig-x", "poly-3"])
    def test_invalid_families(self, fam):
        with pytest.raises(ValueError):
            parse_family(fam)

    def test_callable_family(self):
        pts = np.array([[1.0, 0.0], [0.0, 1.0]])
        np.testing.assert_array_equal(eval_truth(self.spec, pts, lambda p: p[:, 1]), [0.0, 1.0])


class TestGeodesic:
    def test_circle_antipodal(self):
        spec = ManifoldSpec("circle", 2)
        assert geodesic_dist(spec, [1, 0], [-1, 0]) == pytest.approx(math.pi)

    def test_identity(self):
        spec = ManifoldSpec("sphere2", 3)
        assert geodesic_dist(spec, [0, 0.6, 0.8], [0, 0.6, 0.8]) == pytest.approx(0.0, abs=1e-7)

    def test_sphere_quarter(self):
        spec = ManifoldSpec("sphere2", 3)
        assert geodesic_dist(spec, [1, 0, 0], [0, 1, 0]) == pytest.approx(math.pi / 2)

    def test_interval(self):
        assert geodesic_dist(ManifoldSpec("interval", 1), [0.2], [0.7]) == pytest.approx(0.5)

    def test_no_closed_form(self):
        with pytest.raises(UnsupportedManifoldError):
            geodesic_dist(ManifoldSpec("swiss-roll", 3), [0, 0, 0], [1, 1, 1])

    @pytest.mark.parametrize("kind,D", [("circle", 2), ("sphere2", 3), ("sphere2", 5)])
    def test_chord_versus_arc(self, kind, D):
        spec = ManifoldSpec(kind, D, seed=9)
        pts = sample_cloud(spec, 60).points
        for a, b in zip(pts[:30], pts[30:]):
            rho = geodesic_dist(spec, a, b)
            chord = np.linalg.norm(a - b)
            assert 2 / math.pi * rho - 1e-12 <= chord <= rho + 1e-12
