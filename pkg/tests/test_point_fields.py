import math
import warnings

import numpy as np
import pytest
from scipy import integrate as sci_integrate
from scipy import stats as sci_stats

from nomacache.point_fields import (
    DeploymentSample,
    GeometryConfig,
    conditional_pdf_user_bs_distance,
    joint_pdf_rm_rt,
    marginal_cdf_rm,
    marginal_pdf_rm,
    sample_cluster_deployment,
    sample_ordered_distances,
    thinned_density,
)


def lens_area(R1: float, R2: float, dist: float) -> float:
    """Area of intersection of discs with radii R1, R2 and center distance dist."""
    if dist >= R1 + R2:
        return 0.0
    if dist <= abs(R1 - R2):
        return math.pi * min(R1, R2) ** 2
    d1 = (dist * dist + R1 * R1 - R2 * R2) / (2.0 * dist)
    d2 = dist - d1
    return (
        R1 * R1 * math.acos(min(1.0, max(-1.0, d1 / R1)))
        - d1 * math.sqrt(max(0.0, R1 * R1 - d1 * d1))
        + R2 * R2 * math.acos(min(1.0, max(-1.0, d2 / R2)))
        - d2 * math.sqrt(max(0.0, R2 * R2 - d2 * d2))
    )


class TestGeometryConfig:
    def test_defaults_fill_in(self):
        g = GeometryConfig(lambda_c=1e-4, Rc=50.0)
        assert g.Rs == 25.0
        assert g.alpha == 3.0
        assert g.sim_radius >= 5000.0
        assert g.truncation_tail() <= 1e-4

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(lambda_c=0.0, Rc=50.0),
            dict(lambda_c=-1e-4, Rc=50.0),
            dict(lambda_c=1e-4, Rc=0.0),
            dict(lambda_c=1e-4, Rc=50.0, Rs=50.0),
            dict(lambda_c=1e-4, Rc=50.0, Rs=-1.0),
            dict(lambda_c=1e-4, Rc=50.0, alpha=2.0),
            dict(lambda_c=1e-4, Rc=50.0, delta=1.0),
            dict(lambda_c=1e-4, Rc=50.0, lambda_u=-1.0),
        ],
    )
    def test_invalid_parameters_rejected(self, kwargs):
        with pytest.raises(ValueError):
            GeometryConfig(**kwargs)

    def test_small_window_warns_then_errors(self):
        with pytest.warns(RuntimeWarning, match="tail"):
            GeometryConfig(lambda_c=1e-4, Rc=50.0, alpha=3.0, sim_radius=5000.0)
        with pytest.raises(ValueError, match="truncates"):
            GeometryConfig(lambda_c=1e-4, Rc=10.0, alpha=3.0, sim_radius=50.0)

    def test_faster_decay_allows_smaller_window(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            g = GeometryConfig(lambda_c=1e-4, Rc=50.0, alpha=4.0, sim_radius=5000.0)
        assert g.truncation_tail() < 1e-6

    def test_exclusion_radius(self):
        g = GeometryConfig(lambda_c=1e-4, Rc=50.0, delta=1.1)
        assert g.exclusion_radius == pytest.approx(55.0)


class TestSampleOrderedDistances:
    def test_sorted_and_beyond_exclusion(self):
        r = sample_ordered_distances(1e-3, 8, inner_exclusion=30.0, rng=7)
        assert np.all(np.diff(r) >= 0.0)
        assert np.all(r >= 30.0)

    def test_nearest_square_mean(self):
        r = sample_ordered_distances(1e-3, 1, rng=11, trials=100_000)
        got = float(np.mean(r[:, 0] ** 2))
        assert got == pytest.approx(1.0 / (1e-3 * math.pi), rel=0.02)

    def test_batch_shape(self):
        r = sample_ordered_distances(1e-4, 5, rng=3, trials=64)
        assert r.shape == (64, 5)
        assert np.all(np.diff(r, axis=1) >= 0.0)

    def test_same_seed_reproduces(self):
        a = sample_ordered_distances(1e-4, 5, rng=123, trials=10)
        b = sample_ordered_distances(1e-4, 5, rng=123, trials=10)
        np.testing.assert_array_equal(a, b)

    def test_invalid_arguments(self):
        with pytest.raises(ValueError):
            sample_ordered_distances(0.0, 3)
        with pytest.raises(ValueError):
            sample_ordered_distances(1e-4, 0)
        with pytest.raises(ValueError):
            sample_ordered_distances(1e-4, 3, inner_exclusion=-1.0)


class TestMarginalLaw:
    @pytest.mark.parametrize("m", [1, 5])
    @pytest.mark.parametrize("exclusion", [0.0, 55.0])
    def test_ks_against_sampler(self, m, exclusion):
        lam = 1e-4
        samples = sample_ordered_distances(lam, m, inner_exclusion=exclusion, rng=97, trials=100_000)[:, m - 1]
        res = sci_stats.kstest(samples, lambda x: marginal_cdf_rm(x, m, lam, exclusion))
        assert res.statistic <= 0.01

    def test_pdf_zero_inside_exclusion(self):
        assert marginal_pdf_rm(10.0, 1, 1e-4, inner_exclusion=55.0) == 0.0

    def test_pdf_integrates_to_one(self):
        val, _ = sci_integrate.quad(lambda x: marginal_pdf_rm(x, 3, 1e-4, 55.0), 55.0, 1e4, limit=200)
        assert val == pytest.approx(1.0, abs=1e-6)

    def test_cdf_matches_pdf(self):
        lam, m, e = 1e-4, 4, 20.0
        for x in (60.0, 110.0, 170.0):
            num, _ = sci_integrate.quad(lambda u: marginal_pdf_rm(u, m, lam, e), e, x, limit=200)
            assert num == pytest.approx(marginal_cdf_rm(x, m, lam, e), abs=1e-9)


class TestJointLaw:
    def test_m_not_below_t_rejected(self):
        with pytest.raises(ValueError):
            joint_pdf_rm_rt(1.0, 2.0, 3, 3, 1e-4)
        with pytest.raises(ValueError):
            joint_pdf_rm_rt(1.0, 2.0, 4, 2, 1e-4)

    def test_zero_outside_wedge(self):
        assert joint_pdf_rm_rt(5.0, 2.0, 1, 2, 1e-3) == 0.0
        assert joint_pdf_rm_rt(-1.0, 2.0, 1, 2, 1e-3) == 0.0

    def test_adjacent_orders_closed_form(self):
        lam = 1e-3
        lp = lam * math.pi
        for x, y in [(3.0, 9.0), (10.0, 11.0), (1.0, 40.0)]:
            want = 4.0 * lp**2 * x * y * math.exp(-lp * y * y)
            assert joint_pdf_rm_rt(x, y, 1, 2, lam) == pytest.approx(want, rel=1e-12)

    @pytest.mark.parametrize("m,t", [(1, 2), (1, 5), (3, 5)])
    def test_normalizes_to_one(self, m, t):
        lam = 1e-3
        val, _ = sci_integrate.dblquad(
            lambda x, y: joint_pdf_rm_rt(x, y, m, t, lam),
            0.0,
            300.0,
            lambda y: 0.0,
            lambda y: y,
        )
        assert val == pytest.approx(1.0, abs=1e-3)

    def test_marginalizing_inner_gives_outer_law(self):
        lam, m, t = 1e-3, 2, 5
        ys = np.linspace(20.0, 80.0, 10)
        for y in ys:
            got, _ = sci_integrate.quad(lambda x: joint_pdf_rm_rt(x, y, m, t, lam), 0.0, y, limit=200)
            want = marginal_pdf_rm(y, t, lam)
            assert got == pytest.approx(want, abs=1e-4, rel=1e-6)


class TestConditionalUserDistance:
    def test_requires_server_outside_cell(self):
        with pytest.raises(ValueError, match="r_m > Rc"):
            conditional_pdf_user_bs_distance(10.0, 40.0, 50.0)

    def test_zero_outside_support_and_at_edges(self):
        rm, Rc = 120.0, 50.0
        assert conditional_pdf_user_bs_distance(60.0, rm, Rc) == 0.0
        assert conditional_pdf_user_bs_distance(200.0, rm, Rc) == 0.0
        assert conditional_pdf_user_bs_distance(rm - Rc, rm, Rc) == pytest.approx(0.0, abs=1e-9)
        assert conditional_pdf_user_bs_distance(rm + Rc, rm, Rc) == pytest.approx(0.0, abs=1e-9)

    def test_normalizes_to_one(self):
        rm, Rc = 120.0, 50.0
        val, _ = sci_integrate.quad(
            lambda r: conditional_pdf_user_bs_distance(r, rm, Rc), rm - Rc, rm + Rc, limit=200
        )
        assert val == pytest.approx(1.0, abs=1e-3)

    def test_ks_against_uniform_disc_sampler(self):
        rm, Rc = 120.0, 50.0
        rng = np.random.default_rng(5)
        rad = Rc * np.sqrt(rng.uniform(size=100_000))
        ang = rng.uniform(0.0, 2.0 * math.pi, size=100_000)
        dist = np.hypot(rad * np.cos(ang) - rm, rad * np.sin(ang))

        def cdf(r):
            return np.array([lens_area(Rc, ri, rm) / (math.pi * Rc * Rc) for ri in np.atleast_1d(r)])

        res = sci_stats.kstest(dist, cdf)
        assert res.statistic <= 0.01


class TestClusterDeployment:
    def _config(self):
        return GeometryConfig(lambda_c=1e-4, Rc=50.0, Rs=20.0, alpha=4.0, sim_radius=500.0)

    def test_poisson_count_oracle(self):
        cfg = self._config()
        rng = np.random.default_rng(42)
        counts = [len(sample_cluster_deployment(cfg, 2, rng=rng).ordered_server_r) for _ in range(2000)]
        mean = cfg.lambda_c * math.pi * cfg.sim_radius**2
        assert np.mean(counts) == pytest.approx(mean, rel=0.03)
        assert np.var(counts) == pytest.approx(mean, rel=0.10)

    def test_near_far_bands(self):
        cfg = self._config()
        s = sample_cluster_deployment(cfg, 2, near_far_split=True, rng=8)
        r = np.hypot(s.user_offsets[..., 0], s.user_offsets[..., 1])
        assert np.all(r[:, 0] <= cfg.Rs)
        assert np.all((r[:, 1] >= cfg.Rs) & (r[:, 1] <= cfg.Rc))

    def test_uniform_mode_stays_in_cluster_disc(self):
        cfg = self._config()
        s = sample_cluster_deployment(cfg, 3, rng=9)
        r = np.hypot(s.user_offsets[..., 0], s.user_offsets[..., 1])
        assert np.all(r <= cfg.Rc)

    def test_same_seed_identical(self):
        cfg = self._config()
        a = sample_cluster_deployment(cfg, 2, rng=77)
        b = sample_cluster_deployment(cfg, 2, rng=77)
        np.testing.assert_array_equal(a.server_positions, b.server_positions)
        np.testing.assert_array_equal(a.user_offsets, b.user_offsets)
        assert a.fading == b.fading

    def test_fading_links_are_exponential_unit_mean(self):
        cfg = GeometryConfig(lambda_c=4e-4, Rc=50.0, alpha=4.0, sim_radius=500.0)
        rng = np.random.default_rng(4)
        gains = []
        for _ in range(200):
            gains.extend(sample_cluster_deployment(cfg, 2, rng=rng).fading.values())
        res = sci_stats.kstest(np.array(gains), "expon")
        assert res.statistic <= 0.02

    def test_serialization_roundtrip(self):
        cfg = self._config()
        s = sample_cluster_deployment(cfg, 2, rng=13)
        back = DeploymentSample.from_text(s.to_text())
        np.testing.assert_allclose(back.server_positions, s.server_positions, atol=1e-12)
        np.testing.assert_allclose(back.ordered_server_r, s.ordered_server_r, atol=1e-12)
        np.testing.assert_allclose(back.user_offsets, s.user_offsets, atol=1e-9)

    def test_unsorted_distances_rejected(self):
        with pytest.raises(ValueError, match="nondecreasing"):
            DeploymentSample(
                ordered_server_r=np.array([5.0, 3.0]),
                server_positions=np.array([[5.0, 0.0], [3.0, 0.0]]),
                user_offsets=np.zeros((2, 0, 2)),
            )


class TestThinnedDensity:
    def test_scales_intensity(self):
        assert thinned_density(0.5, 0.25, 1e-4) == pytest.approx(2.5e-5)
        np.testing.assert_allclose(
            thinned_density(np.ones(3), np.array([0.0, 0.5, 1.0]), 2e-4),
            [0.0, 1e-4, 2e-4],
        )

    def test_rejects_invalid_retention(self):
        with pytest.raises(ValueError):
            thinned_density(1.0, 1.5, 1e-4)
        with pytest.raises(ValueError):
            thinned_density(1.0, -0.1, 1e-4)
        with pytest.raises(ValueError):
            thinned_density(1.0, 0.5, -1e-4)
