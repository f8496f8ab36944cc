"""Tests for the Monte Carlo oracle.

Covers the determinism contract (same plan, any worker count, identical
output), agreement with the closed forms on the design operating points,
exact per-draw indicator identities under common random numbers, and the
degenerate limits with known outcomes.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from nomacache.content import FileLibrary
from nomacache.montecarlo import (
    TrialPlan,
    simulate_d2d,
    simulate_delivery,
    simulate_pad,
    simulate_push,
)
from nomacache.noma import PowerAllocation, dbm_to_linear_snr
from nomacache.pad import (
    D2DScenario,
    PadScenario,
    d2d_miss_probability,
    pad_cs_outage,
    pad_hit_probability,
    pad_user_outage,
)
from nomacache.point_fields import GeometryConfig
from nomacache.ptd import (
    DeliveryScenario,
    PushScenario,
    delivery_outage_far,
    delivery_outage_near,
    delivery_outage_oma,
    outage_f1_at_cs,
    outage_fi_at_cs_m,
    outage_fi_at_target,
    push_hit_probability,
)

TRIALS = 20000


def push_scenario(power_dbm=40.0, m=1, t=5, gamma=0.5):
    lib = FileLibrary.with_equal_rates(10, gamma, 1.0)
    g = GeometryConfig(lambda_c=0.01 / (math.pi * 50.0**2), Rc=50.0, alpha=3.0)
    return PushScenario(lib, m, t, 3, (0.75, 0.25), dbm_to_linear_snr(power_dbm, -100.0), g)


def delivery_scenario(power_dbm=20.0, lambda_c=None, sim_radius=None):
    g = GeometryConfig(
        lambda_c=lambda_c if lambda_c is not None else 0.01 / (math.pi * 100.0**2),
        Rc=100.0,
        Rs=13.0,
        alpha=3.0,
        sim_radius=sim_radius,
    )
    return DeliveryScenario(
        PowerAllocation((0.75, 0.25)), 1.0, 6.0, dbm_to_linear_snr(power_dbm, -59.0), g
    )


def pad_scenario(power_dbm=40.0, m=5, coeffs=(0.4, 0.3, 0.2, 0.1), rates=(0.125, 0.75, 0.875, 2.75)):
    lib = FileLibrary.with_equal_rates(10, 1.5, 1.0)
    g = GeometryConfig(lambda_c=0.01 / (math.pi * 50.0**2), Rc=50.0, alpha=3.0, delta=1.1)
    return PadScenario(
        lib, PowerAllocation(coeffs), rates, m, dbm_to_linear_snr(power_dbm, -71.6), g
    )


def d2d_scenario(power_dbm=40.0, radius=150.0, lambda_u=5e-5):
    return D2DScenario(
        PowerAllocation((0.75, 0.25)),
        (0.5, 4.0),
        dbm_to_linear_snr(power_dbm, -71.5),
        3.0,
        lambda_u,
        math.hypot(500.0, 500.0),
        radius,
    )


def assert_agrees(closed_form: float, est, slack: float = 0.005) -> None:
    assert abs(closed_form - est.value) <= 3.0 * est.ci_halfwidth + slack


class TestTrialPlan:
    def test_validation(self):
        scn = push_scenario()
        with pytest.raises(ValueError, match="trials"):
            TrialPlan(0, 1, scn)
        with pytest.raises(ValueError, match="root_seed"):
            TrialPlan(10, -1, scn)
        with pytest.raises(ValueError, match="root_seed"):
            TrialPlan(10, 2**64, scn)
        with pytest.raises(TypeError, match="scenario"):
            TrialPlan(10, 1, object())

    def test_targets_deduplicated(self):
        plan = TrialPlan(10, 1, push_scenario(), targets=("hit_noma", "hit_noma", "hit_oma"))
        assert plan.targets == ("hit_noma", "hit_oma")

    def test_unknown_target_rejected(self):
        plan = TrialPlan(64, 1, push_scenario(), targets=("nonsense",))
        with pytest.raises(ValueError, match="unknown targets"):
            simulate_push(plan)

    def test_target_subset_selected(self):
        plan = TrialPlan(256, 1, push_scenario(), targets=("hit_oma", "hit_noma"))
        out = simulate_push(plan)
        assert list(out) == ["hit_oma", "hit_noma"]

    def test_engine_checks_scenario_kind(self):
        plan = TrialPlan(10, 1, push_scenario())
        with pytest.raises(TypeError, match="DeliveryScenario"):
            simulate_delivery(plan)


class TestDeterminism:
    @pytest.mark.parametrize(
        "engine,scenario",
        [
            (simulate_push, push_scenario()),
            (simulate_delivery, delivery_scenario()),
            (simulate_pad, pad_scenario()),
            (simulate_d2d, d2d_scenario()),
        ],
        ids=["push", "delivery", "pad", "d2d"],
    )
    def test_same_plan_same_output_any_workers(self, engine, scenario):
        plan = TrialPlan(5000, 424242, scenario)
        serial = engine(plan)
        again = engine(plan)
        threaded = engine(plan, workers=4)
        assert serial == again
        assert serial == threaded

    @settings(max_examples=20, deadline=None)
    @given(trials=st.integers(1, 3000), seed=st.integers(0, 2**64 - 1))
    def test_push_determinism_property(self, trials, seed):
        plan = TrialPlan(trials, seed, push_scenario())
        assert simulate_push(plan) == simulate_push(plan)

    def test_seed_changes_output(self):
        scn = pad_scenario()
        a = simulate_pad(TrialPlan(4096, 1, scn))["hit_noma"]
        b = simulate_pad(TrialPlan(4096, 2, scn))["hit_noma"]
        assert a.value != b.value

    def test_split_half_exchangeable(self):
        # chunk seeding makes the half-length run the exact first half
        scn = push_scenario()
        full = simulate_push(TrialPlan(16384, 99, scn))["hit_noma"]
        half = simulate_push(TrialPlan(8192, 99, scn))["hit_noma"]
        other = 2.0 * full.value - half.value
        pooled = math.sqrt(4.0 * full.value * (1.0 - full.value) / 16384)
        assert abs(half.value - other) <= 3.0 * pooled

    def test_event_log_collects_ordered_chunks(self):
        log = []
        simulate_push(TrialPlan(10000, 5, push_scenario()), event_log=log)
        assert [entry["chunk"] for entry in log] == [0, 1, 2]
        assert sum(len(entry["request"]) for entry in log) == 10000


class TestSimulatePush:
    def test_matches_closed_forms(self):
        scn = push_scenario(0.0)
        est = simulate_push(TrialPlan(TRIALS, 7, scn))
        assert_agrees(outage_f1_at_cs(scn.m, scn).value, est["outage_f1_cs_m"])
        assert_agrees(outage_f1_at_cs(scn.t, scn).value, est["outage_f1_cs_t"])
        for i in (2, 3):
            assert_agrees(outage_fi_at_target(i, scn).value, est[f"outage_f{i}_cs_t"])
            assert_agrees(outage_fi_at_cs_m(scn.m, i, scn).value, est[f"outage_f{i}_cs_m"])
        assert_agrees(push_hit_probability(scn.m, scn).value, est["hit_noma"])
        assert_agrees(push_hit_probability(scn.m, scn, "oma").value, est["hit_oma"])

    def test_fig5b_operating_point(self):
        est = simulate_push(TrialPlan(TRIALS, 7, push_scenario(40.0)))
        assert est["hit_noma"].value == pytest.approx(0.45, abs=0.02)

    def test_baseline_indicator_identical_per_draw(self):
        # the guaranteed share is sized so its decode event coincides with
        # full-power decoding; the counts must match exactly, not within CI
        for power in (-12.0, 0.0, 40.0):
            est = simulate_push(TrialPlan(TRIALS, 3, push_scenario(power)))
            assert est["outage_f1_cs_m"].value == est["outage_f1_cs_m_oma"].value
            assert est["f1_predicate_disagreement"].value == 0.0

    def test_hit_dominance_per_draw(self):
        for power in (-12.0, 0.0, 40.0):
            est = simulate_push(TrialPlan(TRIALS, 3, push_scenario(power)))
            assert est["hit_dominance_violation"].value == 0.0
            assert est["hit_noma"].value >= est["hit_oma"].value

    def test_single_file_push(self):
        lib = FileLibrary.with_equal_rates(10, 0.5, 1.0)
        g = GeometryConfig(lambda_c=0.01 / (math.pi * 50.0**2), Rc=50.0, alpha=3.0)
        scn = PushScenario(lib, 1, 5, 1, (), dbm_to_linear_snr(0.0, -100.0), g)
        est = simulate_push(TrialPlan(TRIALS, 21, scn))
        assert "outage_f2_cs_m" not in est
        assert_agrees(push_hit_probability(1, scn).value, est["hit_noma"])


class TestSimulateDelivery:
    def test_matches_closed_forms(self):
        scn = delivery_scenario(20.0)
        est = simulate_delivery(TrialPlan(TRIALS, 11, scn))
        assert_agrees(delivery_outage_near(scn).value, est["outage_near_noma"])
        assert_agrees(delivery_outage_far(scn).value, est["outage_far_noma"])
        assert_agrees(delivery_outage_oma(scn, "near").value, est["outage_near_oma"])
        assert_agrees(delivery_outage_oma(scn, "far").value, est["outage_far_oma"])

    def test_fig7a_operating_point(self):
        est = simulate_delivery(TrialPlan(TRIALS, 11, delivery_scenario(20.0)))
        assert est["outage_near_noma"].value == pytest.approx(1.1e-2, abs=5e-3)
        assert est["outage_near_oma"].value == pytest.approx(0.5, abs=0.03)

    def test_no_interference_limit(self):
        # nearly empty interferer field: outage approaches the exact
        # disc-averaged law, integrated directly rather than via the
        # package quadrature
        scn = delivery_scenario(20.0, lambda_c=1e-12)
        est = simulate_delivery(TrialPlan(TRIALS, 19, scn))
        margin = scn.near_margin

        def cdf(v, radius):
            val, err = integrate.quad(
                lambda r: (2.0 * r / radius**2) * (1.0 - math.exp(-(r**3.0) * v)), 0.0, radius
            )
            assert err < 1e-10
            return val

        near_cf = cdf(1.0 / (margin * scn.rho), scn.geometry.Rs)
        assert_agrees(near_cf, est["outage_near_noma"], slack=0.0)

    def test_interferer_activity_zero_matches_limit(self):
        scn = delivery_scenario(20.0)
        est = simulate_delivery(TrialPlan(TRIALS, 23, scn), interferer_activity=0.0)
        quiet = delivery_scenario(20.0, lambda_c=1e-12)
        assert_agrees(delivery_outage_near(quiet).value, est["outage_near_noma"])
        with pytest.raises(ValueError, match="interferer_activity"):
            simulate_delivery(TrialPlan(10, 1, scn), interferer_activity=1.5)

    def test_window_metadata_flags(self):
        scn = delivery_scenario(20.0)
        est = simulate_delivery(TrialPlan(512, 1, scn))
        assert any(f.startswith("window_radius=") for f in est["outage_near_noma"].flags)
        assert any(f.startswith("window_tail_fraction=") for f in est["outage_far_oma"].flags)

    def test_undersized_window_aborts(self):
        with pytest.warns(RuntimeWarning, match="interference tail"):
            g = GeometryConfig(
                lambda_c=0.01 / (math.pi * 95.0**2), Rc=95.0, Rs=13.0, alpha=3.0, sim_radius=100.0
            )
        scn = DeliveryScenario(
            PowerAllocation((0.75, 0.25)), 1.0, 6.0, dbm_to_linear_snr(20.0, -59.0), g
        )
        with pytest.raises(ValueError, match="interference tail"):
            simulate_delivery(TrialPlan(10, 1, scn))

    def test_ci_sqrt_scaling(self):
        scn = delivery_scenario(20.0)
        small = simulate_delivery(TrialPlan(2000, 31, scn))["outage_near_oma"]
        large = simulate_delivery(TrialPlan(8000, 31, scn))["outage_near_oma"]
        assert large.ci_halfwidth == pytest.approx(0.5 * small.ci_halfwidth, rel=0.1)


class TestSimulatePad:
    def test_matches_closed_forms(self):
        scn = pad_scenario(40.0)
        est = simulate_pad(TrialPlan(TRIALS, 13, scn))
        for i in (1, 2, 3):
            assert_agrees(pad_cs_outage(i, scn).value, est[f"outage_f{i}_cs_noma"])
            assert_agrees(pad_cs_outage(i, scn, "oma").value, est[f"outage_f{i}_cs_oma"])
        assert_agrees(pad_user_outage(scn).value, est["outage_user_noma"])
        assert_agrees(pad_user_outage(scn, "oma").value, est["outage_user_oma"])
        assert_agrees(pad_hit_probability(scn).value, est["hit_noma"])
        assert_agrees(pad_hit_probability(scn, "oma").value, est["hit_oma_time_sliced"])

    def test_sic_chain_monotone_per_draw(self):
        for power in (20.0, 30.0, 40.0):
            est = simulate_pad(TrialPlan(TRIALS, 13, pad_scenario(power)))
            assert est["server_sic_monotonicity_violation"].value == 0.0

    def test_naive_benchmark_never_hits(self):
        est = simulate_pad(TrialPlan(1024, 1, pad_scenario()))
        assert est["hit_oma_naive"].value == 0.0
        assert est["hit_oma_naive"].flags == ("naive baseline never pushes",)

    def test_delivery_only_matches_direct_transmission(self):
        # nothing pushed: the user gets the whole block, and the empirical
        # outage must match the direct-transmission quadrature
        scn = pad_scenario(25.0, coeffs=(1.0,), rates=(0.875,))
        est = simulate_pad(TrialPlan(TRIALS, 29, scn))
        assert_agrees(pad_user_outage(scn).value, est["outage_user_noma"])
        assert est["hit_noma"].value == 0.0
        assert est["outage_user_noma"].value == est["outage_user_oma"].value

    def test_starved_slot_always_out(self):
        scn = pad_scenario(40.0, rates=(0.125, 2.0, 0.875, 2.75))
        est = simulate_pad(TrialPlan(2048, 3, scn), workers=2)
        assert est["outage_f1_cs_noma"].value == 1.0
        assert est["outage_f2_cs_noma"].value == 1.0


class TestSimulateD2D:
    def test_matches_closed_forms(self):
        scn = d2d_scenario(40.0)
        est = simulate_d2d(TrialPlan(TRIALS, 17, scn))
        assert_agrees(d2d_miss_probability(1, scn).value, est["miss_f1_noma"])
        assert_agrees(d2d_miss_probability(1, scn, "oma").value, est["miss_f1_oma"])

    def test_fig10a_operating_point(self):
        est = simulate_d2d(TrialPlan(TRIALS, 17, d2d_scenario(40.0)))
        assert est["miss_f1_noma"].value == pytest.approx(6e-2, abs=2e-2)
        assert est["miss_f1_oma"].value == pytest.approx(1.6e-1, abs=3e-2)

    def test_hit_complements_miss_exactly(self):
        est = simulate_d2d(TrialPlan(4096, 41, d2d_scenario(30.0)))
        assert est["hit_f1_noma"].value + est["miss_f1_noma"].value == 1.0
        assert est["hit_f1_oma"].value + est["miss_f1_oma"].value == 1.0

    def test_vanishing_search_disc_always_misses(self):
        est = simulate_d2d(TrialPlan(4096, 43, d2d_scenario(40.0, radius=1e-6)))
        assert est["miss_f1_noma"].value == 1.0

    def test_window_must_cover_search_disc(self):
        scn = d2d_scenario(40.0)
        needed = scn.bs_distance + scn.radius
        with pytest.raises(ValueError, match="cover the search disc"):
            simulate_d2d(TrialPlan(10, 1, scn), window_radius=needed - 1.0)
        out = simulate_d2d(TrialPlan(2048, 5, scn), window_radius=needed + 50.0)
        assert set(out) == {"hit_f1_noma", "miss_f1_noma", "hit_f1_oma", "miss_f1_oma"}

    def test_thinned_field_matches_decode_law(self):
        # users decoding file 1 form a thinned field: within a thin distance
        # band the empirical decode rate must match exp(-(taubar s)^alpha)
        scn = d2d_scenario(40.0)
        log = []
        simulate_d2d(TrialPlan(8192, 47, scn), event_log=log)
        tau = scn.decode_scale(1)
        s = np.concatenate([entry["user_bs_distance"] for entry in log])
        dec = np.concatenate([entry["decoded_f1_noma"] for entry in log])
        lo, hi = scn.bs_distance - 50.0, scn.bs_distance + 50.0
        band = (s >= lo) & (s <= hi)
        total = int(band.sum())
        rate = float(dec[band].sum()) / total
        predicted = np.exp(-((tau * s[band]) ** scn.alpha)).mean()
        assert abs(rate - predicted) <= 3.0 * math.sqrt(predicted * (1.0 - predicted) / total)
