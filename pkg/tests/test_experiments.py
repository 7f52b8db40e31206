import math

import numpy as np
import pytest

from cptpricing.behavior import RiskAttitude
from cptpricing.checks import CHECKS, PASS, SKIPPED, run_property_check
from cptpricing.errors import NoBandError, ScenarioError
from cptpricing.experiments import (
    QUADRANTS,
    anchored_grid,
    fourfold_feasible,
    fourfold_grid,
    parity_tariff,
    run_fourfold,
    run_mixed,
    run_mixed_variants,
    run_price,
    run_self_reference,
)


@pytest.fixture(scope="module")
def fourfold(calibration):
    return run_fourfold(calibration, steps=60)


@pytest.fixture(scope="module")
def self_ref(calibration):
    return run_self_reference(calibration, steps=120)


class TestFourfold:
    def test_weighting_only_matches_prediction(self, fourfold):
        assert fourfold.passed
        for q in QUADRANTS:
            assert fourfold.summary[f"{q}_weighting_only"]["sign_matches_prediction"], q

    def test_full_variant_has_sign_change(self, fourfold):
        assert fourfold.summary["full_variant_quadrants_with_sign_change"]

    def test_rows_are_feasible(self, calibration, fourfold):
        for r in fourfold.reports:
            q = QUADRANTS[r.metadata["quadrant"]]
            assert np.all(fourfold_feasible(calibration, q, r.column("gamma")))
            assert len(r.rows) == 60

    def test_row_consistency(self, fourfold):
        for r in fourfold.reports:
            ra = r.column("RA")
            dp = r.column("p_objective") - r.column("p_subjective")
            strong = np.abs(ra) > 1e-9
            assert np.all(np.sign(ra[strong]) == np.sign(dp[strong]))

    def test_quadrant_probabilities(self, fourfold):
        for r in fourfold.reports:
            rate = r.metadata["poisson_rate"]
            p_best = 1 / (rate + 1)
            expected = {"a": 0.95, "b": 0.05, "c": 0.05, "d": 0.95}[r.metadata["quadrant"]]
            assert p_best == pytest.approx(expected, abs=1e-12)

    def test_no_distortion_is_neutral(self, calibration):
        res = run_fourfold(calibration.with_changes(**{"cpt.alpha": 1.0}), steps=20)
        for r in res.reports:
            if r.metadata["variant"] == "weighting_only":
                np.testing.assert_allclose(r.column("RA"), 0.0, atol=1e-12)

    def test_grid_edges(self, calibration):
        a = calibration.alternative().objective_utility
        b = calibration.smods_coefficients.b
        gain = fourfold_grid(calibration, QUADRANTS["a"], 10)
        assert gain[0] > (a - calibration.support.lower) / b
        assert gain[-1] == calibration.grid.max
        loss = fourfold_grid(calibration, QUADRANTS["b"], 10)
        assert loss[0] == calibration.grid.min
        assert loss[-1] < (a - calibration.support.upper) / b


class TestMixed:
    def test_variants(self, calibration):
        res = run_mixed_variants(calibration, steps=200)
        assert res.passed
        main, linear = res.summary["scenario_params"], res.summary["beta_plus_1"]
        assert 10.0 <= main["gamma_lower"] <= 12.0
        assert 19.0 <= main["gamma_upper"] <= 21.0
        assert main["rows_in_band"] > 0 and not main["band_violations"]
        assert linear["upper_unbounded"] and linear["gamma_upper"] is None
        assert linear["gamma_lower"] == main["gamma_lower"]
        assert {r.name for r in res.reports} == {"mixed_scenario_params", "mixed_beta_plus_1"}

    def test_lambda_star_below_scenario_lambda(self, calibration):
        res = run_mixed(calibration, steps=50)
        assert res.summary["lambda_star"] < calibration.params.lam

    def test_no_band(self, calibration):
        with pytest.raises(NoBandError):
            run_mixed(calibration.with_changes(**{"cpt.lambda": 1.0}), steps=50)


class TestSelfReference:
    def test_parity_gap(self, self_ref):
        for name, s in self_ref.summary.items():
            assert s["gap_at_parity"] is not None, name
            assert s["gap_at_parity"] <= 1e-6, name

    def test_continuous_dominance(self, self_ref):
        for name in ("trunc_normal", "trunc_exp_optimistic", "trunc_exp_pessimistic"):
            assert self_ref.summary[name]["dominance_holds"], name
            assert self_ref.summary[name]["min_difference"] >= -1e-12

    def test_reports(self, self_ref):
        assert len(self_ref.reports) == 8
        for r in self_ref.reports:
            assert len(r.rows) == 120

    def test_rational_references_coincide(self, calibration):
        res = run_self_reference(calibration.with_changes(cpt={"alpha": 1.0, "beta_plus": 1.0, "beta_minus": 1.0, "lambda": 1.0}), steps=30)
        assert res.passed
        for name in res.summary:
            mean = res.report(f"self_ref_{name}_mean_ref")
            alt = res.report(f"self_ref_{name}_alternative_ref")
            np.testing.assert_allclose(mean.column("p_subjective"), mean.column("p_objective"), atol=1e-10)
            np.testing.assert_allclose(alt.column("p_subjective"), mean.column("p_objective"), atol=1e-10)

    def test_anchored_grid(self):
        g = anchored_grid(0.0, 30.0, 500, 12.345)
        assert 12.345 in g and len(g) == 500 and np.all(np.diff(g) > 0)
        assert anchored_grid(0.0, 1.0, 5, 7.0).tolist() == np.linspace(0, 1, 5).tolist()

    def test_parity_tariff(self, calibration):
        offer, alt = calibration.offer(), calibration.alternative()
        g = parity_tariff(offer, alt)
        assert offer.with_tariff(g).mean_utility == pytest.approx(alt.objective_utility, abs=1e-12)


class TestPrice:
    def test_given_target(self, calibration):
        res = run_price(calibration, 0.4)
        s = res.summary
        assert abs(s["acceptance"] - 0.4) < 1e-4
        assert s["tariff_quoted"] == f"{s['tariff']:.2f}"
        assert s["target_source"] == "given"

    def test_policy_target(self, calibration):
        res = run_price(calibration)
        expected = 1 / (1 + math.exp(0.3 * 1.5))
        assert res.summary["target"] == pytest.approx(expected, rel=1e-15)
        assert res.summary["target_source"] == "waiting_time_policy"

    def test_missing_target(self, calibration):
        bare = dict(calibration.raw)
        bare.pop("desired_probability")
        from cptpricing.scenario import Scenario

        with pytest.raises(ScenarioError):
            run_price(Scenario.from_dict(bare))


class TestChecks:
    def test_calibration_all_pass(self, calibration):
        rep = run_property_check(calibration)
        assert rep.passed
        assert rep.counts()["pass"] == len(CHECKS)

    def test_weak_loss_aversion_skips(self, calibration):
        rep = run_property_check(calibration.with_changes(**{"cpt.lambda": 0.5}))
        assert rep.passed
        assert rep.status("loss_aversion.strict_loss") == SKIPPED
        assert rep.status("mixed.band") == SKIPPED
        assert rep.status("acceptance.static_reference_monotone") == PASS
        assert rep.status("acceptance.dynamic_reference") == PASS

    def test_subset(self, calibration):
        rep = run_property_check(calibration, only=["prelec.fixed_point"])
        assert [o.name for o in rep.outcomes] == ["prelec.fixed_point"]
