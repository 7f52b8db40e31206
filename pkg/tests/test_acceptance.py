"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``.
"""

import math
import time

import numpy as np
import pytest

from cptpricing.behavior import DynamicReference, StaticReference, evaluate, objective_acceptance, subjective_acceptance
from cptpricing.cpt_core import (
    CptParams,
    OutcomeLottery,
    subjective_utility_continuous,
    subjective_utility_discrete,
    subjective_utility_quadrature,
)
from cptpricing.distributions import SupportInterval, TruncExponential, TruncNormal
from cptpricing.experiments import QUADRANTS, fourfold_feasible, run_fourfold, run_self_reference
from cptpricing.experiments import self_reference_distributions
from cptpricing.pricing import lambda_star, mean_reference, mixed_prospect_band, solve_tariff

from .conftest import random_setup
from .oracles import cpt_utility_weight_space


@pytest.fixture
def verdict(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n[acceptance] criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}")
        assert ok, detail

    return emit


def _strictly_decreasing(values):
    return bool(np.all(np.diff(values) < 0.0))


def test_criterion_1_monotone_acceptance(calibration, verdict):
    start = time.perf_counter()
    offer, alt, params = calibration.offer(), calibration.alternative(), calibration.params
    s = calibration.support
    grid = calibration.grid.points(1000)
    problems = []
    for r in (alt.objective_utility, s.lower, s.upper):
        p = [subjective_acceptance(offer.with_tariff(g), alt, StaticReference(r), params) for g in grid]
        if not _strictly_decreasing(p):
            problems.append(f"static R={r}")
    worst_spread = 0.0
    for ref in (DynamicReference(s.lower), mean_reference(offer), DynamicReference(s.upper)):
        evs = [evaluate(offer.with_tariff(g), alt, ref, params) for g in grid]
        u = np.array([e.u_subjective for e in evs])
        worst_spread = max(worst_spread, float(np.ptp(u)))
        if not _strictly_decreasing([e.p_subjective for e in evs]):
            problems.append(f"dynamic x~={ref.x_tilde}")
    elapsed = time.perf_counter() - start
    ok = not problems and worst_spread <= 1e-9 and elapsed < 5.0
    verdict(1, ok, f"3 static + 3 dynamic refs on 1000 tariffs, U^s spread {worst_spread:.1e}, "
                   f"problems {problems or 'none'}, {elapsed:.2f} s")


def test_criterion_2_lambda_threshold(calibration, verdict):
    start = time.perf_counter()
    params = calibration.params
    details, ok = [], True
    for name, dist in self_reference_distributions(calibration).items():
        offer = calibration.offer(distribution=dist)
        ls = lambda_star(offer, params)
        u_minus, u_plus, u_fixed = (
            subjective_utility_continuous(dist, 0.0, offer.mean_utility, params.with_(lam=lam))
            for lam in (ls - 1e-3, ls + 1e-3, 2.25)
        )
        ok &= u_minus > 0.0 > u_plus and u_fixed < 0.0
        details.append(f"{name} {ls:.4f}")
    elapsed = time.perf_counter() - start
    ok &= elapsed < 5.0
    verdict(2, ok, f"lambda* {', '.join(details)}; straddle and U^s(2.25) < 0 checked, {elapsed:.2f} s")


def test_criterion_3_mixed_band(calibration, verdict):
    offer, alt, params = calibration.offer(), calibration.alternative(), calibration.params
    band = mixed_prospect_band(offer, alt, params)
    ref = mean_reference(offer)
    grid = np.linspace(band.gamma_lower, band.gamma_upper, 1001)[:-1]
    bad = [
        g for g in grid
        if not subjective_acceptance(offer.with_tariff(g), alt, ref, params) < objective_acceptance(offer.with_tariff(g), alt)
    ]
    linear = mixed_prospect_band(offer, alt, params.with_(beta_plus=1.0))
    ok = (
        abs(band.gamma_lower - 11.0) <= 1.0
        and abs(band.gamma_upper - 20.0) <= 1.0
        and not bad
        and linear.upper_unbounded
    )
    verdict(3, ok, f"band [{band.gamma_lower:.3f}, {band.gamma_upper:.3f}), {len(bad)} pointwise violations "
                   f"on 1000 tariffs, beta+=1 unbounded: {linear.upper_unbounded}")


def test_criterion_4_fourfold(calibration, verdict):
    start = time.perf_counter()
    res = run_fourfold(calibration, p_nr=0.95)
    elapsed = time.perf_counter() - start
    feasible = all(
        np.all(fourfold_feasible(calibration, QUADRANTS[r.metadata["quadrant"]], r.column("gamma")))
        for r in res.reports
    )
    matches = {q: res.summary[f"{q}_weighting_only"]["sign_matches_prediction"] for q in QUADRANTS}
    changed = res.summary["full_variant_quadrants_with_sign_change"]
    ok = feasible and all(matches.values()) and bool(changed) and elapsed < 10.0
    verdict(4, ok, f"weighting-only signs match {matches}, full-CPT sign changes in {changed}, {elapsed:.2f} s")


def test_criterion_5_self_reference(calibration, verdict):
    start = time.perf_counter()
    res = run_self_reference(calibration, steps=500)
    elapsed = time.perf_counter() - start
    parts = []
    for name, s in res.summary.items():
        gap = s["gap_at_parity"]
        if s["dominance_holds"]:
            parts.append(f"{name} ok (parity gap {gap:.1e})")
        else:
            where = ", ".join(f"gamma={g:.4f} diff={d:.2e}" for g, d in s["violations"])
            parts.append(f"{name} VIOLATED at {where or 'parity'} (parity gap {gap:.1e})")
    ok = res.passed and elapsed < 10.0
    verdict(5, ok, f"{'; '.join(parts)}; {elapsed:.2f} s")


def test_criterion_6_solver_round_trip(verdict):
    start = time.perf_counter()
    rng = np.random.default_rng(6)
    worst = 0.0
    for _ in range(100):
        offer, alt, ref, params = random_setup(rng)
        p_star = float(rng.uniform(0.02, 0.98))
        sol = solve_tariff(offer, alt, ref, params, p_star)
        worst = max(worst, abs(subjective_acceptance(offer.with_tariff(sol.tariff), alt, ref, params) - p_star))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-4 and elapsed < 30.0
    verdict(6, ok, f"100 random scenarios, worst |f(solve(p*)) - p*| = {worst:.1e}, {elapsed:.2f} s")


def test_criterion_7_quadrature_oracle(calibration, verdict):
    dists = {
        **{k: v for k, v in self_reference_distributions(calibration).items() if not v.is_discrete},
        "normal_free": TruncNormal(SupportInterval(0.0, 2.0), 0.3, 0.4),
        "normal_wide": TruncNormal(SupportInterval(-1.0, 1.0), 0.2, 3.0),
        "exp_free": TruncExponential(SupportInterval(0.0, 3.0), 2.0, optimistic=False),
    }
    param_sets = [calibration.params, CptParams(0.5, 0.6, 0.95, 1.5)]
    worst, worst_case, oracle_gap, n = 0.0, "", 0.0, 0
    for name, dist in dists.items():
        lo, hi, shift = dist.support.lower, dist.support.upper, 1.7
        for params in param_sets:
            for r in (lo - 0.5, lo + 0.1 * (hi - lo), dist.mean(), lo + 0.73 * (hi - lo), hi + 1.0):
                r = r + shift
                a = subjective_utility_continuous(dist, shift, r, params, n_atoms=4096, refine=False)
                b = cpt_utility_weight_space(dist, shift, r, params)
                c = subjective_utility_quadrature(dist, shift, r, params)
                rel = abs(a - b) / abs(b)
                oracle_gap = max(oracle_gap, abs(b - c) / abs(c))
                if rel > worst:
                    worst, worst_case = rel, f"{name} r={r - shift:+.3f}"
                n += 1
    ok = worst < 1e-4 and oracle_gap < 1e-8
    verdict(7, ok, f"{n} cases, worst relative gap {worst:.1e} ({worst_case}); "
                   f"weight-space and by-parts quadratures agree to {oracle_gap:.1e}")


def _dominated_pair(rng):
    n = int(rng.integers(1, 9))
    u = rng.uniform(-5.0, 5.0, n)
    p = rng.dirichlet(np.ones(n))
    if rng.random() < 0.5:
        # raise some outcomes
        better_u, better_p = u + rng.uniform(0.0, 2.0, n) * (rng.random(n) < 0.6), p
    else:
        # move mass from each outcome onto a higher one
        order = np.argsort(u)
        u, p = u[order], p[order]
        better_p = p.copy()
        for i in range(n - 1):
            moved = better_p[i] * rng.random()
            better_p[i] -= moved
            better_p[int(rng.integers(i + 1, n))] += moved
        better_u = u
    return OutcomeLottery.from_atoms(u, p), OutcomeLottery.from_atoms(better_u, better_p)


def test_criterion_8_fosd(verdict):
    rng = np.random.default_rng(8)
    worst = -math.inf
    for _ in range(1000):
        worse, better = _dominated_pair(rng)
        params = CptParams(
            float(rng.uniform(0.3, 1.0)), float(rng.uniform(0.3, 1.0)), float(rng.uniform(0.3, 1.0)),
            float(rng.uniform(0.5, 4.0)),
        )
        r = float(rng.uniform(-6.0, 6.0))
        worst = max(worst, subjective_utility_discrete(worse, r, params) - subjective_utility_discrete(better, r, params))
    ok = worst <= 1e-12
    verdict(8, ok, f"1000 dominated pairs, largest U^s(worse) - U^s(better) = {worst:.1e}")


def test_criterion_9_eut_degeneracy(verdict):
    rng = np.random.default_rng(9)
    worst_p = worst_u = 0.0
    for _ in range(100):
        offer, alt, ref, params = random_setup(rng, rational=True)
        for g in rng.uniform(-10.0, 40.0, 10):
            o = offer.with_tariff(float(g))
            ev = evaluate(o, alt, ref, params)
            worst_p = max(worst_p, abs(ev.p_subjective - ev.p_objective))
            worst_u = max(worst_u, abs(ev.u_subjective - (o.mean_utility - ref.resolve(o))))
    ok = worst_p <= 1e-10 and worst_u <= 1e-10
    verdict(9, ok, f"100 scenarios x 10 tariffs, max |p^s - p°| = {worst_p:.1e}, max |U^s - (E[U] - R)| = {worst_u:.1e}")
