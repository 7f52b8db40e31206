"""Invariant checks run against a scenario (the ``check`` subcommand).

Every check returns ``pass``, ``fail`` or ``skipped`` with a short reason.
Checks whose premise does not hold for the scenario (for example loss
aversion below the break-even level) are skipped rather than failed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Callable

import numpy as np

from .behavior import DynamicReference, StaticReference, evaluate
from .cpt_core import (
    CptParams,
    OutcomeLottery,
    prelec_weight,
    subjective_utility_continuous,
    subjective_utility_discrete,
    subjective_utility_quadrature,
    value,
)
from .distributions import density_integral
from .errors import CptPricingError, NoBandError
from .experiments import base_metadata, band_violations, self_reference_distributions
from .pricing import lambda_star, mean_reference, mixed_prospect_band
from .scenario import Scenario

PASS, FAIL, SKIPPED = "pass", "fail", "skipped"

CHECK_GRID_STEPS = 1000
INVARIANCE_TOL = 1e-9
ROUNDTRIP_TOL = 1e-9
DEGENERACY_TOL = 1e-10
ORACLE_RTOL = 1e-4
STRADDLE_DELTA = 1e-3
FOSD_PAIRS = 200
FOSD_SEED = 20240611


@dataclass(frozen=True)
class CheckOutcome:
    name: str
    status: str
    detail: str = ""


@dataclass
class CheckReport:
    outcomes: list[CheckOutcome]
    metadata: dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(o.status != FAIL for o in self.outcomes)

    def status(self, name: str) -> str:
        return next(o.status for o in self.outcomes if o.name == name)

    def counts(self) -> dict[str, int]:
        return {s: sum(o.status == s for o in self.outcomes) for s in (PASS, FAIL, SKIPPED)}


class _Context:
    """Scenario-derived quantities shared between checks."""

    def __init__(self, scenario: Scenario) -> None:
        self.scenario = scenario
        self.params = scenario.params
        self.disc = scenario.discretization
        self.offer = scenario.offer()
        self.alt = scenario.alternative()
        self.grid = scenario.grid.points(CHECK_GRID_STEPS)

    @cached_property
    def lambda_star(self) -> float:
        return lambda_star(self.offer, self.params, **self.disc)

    def sweep(self, ref, params: CptParams | None = None):
        params = params or self.params
        return [evaluate(self.offer.with_tariff(float(g)), self.alt, ref, params, **self.disc) for g in self.grid]


Check = Callable[[_Context], tuple[str, str]]
CHECKS: dict[str, Check] = {}


def _check(name: str) -> Callable[[Check], Check]:
    def register(fn: Check) -> Check:
        CHECKS[name] = fn
        return fn

    return register


def _strictly_decreasing(values: np.ndarray) -> bool:
    return bool(np.all(np.diff(values) < 0.0))


@_check("prelec.fixed_point")
def _prelec_fixed_point(ctx: _Context) -> tuple[str, str]:
    p = 1.0 / math.e
    err = abs(float(prelec_weight(p, ctx.params.alpha)) - p)
    return (PASS if err < 1e-12 else FAIL), f"|pi(1/e) - 1/e| = {err:.2e}"


@_check("prelec.monotone")
def _prelec_monotone(ctx: _Context) -> tuple[str, str]:
    w = prelec_weight(np.linspace(0.0, 1.0, 10_001), ctx.params.alpha)
    ok = w[0] == 0.0 and w[-1] == 1.0 and _strictly_decreasing(-w)
    return (PASS if ok else FAIL), "strictly increasing from 0 to 1 on 10^4 points"


@_check("value.monotone")
def _value_monotone(ctx: _Context) -> tuple[str, str]:
    u = np.linspace(-5.0, 5.0, 2001)
    v = value(u, 0.0, ctx.params)
    ok = _strictly_decreasing(-v) and float(value(0.0, 0.0, ctx.params)) == 0.0
    return (PASS if ok else FAIL), "strictly increasing, zero at the reference"


@_check("distribution.normalization")
def _normalization(ctx: _Context) -> tuple[str, str]:
    worst = 0.0
    for dist in self_reference_distributions(ctx.scenario).values():
        mass = float(dist.probabilities.sum()) if dist.is_discrete else density_integral(dist)
        worst = max(worst, abs(mass - 1.0))
    return (PASS if worst < 1e-8 else FAIL), f"max |mass - 1| = {worst:.2e}"


@_check("distribution.roundtrip")
def _roundtrip(ctx: _Context) -> tuple[str, str]:
    q = (np.arange(1000) + 0.5) / 1000
    worst = 0.0
    for dist in self_reference_distributions(ctx.scenario).values():
        if dist.is_discrete:
            x = dist.atoms
            worst = max(worst, float(np.max(np.abs(dist.quantile(dist.cdf(x)) - x))))
        else:
            worst = max(worst, float(np.max(np.abs(dist.cdf(dist.quantile(q)) - q))))
    return (PASS if worst < ROUNDTRIP_TOL else FAIL), f"max round-trip error {worst:.2e}"


@_check("acceptance.static_reference_monotone")
def _static_monotone(ctx: _Context) -> tuple[str, str]:
    refs = {
        "alternative": StaticReference(ctx.alt.objective_utility),
        "support_lower": StaticReference(ctx.offer.distribution.support.lower),
    }
    bad = [n for n, r in refs.items() if not _strictly_decreasing(np.array([e.p_subjective for e in ctx.sweep(r)]))]
    return (FAIL, f"not strictly decreasing for {bad}") if bad else (PASS, f"{len(refs)} static references")


@_check("acceptance.dynamic_reference")
def _dynamic_reference(ctx: _Context) -> tuple[str, str]:
    s = ctx.offer.distribution.support
    refs = {
        "lower": DynamicReference(s.lower),
        "mean": mean_reference(ctx.offer),
        "upper": DynamicReference(s.upper),
    }
    problems = []
    for name, ref in refs.items():
        evs = ctx.sweep(ref)
        u = np.array([e.u_subjective for e in evs])
        spread = float(u.max() - u.min())
        if spread > INVARIANCE_TOL:
            problems.append(f"{name}: U^s spread {spread:.2e}")
        if not _strictly_decreasing(np.array([e.p_subjective for e in evs])):
            problems.append(f"{name}: acceptance not strictly decreasing")
    return (FAIL, "; ".join(problems)) if problems else (PASS, f"{len(refs)} tariff-tracking references")


@_check("loss_aversion.threshold_straddle")
def _threshold_straddle(ctx: _Context) -> tuple[str, str]:
    ls = ctx.lambda_star
    offer = ctx.offer
    vals = []
    for lam in (ls - STRADDLE_DELTA, ls + STRADDLE_DELTA):
        p = ctx.params.with_(lam=lam)
        vals.append(
            subjective_utility_continuous(offer.distribution, offer.tariff_shift, offer.mean_utility, p, **ctx.disc)
        )
    ok = vals[0] > 0.0 > vals[1]
    return (PASS if ok else FAIL), f"lambda* = {ls:.6g}, U^s at -/+ delta = {vals[0]:.3e}, {vals[1]:.3e}"


@_check("loss_aversion.strict_loss")
def _strict_loss(ctx: _Context) -> tuple[str, str]:
    ls = ctx.lambda_star
    if not ctx.params.lam > ls:
        return SKIPPED, f"lambda = {ctx.params.lam} does not exceed lambda* = {ls:.6g}"
    o = ctx.offer
    s = subjective_utility_continuous(o.distribution, o.tariff_shift, o.mean_utility, ctx.params, **ctx.disc)
    return (PASS if s < 0.0 else FAIL), f"U^s at the mean reference = {s:.6g}"


@_check("mixed.band")
def _mixed_band(ctx: _Context) -> tuple[str, str]:
    if not ctx.params.lam > ctx.lambda_star:
        return SKIPPED, f"lambda = {ctx.params.lam} does not exceed lambda* = {ctx.lambda_star:.6g}"
    try:
        band = mixed_prospect_band(ctx.offer, ctx.alt, ctx.params, **ctx.disc)
    except NoBandError as exc:
        return SKIPPED, str(exc)
    cap = max(ctx.scenario.grid.max, band.gamma_lower + 1.0)
    bad = band_violations(ctx.offer, ctx.alt, ctx.params, band, CHECK_GRID_STEPS, upper_cap=cap, **ctx.disc)
    upper = "inf" if band.upper_unbounded else f"{band.gamma_upper:.4f}"
    detail = f"band [{band.gamma_lower:.4f}, {upper}), {len(bad)} violations"
    return (FAIL if bad else PASS), detail


@_check("eut.degeneracy")
def _degeneracy(ctx: _Context) -> tuple[str, str]:
    evs = ctx.sweep(ctx.scenario.reference(), CptParams.rational())
    err = max(abs(e.p_subjective - e.p_objective) for e in evs)
    return (PASS if err < DEGENERACY_TOL else FAIL), f"max |p^s - p°| = {err:.2e}"


@_check("fosd")
def _fosd(ctx: _Context) -> tuple[str, str]:
    rng = np.random.default_rng(FOSD_SEED)
    worst = 0.0
    for _ in range(FOSD_PAIRS):
        n = int(rng.integers(1, 8))
        u = rng.uniform(-5.0, 5.0, n)
        p = rng.dirichlet(np.ones(n))
        better = u + rng.uniform(0.0, 1.0, n) * (rng.random(n) < 0.5)
        r = float(rng.uniform(-5.0, 5.0))
        lo = subjective_utility_discrete(OutcomeLottery.from_atoms(u, p), r, ctx.params)
        hi = subjective_utility_discrete(OutcomeLottery.from_atoms(better, p), r, ctx.params)
        worst = max(worst, lo - hi)
    ok = worst <= 1e-12
    return (PASS if ok else FAIL), f"{FOSD_PAIRS} dominated pairs, worst reversal {worst:.2e}"


@_check("discretization.consistency")
def _discretization(ctx: _Context) -> tuple[str, str]:
    o = ctx.offer
    if o.distribution.is_discrete:
        return SKIPPED, "distribution is discrete"
    vals = [
        subjective_utility_continuous(o.distribution, o.tariff_shift, o.mean_utility, ctx.params, n_atoms=n, refine=False)
        for n in (1000, 10_000)
    ]
    rel = abs(vals[0] - vals[1]) / max(abs(vals[1]), 1e-300)
    return (PASS if rel < 1e-4 else FAIL), f"relative change 10^3 -> 10^4 atoms: {rel:.2e}"


@_check("quadrature.agreement")
def _quadrature(ctx: _Context) -> tuple[str, str]:
    worst = 0.0
    n = 0
    for dist in self_reference_distributions(ctx.scenario).values():
        if dist.is_discrete:
            continue
        o = ctx.offer
        for r in (dist.support.lower, dist.mean(), dist.support.upper, ctx.alt.objective_utility):
            a = subjective_utility_continuous(dist, 0.0, r, ctx.params, n_atoms=4096, refine=False)
            b = subjective_utility_quadrature(dist, 0.0, r, ctx.params)
            worst = max(worst, abs(a - b) / max(abs(b), 1e-300))
            n += 1
    return (PASS if worst < ORACLE_RTOL else FAIL), f"{n} cases, worst relative gap {worst:.2e}"


def run_property_check(scenario: Scenario, only: list[str] | None = None) -> CheckReport:
    """Run every registered check (or the ``only`` subset) against ``scenario``."""
    ctx = _Context(scenario)
    outcomes = []
    for name, fn in CHECKS.items():
        if only is not None and name not in only:
            continue
        try:
            status, detail = fn(ctx)
        except CptPricingError as exc:
            status, detail = FAIL, f"{type(exc).__name__}: {exc}"
        outcomes.append(CheckOutcome(name, status, detail))
    return CheckReport(outcomes, base_metadata(scenario, grid_steps=CHECK_GRID_STEPS, fosd_seed=FOSD_SEED))
