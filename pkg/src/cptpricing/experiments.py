"""Computational experiments: fourfold pattern, mixed prospects, self reference.

Each ``run_*`` function returns an :class:`ExperimentResult` holding one
or more tariff sweeps plus a summary of the expectations it verified.
Nothing here writes files; see :mod:`cptpricing.report_io`.
"""

from __future__ import annotations

import math
from decimal import ROUND_HALF_EVEN, Decimal
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from . import __version__
from .behavior import (
    CertainOption,
    DynamicReference,
    Reference,
    RideOffer,
    RiskAttitude,
    StaticReference,
    evaluate,
)
from .cpt_core import CptParams
from .distributions import BoundedDistribution, TruncExponential, TruncNormal, TruncPoisson
from .errors import InfeasibleRangeError, NoBandError, ScenarioError
from .pricing import (
    EwtState,
    HPolicy,
    GAMMA_TOL,
    MAX_ITER,
    P_TOL,
    MixedProspectBand,
    TariffBracket,
    desired_probability,
    lambda_star,
    mean_reference,
    mixed_prospect_band,
    solve_tariff,
)
from .scenario import Scenario

ROW_FIELDS = (
    "gamma",
    "U_objective",
    "U_subjective",
    "A_objective",
    "A_subjective",
    "p_objective",
    "p_subjective",
    "RA",
)

CENT = Decimal("0.01")
DOMINANCE_SLACK = 1e-12
COINCIDENCE_TOL = 1e-6


@dataclass(frozen=True)
class ReportRow:
    gamma: float
    U_objective: float
    U_subjective: float
    A_objective: float
    A_subjective: float
    p_objective: float
    p_subjective: float
    RA: float

    def as_tuple(self) -> tuple[float, ...]:
        return tuple(getattr(self, f) for f in ROW_FIELDS)


@dataclass
class ExperimentReport:
    name: str
    rows: list[ReportRow]
    metadata: dict[str, Any] = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows])


@dataclass
class ExperimentResult:
    experiment: str
    reports: list[ExperimentReport]
    summary: dict[str, Any]
    passed: bool
    metadata: dict[str, Any] = field(default_factory=dict)

    def report(self, name: str) -> ExperimentReport:
        for r in self.reports:
            if r.name == name:
                return r
        raise KeyError(name)


def base_metadata(scenario: Scenario, **config: Any) -> dict[str, Any]:
    return {
        "scenario_name": scenario.name,
        "scenario_hash": scenario.hash,
        "tool_version": __version__,
        "config": config,
    }


def sweep(
    offer: RideOffer,
    alt: CertainOption,
    ref: Reference,
    params: CptParams,
    tariffs: Sequence[float],
    **disc: Any,
) -> list[ReportRow]:
    rows = []
    for g in tariffs:
        ev = evaluate(offer.with_tariff(float(g)), alt, ref, params, **disc)
        rows.append(
            ReportRow(
                float(g),
                ev.u_objective,
                ev.u_subjective,
                ev.a_objective,
                ev.a_subjective,
                ev.p_objective,
                ev.p_subjective,
                ev.relative_attractiveness,
            )
        )
    return rows


# --- pricing ----------------------------------------------------------------


def scenario_ewt(scenario: Scenario) -> tuple[EwtState, HPolicy] | None:
    d = scenario.raw.get("desired_probability")
    if not d:
        return None
    state = EwtState(d["ewt_before_min"], d["ewt_after_if_accept_min"], d["ewt_target_min"])
    return state, HPolicy(**d.get("policy", {}))


def run_price(
    scenario: Scenario,
    p_star: float | None = None,
    ewt: EwtState | None = None,
    policy: HPolicy | None = None,
) -> ExperimentResult:
    """Solve the tariff that reaches ``p_star`` under the scenario's reference.

    Without ``p_star`` the target comes from the waiting-time state (``ewt``,
    else the scenario's ``desired_probability`` block) through ``policy``.

    Raises:
        ScenarioError: no target acceptance can be determined.
        BracketError, NonConvergenceError: from the solver.
    """
    source = "given"
    if p_star is None:
        from_file = scenario_ewt(scenario)
        if ewt is None and from_file is None:
            raise ScenarioError("no target acceptance: pass p_star or a waiting-time state")
        ewt = ewt or from_file[0]
        policy = policy or (from_file[1] if from_file else None)
        p_star = desired_probability(ewt, policy)
        source = "waiting_time_policy"
    solver = scenario.solver
    bracket = TariffBracket(*solver["bracket_currency"]) if "bracket_currency" in solver else None
    disc = scenario.discretization
    offer, alt, ref = scenario.offer(), scenario.alternative(), scenario.reference()
    sol = solve_tariff(
        offer,
        alt,
        ref,
        scenario.params,
        p_star,
        bracket,
        gamma_tol=solver.get("gamma_tol_currency", GAMMA_TOL),
        p_tol=solver.get("p_tol", P_TOL),
        max_iter=solver.get("max_iter", MAX_ITER),
        **disc,
    )
    g = scenario.grid
    lo, hi = min(g.min, sol.tariff), max(g.max, sol.tariff)
    rows = sweep(offer, alt, ref, scenario.params, np.linspace(lo, hi, g.steps), **disc)
    summary = {
        "target": p_star,
        "target_source": source,
        "tariff": sol.tariff,
        "tariff_quoted": str(Decimal(repr(sol.tariff)).quantize(CENT, rounding=ROUND_HALF_EVEN)),
        "acceptance": sol.acceptance,
        "interval_width": sol.interval_width,
        "iterations": sol.iterations,
        "reference": type(ref).__name__,
    }
    if ewt is not None:
        summary["ewt"] = {"before": ewt.ewt_before, "after_if_accept": ewt.ewt_after_if_accept, "target": ewt.ewt_target}
    report = ExperimentReport("price_curve", rows, {"cpt": _params_dict(scenario.params)})
    return ExperimentResult("price", [report], summary, True, base_metadata(scenario, p_star=p_star))


# --- fourfold pattern -------------------------------------------------------


@dataclass(frozen=True)
class Quadrant:
    label: str
    regime: str  # "gain" or "loss"
    likelihood: str  # "high" or "low"
    predicted: RiskAttitude

    @property
    def predicted_ra_sign(self) -> int:
        return 1 if self.predicted is RiskAttitude.RISK_AVERSE else -1


QUADRANTS = {
    "a": Quadrant("a", "gain", "high", RiskAttitude.RISK_AVERSE),
    "b": Quadrant("b", "loss", "high", RiskAttitude.RISK_SEEKING),
    "c": Quadrant("c", "gain", "low", RiskAttitude.RISK_SEEKING),
    "d": Quadrant("d", "loss", "low", RiskAttitude.RISK_AVERSE),
}


def fourfold_prospect(scenario: Scenario, quadrant: Quadrant, p_nr: float) -> tuple[TruncPoisson, DynamicReference]:
    """Two-outcome prospect (at most one delay) and its tariff-tracking reference.

    In the gain regime the reference sits on the worst outcome and the best
    outcome is the non-reference one; in the loss regime the roles swap.
    The delay rate is set so the non-reference outcome has probability
    ``p_nr`` (high) or ``1 - p_nr`` (low).
    """
    s = scenario.support
    p_other = p_nr if quadrant.likelihood == "high" else 1.0 - p_nr
    if quadrant.regime == "gain":
        # P(best) = 1 / (rate + 1)
        rate = (1.0 - p_other) / p_other
        ref = DynamicReference(s.lower)
    else:
        # P(worst) = rate / (rate + 1)
        rate = p_other / (1.0 - p_other)
        ref = DynamicReference(s.upper)
    return TruncPoisson(s, rate, 1), ref


def fourfold_feasible(scenario: Scenario, quadrant: Quadrant, gamma: np.ndarray) -> np.ndarray:
    """Tariffs that keep the alternative in the same regime as the offer."""
    s = scenario.support
    a = scenario.alternative().objective_utility
    b = scenario.smods_coefficients.b
    gamma = np.asarray(gamma, dtype=float)
    if quadrant.regime == "gain":
        return s.lower + b * gamma < a
    return s.upper + b * gamma > a


def fourfold_grid(scenario: Scenario, quadrant: Quadrant, steps: int) -> np.ndarray:
    """``steps`` tariffs spanning the feasible part of the scenario grid.

    Raises:
        InfeasibleRangeError: no tariff of the scenario grid is feasible.
    """
    g = scenario.grid
    s = scenario.support
    a = scenario.alternative().objective_utility
    b = scenario.smods_coefficients.b
    lo, hi = g.min, g.max
    open_lo = open_hi = False
    if b != 0.0:
        x_ref = s.lower if quadrant.regime == "gain" else s.upper
        edge = (a - x_ref) / b
        # b < 0: gain regime feasible above the edge, loss regime below it
        if quadrant.regime == "gain":
            if edge >= lo:
                lo, open_lo = edge, True
        elif edge <= hi:
            hi, open_hi = edge, True
    if not lo < hi:
        raise InfeasibleRangeError(f"quadrant ({quadrant.label}) has no feasible tariff in [{g.min}, {g.max}]")
    pts = np.linspace(lo, hi, steps + int(open_lo) + int(open_hi))
    if open_lo:
        pts = pts[1:]
    if open_hi:
        pts = pts[:-1]
    pts = pts[fourfold_feasible(scenario, quadrant, pts)]
    if pts.size == 0:
        raise InfeasibleRangeError(f"quadrant ({quadrant.label}) has no feasible tariff")
    return pts


def _sign_changes(values: np.ndarray) -> int:
    s = np.sign(values)
    s = s[s != 0]
    return int(np.count_nonzero(np.diff(s)))


def run_fourfold(scenario: Scenario, p_nr: float | None = None, steps: int | None = None) -> ExperimentResult:
    cfg = scenario.experiment("fourfold")
    p_nr = float(p_nr if p_nr is not None else cfg.get("p_nr", 0.95))
    steps = int(steps or cfg.get("steps", 200))
    alt = scenario.alternative()
    variants = {"full": scenario.params, "weighting_only": scenario.params.weighting_only()}
    disc = scenario.discretization
    reports, summary = [], {}
    passed = True
    for q in QUADRANTS.values():
        dist, ref = fourfold_prospect(scenario, q, p_nr)
        grid = fourfold_grid(scenario, q, steps)
        offer = scenario.offer(distribution=dist)
        for vname, params in variants.items():
            rows = sweep(offer, alt, ref, params, grid, **disc)
            ra = np.array([r.RA for r in rows])
            matches = bool(np.all(np.sign(ra) == q.predicted_ra_sign))
            key = f"{q.label}_{vname}"
            summary[key] = {
                "predicted": q.predicted.value,
                "ra_min": float(ra.min()),
                "ra_max": float(ra.max()),
                "sign_matches_prediction": matches,
                "sign_changes": _sign_changes(ra),
            }
            if vname == "weighting_only" and not params.alpha == 1.0:
                passed &= matches
            reports.append(
                ExperimentReport(
                    f"fourfold_{key}",
                    rows,
                    {
                        "quadrant": q.label,
                        "regime": q.regime,
                        "likelihood": q.likelihood,
                        "variant": vname,
                        "predicted_attitude": q.predicted.value,
                        "poisson_rate": dist.rate,
                        "reference_x_tilde": ref.x_tilde,
                        "cpt": _params_dict(params),
                    },
                )
            )
    summary["full_variant_quadrants_with_sign_change"] = [
        q for q in QUADRANTS if summary[f"{q}_full"]["sign_changes"] > 0
    ]
    return ExperimentResult(
        "fourfold", reports, summary, passed, base_metadata(scenario, p_nr=p_nr, steps=steps)
    )


# --- mixed prospects --------------------------------------------------------


def band_violations(
    offer: RideOffer, alt: CertainOption, params: CptParams, band: MixedProspectBand, n: int = 1000,
    upper_cap: float | None = None, **disc: Any,
) -> list[tuple[float, float]]:
    """Tariffs in ``[lower, upper)`` where the CPT passenger is not strictly less willing."""
    upper = band.gamma_upper if math.isfinite(band.gamma_upper) else upper_cap
    if upper is None:
        raise ValueError("unbounded band needs an upper_cap")
    grid = np.linspace(band.gamma_lower, upper, n + 1)[:-1]
    ref = mean_reference(offer)
    bad = []
    for g in grid:
        ev = evaluate(offer.with_tariff(float(g)), alt, ref, params, **disc)
        if not ev.p_subjective < ev.p_objective:
            bad.append((float(g), ev.p_subjective - ev.p_objective))
    return bad


def run_mixed(scenario: Scenario, params: CptParams | None = None, steps: int | None = None, label: str = "mixed") -> ExperimentResult:
    """Mean-referenced acceptance against rational acceptance above the parity tariff.

    Raises:
        NoBandError: the mean-referenced subjective utility is nonnegative.
    """
    params = params or scenario.params
    steps = int(steps or scenario.experiment("mixed").get("steps", scenario.grid.steps))
    disc = scenario.discretization
    offer, alt = scenario.offer(), scenario.alternative()
    lam_star = lambda_star(offer, params, n_atoms=disc["n_atoms"], tol=disc["tol"])
    band = mixed_prospect_band(offer, alt, params, **disc)
    g = scenario.grid
    if band.upper_unbounded:
        hi = g.max if g.max > band.gamma_lower else band.gamma_lower + (g.max - g.min)
    else:
        hi = max(g.max, band.gamma_upper + 0.25 * (band.gamma_upper - band.gamma_lower))
    grid = np.linspace(band.gamma_lower, hi, steps)
    rows = sweep(offer, alt, mean_reference(offer), params, grid, **disc)
    inside = [r for r in rows if r.gamma in band]
    violations = [r.gamma for r in inside if not r.p_subjective < r.p_objective]
    summary = {
        "gamma_lower": band.gamma_lower,
        "gamma_upper": None if band.upper_unbounded else band.gamma_upper,
        "upper_unbounded": band.upper_unbounded,
        "gap_at_upper": None if band.upper_unbounded else band.gap_at_upper,
        "u_subjective_mean_ref": band.u_subjective_mean_ref,
        "lambda_star": lam_star,
        "rows_in_band": len(inside),
        "band_violations": violations,
    }
    report = ExperimentReport(
        label,
        rows,
        {
            "reference": "mean",
            "cpt": _params_dict(params),
            "gamma_lower": band.gamma_lower,
            "gamma_upper": None if band.upper_unbounded else band.gamma_upper,
        },
    )
    return ExperimentResult(
        "mixed", [report], summary, not violations, base_metadata(scenario, steps=steps, cpt=_params_dict(params))
    )


def run_mixed_variants(scenario: Scenario, steps: int | None = None) -> ExperimentResult:
    """Scenario parameters plus the linear-gains variant whose band never closes."""
    main = run_mixed(scenario, steps=steps, label="mixed_scenario_params")
    linear = run_mixed(
        scenario, scenario.params.with_(beta_plus=1.0), steps=steps, label="mixed_beta_plus_1"
    )
    return ExperimentResult(
        "mixed",
        main.reports + linear.reports,
        {"scenario_params": main.summary, "beta_plus_1": linear.summary},
        main.passed and linear.passed,
        main.metadata,
    )


# --- self reference ---------------------------------------------------------


def self_reference_distributions(scenario: Scenario) -> dict[str, BoundedDistribution]:
    cfg = scenario.experiment("self_reference")
    s = scenario.support
    return {
        "trunc_normal": TruncNormal.spanning(s.lower, s.upper),
        "trunc_exp_optimistic": TruncExponential.spanning(s.lower, s.upper, optimistic=True),
        "trunc_exp_pessimistic": TruncExponential.spanning(s.lower, s.upper, optimistic=False),
        "trunc_poisson": TruncPoisson(
            s, float(cfg.get("poisson_rate", 4.0)), int(cfg.get("poisson_max_delays", 5))
        ),
    }


def parity_tariff(offer: RideOffer, alt: CertainOption) -> float:
    """Tariff at which the offer's expected utility equals the alternative's."""
    return (alt.objective_utility - offer.mean_x) / offer.coefficients.b


def anchored_grid(lo: float, hi: float, steps: int, anchor: float) -> np.ndarray:
    """Uniform grid whose nearest point to ``anchor`` is moved onto it."""
    grid = np.linspace(lo, hi, steps)
    if lo <= anchor <= hi:
        grid[int(np.argmin(np.abs(grid - anchor)))] = anchor
    return grid


def run_self_reference(scenario: Scenario, steps: int | None = None) -> ExperimentResult:
    """Compare mean-referenced and alternative-referenced acceptance for four distributions."""
    steps = int(steps or scenario.experiment("self_reference").get("steps", 500))
    alt = scenario.alternative()
    params = scenario.params
    disc = scenario.discretization
    g = scenario.grid
    reports, summary = [], {}
    passed = True
    for name, dist in self_reference_distributions(scenario).items():
        offer = scenario.offer(distribution=dist)
        gamma_c = parity_tariff(offer, alt)
        grid = anchored_grid(g.min, g.max, steps, gamma_c)
        mean_rows = sweep(offer, alt, mean_reference(offer), params, grid, **disc)
        alt_rows = sweep(offer, alt, StaticReference(alt.objective_utility), params, grid, **disc)
        p_mean = np.array([r.p_subjective for r in mean_rows])
        p_alt = np.array([r.p_subjective for r in alt_rows])
        diff = p_mean - p_alt
        bad = np.flatnonzero(diff < -DOMINANCE_SLACK)
        at_c = np.flatnonzero(grid == gamma_c)
        gap_c = float(abs(diff[at_c[0]])) if at_c.size else None
        ok = bad.size == 0 and (gap_c is None or gap_c <= COINCIDENCE_TOL)
        passed &= ok
        summary[name] = {
            "parity_tariff": gamma_c,
            "gap_at_parity": gap_c,
            "min_difference": float(diff.min()),
            "violations": [(float(grid[i]), float(diff[i])) for i in bad],
            "dominance_holds": ok,
        }
        for ref_name, rows in (("mean_ref", mean_rows), ("alternative_ref", alt_rows)):
            reports.append(
                ExperimentReport(
                    f"self_ref_{name}_{ref_name}",
                    rows,
                    {"distribution": dist.to_dict(), "reference": ref_name, "parity_tariff": gamma_c},
                )
            )
    return ExperimentResult(
        "self_reference", reports, summary, passed, base_metadata(scenario, steps=steps)
    )


def _params_dict(p: CptParams) -> dict[str, float]:
    return {"alpha": p.alpha, "beta_plus": p.beta_plus, "beta_minus": p.beta_minus, "lambda": p.lam}


__all__ = [
    "ROW_FIELDS",
    "ExperimentReport",
    "ExperimentResult",
    "QUADRANTS",
    "NoBandError",
    "ReportRow",
    "anchored_grid",
    "band_violations",
    "fourfold_feasible",
    "fourfold_grid",
    "fourfold_prospect",
    "parity_tariff",
    "run_fourfold",
    "run_mixed",
    "run_mixed_variants",
    "run_price",
    "run_self_reference",
    "self_reference_distributions",
    "sweep",
]
