"""Tariff design on top of the passenger model.

Subjective acceptance is strictly decreasing in the tariff for static and
for tariff-tracking references, so the tariff reaching a target
acceptance is found by bisection. Also here: the loss-aversion threshold
above which a mean-referenced offer feels like a strict loss, the tariff
band where such passengers accept less often than rational ones, and
the policy mapping waiting-time state to a target acceptance.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np
from scipy.special import expit, logit

from .behavior import CertainOption, DynamicReference, Reference, RideOffer, subjective_acceptance
from .cpt_core import (
    DEFAULT_ATOMS,
    DEFAULT_TOL,
    MAX_ATOMS,
    CptParams,
    OutcomeLottery,
    decision_weights,
    subjective_utility_continuous,
)
from .errors import (
    BracketError,
    DegenerateProspectError,
    DomainError,
    NoBandError,
    NonConvergenceError,
    UnknownPolicyError,
)

P_TOL = 1e-4
GAMMA_TOL = 1e-6
MAX_ITER = 200
MAX_DOUBLINGS = 60
# |U^s| below this at the mean reference is treated as zero (no band)
BAND_TOL = 1e-12


@dataclass(frozen=True)
class TariffBracket:
    low: float
    high: float

    def __post_init__(self) -> None:
        if not self.low < self.high:
            raise DomainError(f"bracket needs low < high, got [{self.low}, {self.high}]")


@dataclass(frozen=True)
class TariffSolution:
    tariff: float
    acceptance: float
    target: float
    interval_width: float
    iterations: int


def _acceptance_fn(
    offer: RideOffer, alt: CertainOption, ref: Reference, params: CptParams, **disc: Any
) -> Callable[[float], float]:
    def f(gamma: float) -> float:
        return subjective_acceptance(offer.with_tariff(gamma), alt, ref, params, **disc)

    return f


def initial_tariff_guess(offer: RideOffer, alt: CertainOption, p_star: float) -> float:
    """Tariff at which a rational passenger accepts with probability ``p_star``."""
    b = offer.coefficients.b
    if b == 0.0:
        return offer.tariff
    return (alt.objective_utility + float(logit(p_star)) - offer.mean_x) / b


def find_bracket(
    f: Callable[[float], float],
    p_star: float,
    guess: float,
    step: float = 1.0,
    max_doublings: int = MAX_DOUBLINGS,
) -> TariffBracket:
    """Grow a bracket geometrically around ``guess`` for a decreasing ``f``."""
    low, high = guess - step, guess + step
    s = step
    for _ in range(max_doublings):
        if f(low) >= p_star:
            break
        s *= 2.0
        low = guess - s
    else:
        raise BracketError(f"no tariff low enough to reach acceptance {p_star}")
    s = step
    for _ in range(max_doublings):
        if f(high) <= p_star:
            break
        s *= 2.0
        high = guess + s
    else:
        raise BracketError(f"no tariff high enough to bring acceptance down to {p_star}")
    return TariffBracket(low, high)


def solve_tariff(
    offer: RideOffer,
    alt: CertainOption,
    ref: Reference,
    params: CptParams,
    p_star: float,
    bracket: TariffBracket | None = None,
    *,
    gamma_tol: float = GAMMA_TOL,
    p_tol: float = P_TOL,
    max_iter: int = MAX_ITER,
    **disc: Any,
) -> TariffSolution:
    """Invert the acceptance curve by bisection.

    Without a bracket one is grown from the rational passenger's tariff.

    Raises:
        BracketError: ``p_star`` is not between the acceptance at the bracket ends.
        NonConvergenceError: the iteration cap is hit, or the final
            acceptance misses ``p_star`` by more than ``p_tol``.
    """
    if not 0.0 < p_star < 1.0:
        raise DomainError("target acceptance must lie in (0, 1)")
    f = _acceptance_fn(offer, alt, ref, params, **disc)
    if bracket is None:
        bracket = find_bracket(f, p_star, initial_tariff_guess(offer, alt, p_star))
    low, high = bracket.low, bracket.high
    f_low, f_high = f(low), f(high)
    if not f_high <= p_star <= f_low:
        raise BracketError(
            f"target {p_star} outside acceptance range [{f_high:.6g}, {f_low:.6g}] of bracket [{low}, {high}]"
        )
    it = 0
    while high - low > gamma_tol:
        if it >= max_iter:
            raise NonConvergenceError(f"bisection stopped after {max_iter} iterations, width {high - low:g}")
        mid = 0.5 * (low + high)
        if f(mid) > p_star:
            low = mid
        else:
            high = mid
        it += 1
    gamma = 0.5 * (low + high)
    p = f(gamma)
    if abs(p - p_star) > p_tol:
        raise NonConvergenceError(f"acceptance {p:.6g} at tariff {gamma:.6g} misses target {p_star}")
    return TariffSolution(gamma, p, p_star, high - low, it)


def mean_reference_lottery(offer: RideOffer, n_atoms: int = DEFAULT_ATOMS) -> OutcomeLottery:
    """The discretization used by the continuous evaluator, shifted to the offer's tariff."""
    return offer.distribution.atomize(n_atoms, graded=True).shifted(offer.tariff_shift)


def _lambda_star_on(lottery: OutcomeLottery, u_bar: float, params: CptParams) -> float:
    dw = decision_weights(lottery, u_bar, params)
    k = dw.loss_count
    u = lottery.utilities
    losses = float(np.dot(dw.weights[:k], (u_bar - u[:k]) ** params.beta_minus))
    gains = float(np.dot(dw.weights[k:], (u[k:] - u_bar) ** params.beta_plus))
    if not losses > 0.0:
        raise DegenerateProspectError("prospect has no outcome below its mean")
    return gains / losses


def lambda_star(
    offer: RideOffer,
    params: CptParams,
    *,
    n_atoms: int = DEFAULT_ATOMS,
    tol: float = DEFAULT_TOL,
    max_atoms: int = MAX_ATOMS,
    refine: bool = True,
) -> float:
    """Loss-aversion level at which the mean-referenced subjective utility is zero.

    Any larger ``lam`` makes the offer a strict subjective loss. The value of
    ``params.lam`` is ignored. Discretization follows
    :func:`~cptpricing.cpt_core.subjective_utility_continuous`.
    """
    u_bar = offer.mean_utility
    dist = offer.distribution
    if dist.is_discrete:
        return _lambda_star_on(mean_reference_lottery(offer, 1), u_bar, params)
    n = n_atoms
    current = _lambda_star_on(mean_reference_lottery(offer, n), u_bar, params)
    if not refine:
        return current
    while 2 * n <= max_atoms:
        n *= 2
        finer = _lambda_star_on(mean_reference_lottery(offer, n), u_bar, params)
        if abs(finer - current) < tol:
            return finer
        current = finer
    raise NonConvergenceError("loss-aversion threshold did not settle")


@dataclass(frozen=True)
class MixedProspectBand:
    """Tariffs where a mean-referenced CPT passenger accepts less than a rational one.

    ``gamma_upper`` is infinite (and ``upper_unbounded`` set) when gains
    are valued linearly.
    """

    gamma_lower: float
    gamma_upper: float
    gap_at_upper: float
    u_subjective_mean_ref: float
    upper_unbounded: bool = False

    def __contains__(self, gamma: float) -> bool:
        return self.gamma_lower <= gamma < self.gamma_upper


def band_gap_root(deficit: float, beta_plus: float, tol: float = 1e-14) -> float:
    """Unique ``d > 1`` with ``d - d**beta_plus == deficit`` (``deficit > 0``, ``beta_plus < 1``)."""
    if not deficit > 0.0:
        raise DomainError("deficit must be positive")
    if not 0.0 < beta_plus < 1.0:
        raise DomainError("root exists only for beta_plus in (0, 1)")

    def g(d: float) -> float:
        return d - d**beta_plus - deficit

    lo, hi = 1.0, 2.0
    for _ in range(MAX_DOUBLINGS * 20):
        if g(hi) >= 0.0:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise NonConvergenceError("could not bracket the band edge")
    for _ in range(400):
        if hi - lo <= tol * max(1.0, hi):
            break
        mid = 0.5 * (lo + hi)
        if g(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def mixed_prospect_band(offer: RideOffer, alt: CertainOption, params: CptParams, **disc: Any) -> MixedProspectBand:
    """Band ``[gamma_lower, gamma_upper)`` of strong risk aversion.

    At ``gamma_lower`` the offer's expected utility equals the alternative's;
    ``gamma_upper`` is where the alternative's concave gain value stops
    outweighing the offer's subjective loss.

    Raises:
        NoBandError: the mean-referenced subjective utility is not negative
            (values within ``BAND_TOL`` of zero count as zero).
    """
    b = offer.coefficients.b
    if not b < 0.0:
        raise DomainError("band needs a strictly negative tariff coefficient")
    a_obj = alt.objective_utility
    x_bar = offer.mean_x
    gamma_lower = (a_obj - x_bar) / b
    at_lower = offer.with_tariff(gamma_lower)
    s = subjective_utility_continuous(
        at_lower.distribution, at_lower.tariff_shift, at_lower.mean_utility, params, **disc
    )
    if s > -BAND_TOL:
        raise NoBandError(f"mean-referenced subjective utility {s:.6g} is not negative")
    if params.beta_plus == 1.0:
        return MixedProspectBand(gamma_lower, math.inf, math.inf, s, upper_unbounded=True)
    gap = band_gap_root(-s, params.beta_plus)
    gamma_upper = (a_obj - x_bar - gap) / b
    return MixedProspectBand(gamma_lower, gamma_upper, gap, s)


def mean_reference(offer: RideOffer) -> DynamicReference:
    """Reference at the offer's own expected utility, for any tariff."""
    return DynamicReference(offer.mean_x)


@dataclass(frozen=True)
class EwtState:
    """Average estimated waiting times in minutes."""

    ewt_before: float
    ewt_after_if_accept: float
    ewt_target: float

    def __post_init__(self) -> None:
        if min(self.ewt_before, self.ewt_after_if_accept, self.ewt_target) < 0.0:
            raise DomainError("waiting times must be nonnegative")

    @property
    def excess_after(self) -> float:
        return self.ewt_after_if_accept - self.ewt_target


@dataclass(frozen=True)
class HPolicy:
    kind: str = "logistic"
    gain: float = 0.3
    level: float = 0.5


def _logistic_policy(state: EwtState, policy: HPolicy) -> float:
    return float(expit(-policy.gain * state.excess_after))


def _constant_policy(state: EwtState, policy: HPolicy) -> float:
    return policy.level


POLICIES: dict[str, Callable[[EwtState, HPolicy], float]] = {
    "logistic": _logistic_policy,
    "constant": _constant_policy,
}

_P_FLOOR = sys.float_info.min
_P_CEIL = 1.0 - 2.0**-53


def desired_probability(state: EwtState, policy: HPolicy | None = None) -> float:
    """Target acceptance for a new request given the waiting-time state.

    The default logistic policy returns 0.5 when accepting would land the
    waiting time exactly on target and less when it would overshoot.
    """
    policy = policy or HPolicy()
    try:
        fn = POLICIES[policy.kind]
    except KeyError:
        raise UnknownPolicyError(policy.kind) from None
    return min(max(fn(state, policy), _P_FLOOR), _P_CEIL)
