"""Passenger decision model.

Objective utilities come from a linear travel-disutility model. The
shared ride is an uncertain prospect ``U = X + b * tariff``, and the
alternative (e.g. a conventional ride-hail) is a certain prospect.
Acceptance is a binary logit over either objective utilities (rational
passenger) or CPT subjective utilities.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Any, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.special import expit, softmax

from .cpt_core import CptParams, subjective_utility_continuous, value
from .distributions import BoundedDistribution, SupportInterval, from_descriptor
from .errors import DomainError

ATTITUDE_TOL = 1e-9


@dataclass(frozen=True)
class UtilityCoefficients:
    """Linear utility weights: per-minute walk/wait/ride, per-currency tariff, constant."""

    a_walk: float
    a_wait: float
    a_ride: float
    b: float
    c: float = 0.0

    def __post_init__(self) -> None:
        for name in ("a_walk", "a_wait", "a_ride", "b"):
            if getattr(self, name) > 0.0:
                raise DomainError(f"coefficient {name} must be nonpositive")

    @property
    def value_of_time(self) -> float:
        """Waiting-time VOT in currency per minute."""
        return self.a_wait / self.b


@dataclass(frozen=True)
class TravelTimes:
    walk: float
    wait: float
    ride: float

    def __post_init__(self) -> None:
        if min(self.walk, self.wait, self.ride) < 0.0:
            raise DomainError("travel times must be nonnegative")


@dataclass(frozen=True)
class TravelTimeBounds:
    walk: tuple[float, float]
    wait: tuple[float, float]
    ride: tuple[float, float]

    def __post_init__(self) -> None:
        for name in ("walk", "wait", "ride"):
            lo, hi = getattr(self, name)
            if lo < 0.0 or lo > hi:
                raise DomainError(f"{name} bounds must satisfy 0 <= min <= max")

    @property
    def fastest(self) -> TravelTimes:
        return TravelTimes(self.walk[0], self.wait[0], self.ride[0])

    @property
    def slowest(self) -> TravelTimes:
        return TravelTimes(self.walk[1], self.wait[1], self.ride[1])


def objective_utility(coeffs: UtilityCoefficients, times: TravelTimes, tariff: float) -> float:
    return (
        coeffs.a_walk * times.walk
        + coeffs.a_wait * times.wait
        + coeffs.a_ride * times.ride
        + coeffs.b * tariff
        + coeffs.c
    )


def x_bounds(coeffs: UtilityCoefficients, bounds: TravelTimeBounds) -> SupportInterval:
    """Worst and best tariff-free utility over the travel-time box."""
    worst = objective_utility(coeffs, bounds.slowest, 0.0)
    best = objective_utility(coeffs, bounds.fastest, 0.0)
    return SupportInterval(worst, best)


@dataclass(frozen=True)
class RideOffer:
    """Uncertain shared-ride offer: ``U = X + b * tariff``."""

    distribution: BoundedDistribution
    tariff: float
    coefficients: UtilityCoefficients

    @classmethod
    def from_bounds(
        cls,
        coeffs: UtilityCoefficients,
        bounds: TravelTimeBounds,
        descriptor: dict[str, Any],
        tariff: float = 0.0,
    ) -> RideOffer:
        return cls(from_descriptor(descriptor, x_bounds(coeffs, bounds)), tariff, coeffs)

    @property
    def tariff_shift(self) -> float:
        return self.coefficients.b * self.tariff

    @property
    def mean_x(self) -> float:
        return self.distribution.mean()

    @property
    def mean_utility(self) -> float:
        """Expected utility of the offer, the rational valuation."""
        return self.mean_x + self.tariff_shift

    def with_tariff(self, tariff: float) -> RideOffer:
        return replace(self, tariff=float(tariff))


@dataclass(frozen=True)
class CertainOption:
    objective_utility: float

    def __post_init__(self) -> None:
        if not np.isfinite(self.objective_utility):
            raise DomainError("alternative utility must be finite")

    @classmethod
    def from_attributes(cls, coeffs: UtilityCoefficients, times: TravelTimes, tariff: float) -> CertainOption:
        return cls(objective_utility(coeffs, times, tariff))


@dataclass(frozen=True)
class StaticReference:
    r: float

    def resolve(self, offer: RideOffer) -> float:
        return self.r


@dataclass(frozen=True)
class DynamicReference:
    """Reference that tracks the tariff: ``x_tilde + b * tariff``."""

    x_tilde: float

    def resolve(self, offer: RideOffer) -> float:
        return self.x_tilde + offer.tariff_shift


Reference = Union[StaticReference, DynamicReference]


class RiskAttitude(enum.Enum):
    RISK_SEEKING = "risk_seeking"
    RISK_AVERSE = "risk_averse"
    NEUTRAL = "neutral"


def offer_subjective_utility(offer: RideOffer, ref: Reference, params: CptParams, **discretization: Any) -> float:
    r = ref.resolve(offer)
    return subjective_utility_continuous(offer.distribution, offer.tariff_shift, r, params, **discretization)


def alternative_subjective_utility(alt: CertainOption, r: float, params: CptParams) -> float:
    """A certain prospect is valued by the value function alone."""
    return float(value(alt.objective_utility, r, params))


def binary_logit(u: float, a: float) -> float:
    """``e^u / (e^u + e^a)`` without overflow."""
    return float(expit(u - a))


def objective_acceptance(offer: RideOffer, alt: CertainOption) -> float:
    return binary_logit(offer.mean_utility, alt.objective_utility)


def subjective_acceptance(
    offer: RideOffer, alt: CertainOption, ref: Reference, params: CptParams, **discretization: Any
) -> float:
    return evaluate(offer, alt, ref, params, **discretization).p_subjective


def discrete_choice(utilities: ArrayLike) -> NDArray[np.float64]:
    """Multinomial logit choice probabilities."""
    u = np.asarray(utilities, dtype=float)
    if u.ndim != 1 or u.size == 0:
        raise DomainError("need a nonempty 1-D list of utilities")
    return softmax(u)


@dataclass(frozen=True)
class Evaluation:
    """Objective and subjective valuations of one offer against the alternative."""

    tariff: float
    reference: float
    u_objective: float
    u_subjective: float
    a_objective: float
    a_subjective: float

    @property
    def p_objective(self) -> float:
        return binary_logit(self.u_objective, self.a_objective)

    @property
    def p_subjective(self) -> float:
        return binary_logit(self.u_subjective, self.a_subjective)

    @property
    def relative_attractiveness(self) -> float:
        """Positive when the rational passenger likes the offer more than the CPT one."""
        return (self.u_objective - self.a_objective) - (self.u_subjective - self.a_subjective)


def evaluate(
    offer: RideOffer, alt: CertainOption, ref: Reference, params: CptParams, **discretization: Any
) -> Evaluation:
    r = ref.resolve(offer)
    return Evaluation(
        tariff=offer.tariff,
        reference=r,
        u_objective=offer.mean_utility,
        u_subjective=subjective_utility_continuous(
            offer.distribution, offer.tariff_shift, r, params, **discretization
        ),
        a_objective=alt.objective_utility,
        a_subjective=alternative_subjective_utility(alt, r, params),
    )


def risk_attitude(
    offer: RideOffer,
    alt: CertainOption,
    ref: Reference,
    params: CptParams,
    tol: float = ATTITUDE_TOL,
    **discretization: Any,
) -> RiskAttitude:
    """Classify the CPT passenger relative to a rational one."""
    ev = evaluate(offer, alt, ref, params, **discretization)
    return classify(ev.p_subjective, ev.p_objective, tol)


def classify(p_subjective: float, p_reference: float, tol: float = ATTITUDE_TOL) -> RiskAttitude:
    """Higher acceptance of the uncertain option means more risk seeking."""
    if p_subjective > p_reference + tol:
        return RiskAttitude.RISK_SEEKING
    if p_subjective < p_reference - tol:
        return RiskAttitude.RISK_AVERSE
    return RiskAttitude.NEUTRAL


def compare_references(
    offer: RideOffer,
    alt: CertainOption,
    first: Reference,
    second: Reference,
    params: CptParams,
    tol: float = ATTITUDE_TOL,
    **discretization: Any,
) -> RiskAttitude:
    """Attitude of a passenger framed by ``first`` relative to one framed by ``second``.

    ``RISK_AVERSE`` means the ``first`` framing accepts the offer less often.
    """
    p1 = subjective_acceptance(offer, alt, first, params, **discretization)
    p2 = subjective_acceptance(offer, alt, second, params, **discretization)
    return classify(p1, p2, tol)
