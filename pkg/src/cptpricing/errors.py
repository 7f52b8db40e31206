"""Exception hierarchy shared across the package."""

from __future__ import annotations


class CptPricingError(Exception):
    """Base class for every error raised by this package."""


class DomainError(CptPricingError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class NonConvergenceError(CptPricingError, RuntimeError):
    """A numerical procedure failed to reach its tolerance."""


class BracketError(CptPricingError, ValueError):
    """The target acceptance probability is not enclosed by the tariff bracket."""


class DegenerateProspectError(CptPricingError, ValueError):
    """The prospect has no outcome strictly on one side of its mean."""


class NoBandError(CptPricingError, ValueError):
    """Subjective utility at the mean reference is nonnegative, so no band exists."""


class UnknownPolicyError(CptPricingError, KeyError):
    """Requested desired-probability policy is not registered."""


class InfeasibleRangeError(CptPricingError, ValueError):
    """No tariff in the grid satisfies the experiment's feasibility constraint."""


class ScenarioError(CptPricingError, ValueError):
    """Scenario file is malformed or internally inconsistent."""


class OutputError(CptPricingError, OSError):
    """Writing an experiment artifact failed."""
