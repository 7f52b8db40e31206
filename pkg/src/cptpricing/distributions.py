"""Bounded distributions of the travel-disutility term ``X``.

Each distribution lives on a closed support ``[lower, upper]`` in utility
units and exposes ``cdf``, ``sf``, ``quantile``, ``mean`` and ``atomize``.
The truncated Normal and the two truncated exponentials have a ``spanning``
constructor that pins their shape parameters to the support width.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Any, ClassVar

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import integrate
from scipy.special import gammaln, logsumexp, ndtr
from scipy.stats import truncnorm

from .cpt_core import OutcomeLottery
from .errors import DomainError, ScenarioError

_Q_SLACK = 1e-12


def _phi(z: float) -> float:
    return math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class SupportInterval:
    lower: float
    upper: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lower) and math.isfinite(self.upper)):
            raise DomainError("support bounds must be finite")
        if self.lower > self.upper:
            raise DomainError(f"support lower {self.lower} exceeds upper {self.upper}")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lower + self.upper)


def _check_q(q: ArrayLike) -> NDArray[np.float64]:
    q_arr = np.asarray(q, dtype=float)
    if np.any(np.isnan(q_arr)) or np.any(q_arr < -_Q_SLACK) or np.any(q_arr > 1.0 + _Q_SLACK):
        raise DomainError("quantile level outside [0, 1]")
    return np.clip(q_arr, 0.0, 1.0)


def _out(a: NDArray[np.float64]) -> float | NDArray[np.float64]:
    return float(a) if a.ndim == 0 else a


class BoundedDistribution(ABC):
    """Common interface; concrete kinds are frozen dataclasses."""

    kind: ClassVar[str]
    is_discrete: ClassVar[bool] = False
    support: SupportInterval

    @abstractmethod
    def cdf(self, x: ArrayLike) -> float | NDArray[np.float64]: ...

    def sf(self, x: ArrayLike) -> float | NDArray[np.float64]:
        return _out(1.0 - np.asarray(self.cdf(x)))

    @abstractmethod
    def quantile(self, q: ArrayLike) -> float | NDArray[np.float64]: ...

    def isf(self, s: ArrayLike) -> float | NDArray[np.float64]:
        """Inverse survival function; accurate for upper-tail masses far below 1e-16."""
        return self.quantile(1.0 - _check_q(s))

    @abstractmethod
    def mean(self) -> float: ...

    @abstractmethod
    def to_dict(self) -> dict[str, Any]: ...

    def atomize(self, n: int, graded: bool = False) -> OutcomeLottery:
        """``n`` quantile atoms, one per probability cell (native atoms for discrete kinds).

        Plain atoms split [0, 1] into equal cells. ``graded`` places the cell
        edges at ``h(k / n)`` with ``h(t) = t**3 (10 - 15 t + 6 t**2)``, so cells
        shrink like ``n**-3`` toward both tails, where probability weighting
        has infinite slope. Each atom sits at the quantile of ``h`` at its
        cell's midpoint in ``t``.
        """
        if n < 1:
            raise DomainError("atom count must be at least 1")
        return _atomize_cached(self, n, bool(graded) and n >= 2)

    def _atoms(self, n: int, graded: bool) -> OutcomeLottery:
        t = np.linspace(0.0, 1.0, n + 1)
        mid = 0.5 * (t[:-1] + t[1:])
        h = _smootherstep if graded else (lambda v: v)
        edges, q, tail = h(t), h(mid), h(1.0 - mid)
        # upper half through the survival side so tiny upper tails keep their digits
        lower = q <= 0.5
        x = np.empty(n)
        x[lower] = self.quantile(q[lower])
        x[~lower] = self.isf(tail[~lower])
        return OutcomeLottery.from_atoms(x, np.diff(edges))


def _smootherstep(t: NDArray[np.float64]) -> NDArray[np.float64]:
    # symmetric: 1 - h(t) == h(1 - t)
    return t**3 * (10.0 - 15.0 * t + 6.0 * t * t)


@lru_cache(maxsize=256)
def _atomize_cached(dist: BoundedDistribution, n: int, graded: bool) -> OutcomeLottery:
    return dist._atoms(n, graded)


class _Continuous(BoundedDistribution):
    @abstractmethod
    def pdf(self, x: ArrayLike) -> float | NDArray[np.float64]: ...


@dataclass(frozen=True)
class TruncNormal(_Continuous):
    """Normal(mu, sigma) truncated to the support."""

    support: SupportInterval
    mu: float
    sigma: float
    kind: ClassVar[str] = "trunc_normal"

    def __post_init__(self) -> None:
        if not self.sigma > 0.0:
            raise DomainError("sigma must be positive")
        if not self.support.width > 0.0:
            raise DomainError("continuous distributions need a nondegenerate support")

    @classmethod
    def spanning(cls, lower: float, upper: float) -> TruncNormal:
        """Centered on the support midpoint with spread equal to the full width."""
        s = SupportInterval(lower, upper)
        return cls(s, s.midpoint, s.width)

    @cached_property
    def _frozen(self):
        a = (self.support.lower - self.mu) / self.sigma
        b = (self.support.upper - self.mu) / self.sigma
        return truncnorm(a, b, loc=self.mu, scale=self.sigma)

    def pdf(self, x):
        return _out(self._frozen.pdf(np.asarray(x, dtype=float)))

    def cdf(self, x):
        return _out(self._frozen.cdf(np.asarray(x, dtype=float)))

    def sf(self, x):
        return _out(self._frozen.sf(np.asarray(x, dtype=float)))

    def quantile(self, q):
        q_arr = _check_q(q)
        x = np.clip(self._frozen.ppf(q_arr), self.support.lower, self.support.upper)
        return _out(x)

    def isf(self, s):
        s_arr = _check_q(s)
        x = np.clip(self._frozen.isf(s_arr), self.support.lower, self.support.upper)
        return _out(x)

    def mean(self) -> float:
        a = (self.support.lower - self.mu) / self.sigma
        b = (self.support.upper - self.mu) / self.sigma
        m = self.mu + self.sigma * (_phi(a) - _phi(b)) / self.normalizer
        return float(np.clip(m, self.support.lower, self.support.upper))

    @property
    def normalizer(self) -> float:
        """Probability mass of the untruncated Normal inside the support."""
        a = (self.support.lower - self.mu) / self.sigma
        b = (self.support.upper - self.mu) / self.sigma
        return float(ndtr(b) - ndtr(a))

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "mu": self.mu, "sigma": self.sigma}


@dataclass(frozen=True)
class TruncExponential(_Continuous):
    """Exponential decay away from one end of the support.

    ``optimistic=True`` puts the mode at the upper (best) end with density
    proportional to ``exp(-rate * (upper - x))``; otherwise the mode sits at
    the lower (worst) end with density proportional to ``exp(-rate * (x - lower))``.
    """

    support: SupportInterval
    rate: float
    optimistic: bool

    def __post_init__(self) -> None:
        if not self.rate > 0.0:
            raise DomainError("rate must be positive")
        if not self.support.width > 0.0:
            raise DomainError("continuous distributions need a nondegenerate support")

    @property
    def kind(self) -> str:  # type: ignore[override]
        return "trunc_exp_optimistic" if self.optimistic else "trunc_exp_pessimistic"

    @classmethod
    def spanning(cls, lower: float, upper: float, *, optimistic: bool) -> TruncExponential:
        s = SupportInterval(lower, upper)
        return cls(s, 1.0 / s.width, optimistic)

    @property
    def normalizer(self) -> float:
        return -math.expm1(-self.rate * self.support.width)

    def _dist_from_mode(self, x: NDArray[np.float64]) -> NDArray[np.float64]:
        s = self.support
        t = (s.upper - x) if self.optimistic else (x - s.lower)
        return np.clip(t, 0.0, s.width)

    def _mass_near_mode(self, t: NDArray[np.float64]) -> NDArray[np.float64]:
        # P(distance from mode <= t)
        return -np.expm1(-self.rate * t) / self.normalizer

    def pdf(self, x):
        x_arr = np.asarray(x, dtype=float)
        inside = (x_arr >= self.support.lower) & (x_arr <= self.support.upper)
        t = self._dist_from_mode(x_arr)
        dens = self.rate * np.exp(-self.rate * t) / self.normalizer
        return _out(np.where(inside, dens, 0.0))

    def cdf(self, x):
        x_arr = np.asarray(x, dtype=float)
        m = self._mass_near_mode(self._dist_from_mode(x_arr))
        return _out(1.0 - m if self.optimistic else m)

    def sf(self, x):
        x_arr = np.asarray(x, dtype=float)
        m = self._mass_near_mode(self._dist_from_mode(x_arr))
        return _out(m if self.optimistic else 1.0 - m)

    def _t_near(self, m: NDArray[np.float64]) -> NDArray[np.float64]:
        # distance from the mode enclosing mass m
        return -np.log1p(-m * self.normalizer) / self.rate

    def _t_far(self, m: NDArray[np.float64]) -> NDArray[np.float64]:
        # distance from the mode beyond which mass m remains
        return -np.log(m * self.normalizer + math.exp(-self.rate * self.support.width)) / self.rate

    def _place(self, t: NDArray[np.float64]) -> float | NDArray[np.float64]:
        s = self.support
        x = (s.upper - t) if self.optimistic else (s.lower + t)
        return _out(np.clip(x, s.lower, s.upper))

    def quantile(self, q):
        q_arr = _check_q(q)
        return self._place(self._t_far(q_arr) if self.optimistic else self._t_near(q_arr))

    def isf(self, s):
        s_arr = _check_q(s)
        return self._place(self._t_near(s_arr) if self.optimistic else self._t_far(s_arr))

    def mean(self) -> float:
        w = self.support.width
        lw = self.rate * w
        # mean distance from the mode: 1/rate - w e^{-lw} / (1 - e^{-lw})
        offset = 1.0 / self.rate - w / math.expm1(lw)
        return self.support.upper - offset if self.optimistic else self.support.lower + offset

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "rate": self.rate}


class _Discrete(BoundedDistribution):
    is_discrete: ClassVar[bool] = True

    @property
    @abstractmethod
    def atoms(self) -> NDArray[np.float64]: ...

    @property
    @abstractmethod
    def probabilities(self) -> NDArray[np.float64]: ...

    def cdf(self, x):
        x_arr = np.asarray(x, dtype=float)
        cum = np.concatenate([[0.0], np.cumsum(self.probabilities)])
        cum[-1] = 1.0
        idx = np.searchsorted(self.atoms, x_arr, side="right")
        return _out(np.minimum(cum[idx], 1.0))

    def quantile(self, q):
        q_arr = _check_q(q)
        cum = np.cumsum(self.probabilities)
        cum[-1] = 1.0
        idx = np.searchsorted(cum, q_arr - 1e-15, side="left")
        idx = np.minimum(idx, self.atoms.size - 1)
        return _out(np.where(q_arr <= 0.0, self.support.lower, self.atoms[idx]))

    def mean(self) -> float:
        return float(np.dot(self.atoms, self.probabilities))

    def _atoms(self, n: int, graded: bool) -> OutcomeLottery:
        return OutcomeLottery.from_atoms(self.atoms, self.probabilities)


@dataclass(frozen=True)
class TruncPoisson(_Discrete):
    """Poisson count of delays capped at ``max_delays``.

    ``k`` delays place the outcome at ``upper - k * width / max_delays``, so
    the ``max_delays + 1`` atoms are evenly spaced over the support.
    """

    support: SupportInterval
    rate: float
    max_delays: int
    kind: ClassVar[str] = "trunc_poisson"

    def __post_init__(self) -> None:
        if not self.rate > 0.0:
            raise DomainError("Poisson rate must be positive")
        if int(self.max_delays) != self.max_delays or self.max_delays < 1:
            raise DomainError("max_delays must be a positive integer")

    @property
    def delay_probabilities(self) -> NDArray[np.float64]:
        """P(k delays) for k = 0..K, computed in log space."""
        k = np.arange(self.max_delays + 1)
        logw = k * math.log(self.rate) - self.rate - gammaln(k + 1)
        return np.exp(logw - logsumexp(logw))

    @property
    def normalizer(self) -> float:
        k = np.arange(self.max_delays + 1)
        logw = k * math.log(self.rate) - self.rate - gammaln(k + 1)
        return float(np.exp(logsumexp(logw)))

    @property
    def atoms(self) -> NDArray[np.float64]:
        # ascending order: k = K (worst) first
        k = np.arange(self.max_delays, -1, -1)
        x = self.support.upper - k * self.support.width / self.max_delays
        x[0] = self.support.lower
        return x

    @property
    def probabilities(self) -> NDArray[np.float64]:
        return self.delay_probabilities[::-1].copy()

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "rate": self.rate, "max_delays": self.max_delays}


@dataclass(frozen=True)
class DiscreteAtoms(_Discrete):
    values: tuple[float, ...]
    weights: tuple[float, ...]
    support: SupportInterval = field(init=False)
    kind: ClassVar[str] = "discrete_atoms"

    def __post_init__(self) -> None:
        lot = OutcomeLottery.from_atoms(self.values, np.asarray(self.weights) / np.sum(self.weights))
        object.__setattr__(self, "values", tuple(lot.utilities.tolist()))
        object.__setattr__(self, "weights", tuple(lot.probabilities.tolist()))
        object.__setattr__(self, "support", SupportInterval(lot.utilities[0], lot.utilities[-1]))

    @property
    def atoms(self) -> NDArray[np.float64]:
        return np.array(self.values)

    @property
    def probabilities(self) -> NDArray[np.float64]:
        return np.array(self.weights)

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "values": list(self.values), "weights": list(self.weights)}


@dataclass(frozen=True)
class PointMass(_Discrete):
    x: float
    support: SupportInterval = field(init=False)
    kind: ClassVar[str] = "point_mass"

    def __post_init__(self) -> None:
        object.__setattr__(self, "support", SupportInterval(self.x, self.x))

    @property
    def atoms(self) -> NDArray[np.float64]:
        return np.array([self.x])

    @property
    def probabilities(self) -> NDArray[np.float64]:
        return np.array([1.0])

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "x": self.x}


def density_integral(dist: BoundedDistribution) -> float:
    """Numerical integral of the pdf over the support (continuous kinds)."""
    if dist.is_discrete:
        raise DomainError("density_integral needs a continuous distribution")
    s = dist.support
    val, _ = integrate.quad(lambda x: float(dist.pdf(x)), s.lower, s.upper, epsabs=1e-13, epsrel=1e-12)
    return val


def from_descriptor(desc: dict[str, Any], support: SupportInterval) -> BoundedDistribution:
    """Build a distribution over ``support`` from a scenario descriptor.

    Parameters absent from the descriptor take their ``spanning`` values.
    """
    kind = desc.get("kind")
    lo, hi = support.lower, support.upper
    if kind == "trunc_normal":
        base = TruncNormal.spanning(lo, hi)
        return TruncNormal(support, float(desc.get("mu", base.mu)), float(desc.get("sigma", base.sigma)))
    if kind in ("trunc_exp_optimistic", "trunc_exp_pessimistic"):
        base = TruncExponential.spanning(lo, hi, optimistic=kind.endswith("optimistic"))
        return TruncExponential(support, float(desc.get("rate", base.rate)), base.optimistic)
    if kind == "trunc_poisson":
        try:
            return TruncPoisson(support, float(desc["rate"]), int(desc["max_delays"]))
        except KeyError as exc:
            raise ScenarioError(f"trunc_poisson descriptor missing {exc}") from None
    if kind == "point_mass":
        return PointMass(float(desc.get("x", lo)))
    if kind == "discrete_atoms":
        return DiscreteAtoms(tuple(desc["values"]), tuple(desc["weights"]))
    raise ScenarioError(f"unknown distribution kind {kind!r}")
