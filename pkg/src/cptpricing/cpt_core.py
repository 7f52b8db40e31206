"""Cumulative prospect theory primitives.

Value function, Prelec probability weighting, rank-dependent decision
weights and subjective utility of discrete and continuous prospects.
Everything here is a pure function of its arguments.

Outcomes are utilities (not money): a prospect is a random utility ``U``
and the reference ``r`` is a utility level. Outcomes strictly below the
reference are losses; ties count as non-losses.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import integrate

from .errors import DomainError, NonConvergenceError

if TYPE_CHECKING:
    from .distributions import BoundedDistribution

_PROB_SLACK = 1e-12

DEFAULT_ATOMS = 4096
DEFAULT_TOL = 1e-6
MAX_ATOMS = 2**20


@dataclass(frozen=True)
class CptParams:
    """Behavioral parameters of the value and weighting functions.

    Attributes:
        alpha: Prelec distortion exponent, ``0 < alpha <= 1``.
        beta_plus: curvature of the value function over gains.
        beta_minus: curvature over losses.
        lam: loss-aversion coefficient.
    """

    alpha: float
    beta_plus: float = 0.88
    beta_minus: float = 0.88
    lam: float = 2.25

    def __post_init__(self) -> None:
        for name in ("alpha", "beta_plus", "beta_minus"):
            v = getattr(self, name)
            if not (0.0 < v <= 1.0):
                raise DomainError(f"{name} must lie in (0, 1], got {v!r}")
        # lam < 1 is admitted so property checks can probe loss-seeking inputs
        if not self.lam > 0.0:
            raise DomainError(f"lam must be positive, got {self.lam!r}")

    @classmethod
    def rational(cls) -> CptParams:
        """Parameters under which CPT reduces to expected utility."""
        return cls(alpha=1.0, beta_plus=1.0, beta_minus=1.0, lam=1.0)

    def weighting_only(self) -> CptParams:
        """Keep the probability distortion, linearize the value function."""
        return replace(self, beta_plus=1.0, beta_minus=1.0, lam=1.0)

    def with_(self, **changes: float) -> CptParams:
        return replace(self, **changes)

    @property
    def is_rational(self) -> bool:
        return self.alpha == self.beta_plus == self.beta_minus == self.lam == 1.0


@dataclass(frozen=True, eq=False)
class OutcomeLottery:
    """Finite prospect over strictly increasing utilities."""

    utilities: NDArray[np.float64]
    probabilities: NDArray[np.float64]
    # alpha -> (pi(F), pi(1 - F)); shared by shifted copies since F is unchanged
    _pi_cache: dict[float, tuple[NDArray[np.float64], NDArray[np.float64]]] = field(
        default_factory=dict, repr=False, compare=False
    )

    def __post_init__(self) -> None:
        u = np.array(self.utilities, dtype=float)
        p = np.array(self.probabilities, dtype=float)
        if u.ndim != 1 or u.shape != p.shape or u.size == 0:
            raise DomainError("utilities and probabilities must be equal-length 1-D arrays")
        if not np.all(np.isfinite(u)):
            raise DomainError("utilities must be finite")
        if u.size > 1 and not np.all(np.diff(u) > 0):
            raise DomainError("utilities must be strictly increasing")
        if np.any(p <= 0.0) or np.any(p > 1.0):
            raise DomainError("every probability must lie in (0, 1]")
        if abs(p.sum() - 1.0) > _PROB_SLACK:
            raise DomainError(f"probabilities sum to {p.sum():.15g}, not 1")
        u.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "utilities", u)
        object.__setattr__(self, "probabilities", p)

    @classmethod
    def from_atoms(cls, atoms: ArrayLike, probabilities: ArrayLike) -> OutcomeLottery:
        """Build a lottery from unsorted atoms, merging duplicates and dropping null mass."""
        u = np.asarray(atoms, dtype=float)
        p = np.asarray(probabilities, dtype=float)
        keep = p > 0.0
        u, p = u[keep], p[keep]
        uniq, inv = np.unique(u, return_inverse=True)
        merged = np.zeros(uniq.size)
        np.add.at(merged, inv, p)
        return cls(uniq, merged / merged.sum())

    @classmethod
    def certain(cls, utility: float) -> OutcomeLottery:
        return cls(np.array([utility]), np.array([1.0]))

    def __len__(self) -> int:
        return self.utilities.size

    def shifted(self, delta: float) -> OutcomeLottery:
        """Lottery with every outcome moved by ``delta``."""
        return OutcomeLottery(self.utilities + delta, self.probabilities, self._pi_cache)

    def weighted_cumulatives(self, alpha: float) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        """``(pi(F(u_i)), pi(1 - F(u_i)))`` for every atom, cached per ``alpha``."""
        tables = self._pi_cache.get(alpha)
        if tables is None:
            tables = (prelec_weight(self.cumulative(), alpha), prelec_weight(self.decumulative(), alpha))
            for t in tables:
                t.setflags(write=False)
            self._pi_cache[alpha] = tables
        return tables

    @property
    def mean(self) -> float:
        return float(np.dot(self.utilities, self.probabilities))

    def cumulative(self) -> NDArray[np.float64]:
        """``F(u_i)`` for every atom, pinned to 1 at the last atom."""
        cdf = np.cumsum(self.probabilities)
        cdf[-1] = 1.0
        return np.minimum(cdf, 1.0)

    def decumulative(self) -> NDArray[np.float64]:
        """``1 - F(u_i)`` summed from the top to avoid cancellation."""
        tail = np.cumsum(self.probabilities[::-1])[::-1]
        out = np.empty_like(tail)
        out[:-1] = tail[1:]
        out[-1] = 0.0
        return np.minimum(out, 1.0)


@dataclass(frozen=True, eq=False)
class DecisionWeights:
    weights: NDArray[np.float64]
    loss_count: int

    @property
    def loss_mass(self) -> float:
        return float(self.weights[: self.loss_count].sum())

    @property
    def gain_mass(self) -> float:
        return float(self.weights[self.loss_count :].sum())


def value(u: ArrayLike, r: float, params: CptParams) -> float | NDArray[np.float64]:
    """Reference-dependent value: power gains above ``r``, scaled power losses below."""
    u_arr = np.asarray(u, dtype=float)
    d = u_arr - r
    gain = d >= 0.0
    mag = np.abs(d)
    out = np.where(
        gain,
        mag**params.beta_plus,
        -params.lam * mag**params.beta_minus,
    )
    return float(out) if out.ndim == 0 else out


def prelec_weight(p: ArrayLike, alpha: float) -> float | NDArray[np.float64]:
    """Prelec one-parameter weighting ``exp(-(-ln p)**alpha)``.

    Raises:
        DomainError: if any ``p`` lies outside ``[0, 1]`` by more than 1e-12.
    """
    p_arr = np.asarray(p, dtype=float)
    if np.any(p_arr < -_PROB_SLACK) or np.any(p_arr > 1.0 + _PROB_SLACK) or np.any(np.isnan(p_arr)):
        raise DomainError("probability outside [0, 1]")
    p_arr = np.clip(p_arr, 0.0, 1.0)
    if alpha == 1.0:
        out = p_arr.copy()
    else:
        out = np.zeros_like(p_arr)
        pos = p_arr > 0.0
        out[pos] = np.exp(-((-np.log(p_arr[pos])) ** alpha))
    return float(out) if out.ndim == 0 else out


def prelec_inverse(w: ArrayLike, alpha: float) -> float | NDArray[np.float64]:
    """Inverse of :func:`prelec_weight` on ``[0, 1]``."""
    w_arr = np.clip(np.asarray(w, dtype=float), 0.0, 1.0)
    out = np.zeros_like(w_arr)
    pos = w_arr > 0.0
    out[pos] = np.exp(-((-np.log(w_arr[pos])) ** (1.0 / alpha)))
    return float(out) if out.ndim == 0 else out


def decision_weights(lottery: OutcomeLottery, r: float, params: CptParams) -> DecisionWeights:
    """Rank-dependent weights.

    Losses are weighted by increments of ``pi(F)`` accumulated from the
    worst outcome up; non-losses by increments of ``pi(1 - F)`` accumulated
    from the best outcome down.
    """
    u = lottery.utilities
    k = int(np.searchsorted(u, r, side="left"))
    if params.alpha == 1.0:
        return DecisionWeights(lottery.probabilities.copy(), k)

    pi_cdf, pi_dec = lottery.weighted_cumulatives(params.alpha)
    w = np.empty(u.size)
    if k:
        w[:k] = np.diff(pi_cdf[:k], prepend=0.0)
    if k < u.size:
        # pi(1 - F(u_{i-1})) for the gain block; for the first gain that is pi(1 - F(u_k))
        upper = np.empty(u.size - k)
        upper[0] = pi_dec[k - 1] if k else 1.0
        upper[1:] = pi_dec[k:-1]
        w[k:] = upper - pi_dec[k:]
    return DecisionWeights(w, k)


def subjective_utility_discrete(lottery: OutcomeLottery, r: float, params: CptParams) -> float:
    """CPT utility ``sum w_i V(u_i)`` of a finite prospect."""
    dw = decision_weights(lottery, r, params)
    return float(np.dot(dw.weights, value(lottery.utilities, r, params)))


def subjective_utility_continuous(
    dist: BoundedDistribution,
    tariff_shift: float,
    r: float,
    params: CptParams,
    *,
    n_atoms: int = DEFAULT_ATOMS,
    tol: float = DEFAULT_TOL,
    max_atoms: int = MAX_ATOMS,
    refine: bool = True,
    graded: bool = True,
) -> float:
    """CPT utility of ``U = X + tariff_shift`` with ``X ~ dist``.

    Continuous distributions are replaced by ``n_atoms`` quantile atoms,
    on cells graded toward both tails unless ``graded`` is false (see
    :meth:`~cptpricing.distributions.BoundedDistribution.atomize`); equal
    cells converge slowly because the weighting is infinitely steep at 0
    and 1. With ``refine`` the atom count is doubled until two
    successive values differ by less than ``tol``; the finer value is
    returned. Discrete distributions are evaluated exactly on their atoms,
    and rational parameters reduce to the exact expectation ``E[U] - r``.

    Raises:
        NonConvergenceError: if ``max_atoms`` is reached before ``tol``.
    """
    if params.is_rational:
        return dist.mean() + tariff_shift - r
    if dist.is_discrete:
        return subjective_utility_discrete(dist.atomize(1).shifted(tariff_shift), r, params)

    n = n_atoms
    current = subjective_utility_discrete(dist.atomize(n, graded).shifted(tariff_shift), r, params)
    if not refine:
        return current
    while True:
        if 2 * n > max_atoms:
            raise NonConvergenceError(
                f"quantile discretization did not settle to {tol:g} within {max_atoms} atoms"
            )
        n *= 2
        finer = subjective_utility_discrete(dist.atomize(n, graded).shifted(tariff_shift), r, params)
        if abs(finer - current) < tol:
            return finer
        current = finer


def subjective_utility_quadrature(
    dist: BoundedDistribution,
    tariff_shift: float,
    r: float,
    params: CptParams,
    *,
    epsabs: float = 1e-12,
    epsrel: float = 1e-10,
) -> float:
    """Adaptive-quadrature evaluation of the continuous CPT integral.

    Integrating by parts turns both integrals into integrals of
    ``V'(u) * pi(F(u))`` (losses) and ``V'(u) * pi(1 - F(u))`` (gains),
    which have bounded integrands apart from the algebraic factor
    ``|u - r|**(beta - 1)``; QUADPACK's algebraic weight absorbs it.
    Uses only the distribution's CDF, never its quantile function, so it
    is independent of the discretized path.
    """
    if dist.is_discrete:
        raise DomainError("quadrature oracle applies to continuous distributions only")
    lo = dist.support.lower + tariff_shift
    hi = dist.support.upper + tariff_shift
    a = params.alpha
    bp, bm, lam = params.beta_plus, params.beta_minus, params.lam

    def pi_cdf(u: float) -> float:
        return prelec_weight(float(dist.cdf(u - tariff_shift)), a)

    def pi_sf(u: float) -> float:
        return prelec_weight(float(dist.sf(u - tariff_shift)), a)

    opts = dict(epsabs=epsabs, epsrel=epsrel, limit=500)

    if r <= lo:
        loss = 0.0
    elif r <= hi:
        loss = -lam * bm * integrate.quad(pi_cdf, lo, r, weight="alg", wvar=(0.0, bm - 1.0), **opts)[0]
    else:
        inner = integrate.quad(lambda u: (r - u) ** (bm - 1.0) * pi_cdf(u), lo, hi, **opts)[0]
        loss = -lam * bm * inner - lam * (r - hi) ** bm

    if r >= hi:
        gain = 0.0
    elif r >= lo:
        gain = bp * integrate.quad(pi_sf, r, hi, weight="alg", wvar=(bp - 1.0, 0.0), **opts)[0]
    else:
        inner = integrate.quad(lambda u: (u - r) ** (bp - 1.0) * pi_sf(u), lo, hi, **opts)[0]
        gain = bp * inner + (lo - r) ** bp

    return loss + gain
