"""High-precision reference evaluations written independently of the package.

The CPT integral is evaluated in decision-weight space: with
``w = pi(F(u))`` the loss part becomes ``-lam * int_0^{pi(F(r))} (r - Q(pi^-1(w)))**beta dw``
and the gain part mirrors it through the survival function. Both integrands
are bounded, so tanh-sinh quadrature converges even though ``pi`` piles
weight onto outcomes within 1e-30 of the support ends. Distribution
functions are rebuilt here in mpmath rather than taken from scipy.
"""

import mpmath as mp

from cptpricing.distributions import TruncExponential, TruncNormal

DPS = 40


def _ninv(u):
    return mp.sqrt(2) * mp.erfinv(2 * u - 1)


def _normal(lo, hi, mu, sigma):
    pa, pb = mp.ncdf((lo - mu) / sigma), mp.ncdf((hi - mu) / sigma)
    z = pb - pa
    cdf = lambda x: (mp.ncdf((x - mu) / sigma) - pa) / z
    quantile = lambda p: mu + sigma * _ninv(pa + p * z)
    isf = lambda s: mu + sigma * _ninv(pb - s * z)
    return cdf, quantile, isf


def _exponential(lo, hi, rate, optimistic):
    z = -mp.expm1(-rate * (hi - lo))
    # distance from the favoured end has cdf (1 - exp(-rate d)) / z
    dist = lambda c: -mp.log1p(-c * z) / rate
    if optimistic:
        cdf = lambda x: 1 + mp.expm1(-rate * (hi - x)) / z
        return cdf, (lambda p: hi - dist(1 - p)), (lambda s: hi - dist(s))
    cdf = lambda x: -mp.expm1(-rate * (x - lo)) / z
    return cdf, (lambda p: lo + dist(p)), (lambda s: lo + dist(1 - s))


def mp_functions(dist):
    """(cdf, quantile, isf) of a package distribution, rebuilt from its parameters."""
    lo, hi = mp.mpf(dist.support.lower), mp.mpf(dist.support.upper)
    if isinstance(dist, TruncNormal):
        return _normal(lo, hi, mp.mpf(dist.mu), mp.mpf(dist.sigma))
    if isinstance(dist, TruncExponential):
        return _exponential(lo, hi, mp.mpf(dist.rate), dist.optimistic)
    raise TypeError(f"no oracle for {type(dist).__name__}")


def cpt_utility_weight_space(dist, shift, r, params):
    with mp.workdps(DPS):
        cdf, quantile, isf = mp_functions(dist)
        a, bp, bm, lam = (mp.mpf(v) for v in (params.alpha, params.beta_plus, params.beta_minus, params.lam))
        shift, r = mp.mpf(shift), mp.mpf(r)

        def pi(p):
            return mp.exp(-((-mp.log(p)) ** a)) if p > 0 else mp.mpf(0)

        def pi_inv(w):
            return mp.exp(-((-mp.log(w)) ** (1 / a)))

        f_r = min(max(cdf(r - shift), mp.mpf(0)), mp.mpf(1))
        total = mp.mpf(0)
        if f_r < 1:
            total += mp.quad(lambda w: max(isf(pi_inv(w)) + shift - r, 0) ** bp, [0, pi(1 - f_r)])
        if f_r > 0:
            total -= lam * mp.quad(lambda w: max(r - shift - quantile(pi_inv(w)), 0) ** bm, [0, pi(f_r)])
        return float(total)
