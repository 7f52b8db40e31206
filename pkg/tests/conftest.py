import numpy as np
import pytest

from cptpricing.behavior import CertainOption, DynamicReference, RideOffer, StaticReference, UtilityCoefficients
from cptpricing.cpt_core import CptParams
from cptpricing.distributions import SupportInterval, TruncExponential, TruncNormal, TruncPoisson
from cptpricing.scenario import Scenario


@pytest.fixture(scope="session")
def calibration():
    return Scenario.calibration()


def random_distribution(rng, support):
    kind = rng.integers(4)
    if kind == 0:
        return TruncNormal.spanning(support.lower, support.upper)
    if kind == 1:
        return TruncExponential.spanning(support.lower, support.upper, optimistic=True)
    if kind == 2:
        return TruncExponential.spanning(support.lower, support.upper, optimistic=False)
    return TruncPoisson(support, float(rng.uniform(0.5, 6.0)), int(rng.integers(1, 8)))


def random_setup(rng, rational=False):
    """A random (offer, alternative, reference, params) draw near the calibrated regime."""
    lower = float(rng.uniform(-6.0, -2.0))
    support = SupportInterval(lower, lower + float(rng.uniform(0.05, 1.5)))
    b = -float(rng.uniform(0.05, 0.4))
    coeffs = UtilityCoefficients(-0.05, -0.05, -0.05, b, 0.0)
    offer = RideOffer(random_distribution(rng, support), 0.0, coeffs)
    alt = CertainOption(float(rng.uniform(-8.0, -3.0)))
    if rng.random() < 0.5:
        ref = StaticReference(float(rng.uniform(-8.0, -2.0)))
    else:
        ref = DynamicReference(float(rng.uniform(support.lower, support.upper)))
    if rational:
        params = CptParams.rational()
    else:
        params = CptParams(
            alpha=float(rng.uniform(0.4, 1.0)),
            beta_plus=float(rng.uniform(0.5, 1.0)),
            beta_minus=float(rng.uniform(0.5, 1.0)),
            lam=float(rng.uniform(1.0, 3.0)),
        )
    return offer, alt, ref, params


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
