"""Shared wave configurations used across the test modules."""

import numpy as np
import pytest

from pwstab.models import Model, WaveParams, reduced_potential
from pwstab.profile import compute_profile, make_orbit, select_well

CUBIC = Model("KDV", (0.0, 0.0, 0.0, 1.0))
HARMONIC = Model("KDV", (0.0,))
EKL_CUBIC = Model("EKL", (0.0, 0.0, 0.0, 1.0))
# quintic flux with det Hess Theta > 0 in the well near v = 0.81
QUINTIC = Model("KDV", (0.0, 0.0, 0.0, 0.9, -0.5, -0.8))
QUARTIC_DEFOCUS = Model("KDV", (0.0, 0.0, 0.0, 0.0, -1.0))


def level_fraction(model, lam, c, fraction, hint=None):
    """Wave parameters with mu a given fraction of the way from well bottom to saddle."""
    p0 = WaveParams(0.0, lam, c)
    well = select_well(reduced_potential(model, p0).W, hint)
    mu = well.depth + fraction * (well.saddle_level - well.depth)
    return WaveParams(mu, lam, c), well.bottom


def cnoidal_points():
    """A spread of cubic KDV waves across levels, multipliers and speeds."""
    pts = []
    for c in (-1.0, -2.0):
        for lam in (0.0, 0.05):
            for fr in (0.1, 0.3, 0.5, 0.7, 0.85):
                pts.append(level_fraction(CUBIC, (lam,), c, fr)[0])
    return pts


def ekl_points():
    return [level_fraction(EKL_CUBIC, (lam1, 0.0), 1.0, fr)[0] for lam1 in (0.0, 0.02) for fr in (0.2, 0.5, 0.8)]


UNSTABLE_PARAMS, UNSTABLE_HINT = level_fraction(QUINTIC, (0.17,), 1.0, 0.7, hint=0.81)


@pytest.fixture(scope="session")
def cubic_point():
    return CUBIC, WaveParams(0.01, (0.0,), -1.0)


@pytest.fixture(scope="session")
def cubic_profile(cubic_point):
    return compute_profile(*cubic_point)


@pytest.fixture(scope="session")
def harmonic_profile():
    return compute_profile(HARMONIC, WaveParams(0.5, (0.0,), -1.0))


@pytest.fixture(scope="session")
def ekl_profile():
    return compute_profile(EKL_CUBIC, WaveParams(0.009, (0.0, 0.0), 1.0))


@pytest.fixture(scope="session")
def unstable_profile():
    orbit = make_orbit(QUINTIC, UNSTABLE_PARAMS, hint=UNSTABLE_HINT)
    return compute_profile(QUINTIC, UNSTABLE_PARAMS, orbit)


@pytest.fixture(scope="session")
def nonhyperbolic_profile():
    return compute_profile(QUARTIC_DEFOCUS, WaveParams(0.1, (0.0,), -1.0))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
