import math
import warnings

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from pencil.bc_matrices import ContextFactory
from pencil.core_types import laplacian, make_elliptic_tuple, tuple_from_standard_root
from pencil.presets import fig1_tuple, fig2left_tuple, scalar_tuple

settings.register_profile(
    "default", max_examples=30, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

TWO_PI = 2.0 * math.pi


@pytest.fixture(autouse=True)
def _quiet_overflow():
    # far-off contour points overflow e^{lambda log z}; that is handled, not an error
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        yield


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def lap2():
    return laplacian(2)


@pytest.fixture(scope="session")
def fig1():
    return fig1_tuple()


@pytest.fixture(scope="session")
def fig2left():
    return fig2left_tuple()


@pytest.fixture(scope="session")
def scalar10():
    return scalar_tuple(10.0)


@pytest.fixture(scope="session")
def perfect_square():
    eye = np.eye(2)
    return make_elliptic_tuple(eye, eye, eye)


@pytest.fixture(scope="session")
def fig1_factory(fig1):
    return ContextFactory(fig1)


@pytest.fixture(scope="session")
def fig2left_factory(fig2left):
    return ContextFactory(fig2left)


@pytest.fixture(scope="session")
def lap2_factory(lap2):
    return ContextFactory(lap2)


def random_sym(rng, n, scale=1.0):
    a = rng.uniform(-1.0, 1.0, (n, n))
    return scale * 0.5 * (a + a.T)


def random_spd(rng, n, shift=0.3):
    g = rng.standard_normal((n, n))
    return g @ g.T / n + shift * np.eye(n)


def random_root_tuple(rng, n, s_scale=1.0):
    return tuple_from_standard_root(random_sym(rng, n, s_scale), random_spd(rng, n))


seeds = st.integers(min_value=0, max_value=2**32 - 1)
ells = st.sampled_from([1, 2, 3])
