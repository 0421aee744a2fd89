import numpy as np
import pytest

from sideband_sim import EmitterParams


@pytest.fixture
def emitter():
    """Default rates, no spectral diffusion."""
    return EmitterParams(nu_gamma=13.3, nu_phi=0.0, sd_fwhm=0.0)


@pytest.fixture
def emitter_sd():
    """Default rates with the calibrated spectral-diffusion width."""
    return EmitterParams(nu_gamma=13.3, nu_phi=0.0)


@pytest.fixture
def no_decay():
    return EmitterParams(nu_gamma=1e-12, nu_phi=0.0, sd_fwhm=0.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)
