import numpy as np
import pytest

from elastoscatter.models.greens import QuadratureConfig
from elastoscatter.services.cache_service import cache_service
from elastoscatter.services.medium_service import medium_service


@pytest.fixture
def medium():
    """λ=2, μ=1, ω=2（κ_p=1, κ_s=2）"""
    return medium_service.make_medium(2.0, 1.0, 2.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def quadrature():
    return QuadratureConfig()


@pytest.fixture(autouse=True)
def clear_kernel_cache():
    yield
    cache_service.clear()
