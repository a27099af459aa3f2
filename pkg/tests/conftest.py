import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from spheresgd import DiagonalModel

# deterministic property runs; network-free CI has no use for flaky shrinking
settings.register_profile(
    "suite",
    max_examples=50,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


def random_diag_model(rng: np.random.Generator, max_dim: int = 200):
    """Random spectrum/residual/noise triple plus an admissible step size.

    Returns (model, eta0, kappa2) with eta0 <= min{1/kappa2, 1/lambda_1} so
    every bound's precondition holds.
    """
    dim = int(rng.integers(2, max_dim + 1))
    lam = np.sort(np.exp(rng.uniform(np.log(1e-6), 0.0, dim)))[::-1]
    theta = rng.normal(size=dim) * rng.uniform(0.1, 2.0)
    sigma = float(rng.choice([0.0, 0.5, 1.0]))
    kappa2 = float(lam.sum() * rng.uniform(1.0, 3.0))
    model = DiagonalModel(lambdas=lam, theta=theta, sigma=sigma)
    eta0 = float(rng.uniform(0.05, 0.95) * min(1.0 / kappa2, 1.0 / lam[0]))
    return model, eta0, kappa2


@pytest.fixture
def rng():
    return np.random.default_rng(20260814)
