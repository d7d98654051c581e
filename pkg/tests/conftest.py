import numpy as np
import pytest

from noisy_ica_kit.synth import SourceSpec, generate_dataset, make_model


def noisy_data(sources, k, rho, n, seed):
    """Model plus dataset drawn with seed-derived generators."""
    if isinstance(sources, SourceSpec):
        sources = [sources] * k
    model = make_model(k, rho, sources, seed)
    X = generate_dataset(model, n, np.random.default_rng([seed, 99]))
    return model, X


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def uniform3():
    return noisy_data(SourceSpec.uniform(), 3, 0.1, 20_000, 11)
