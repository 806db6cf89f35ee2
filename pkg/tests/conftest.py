import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from nsrps.sources import MarkovModel, generate  # noqa: E402

MU_SEED, NU_SEED = 1, 2


@pytest.fixture(scope="session")
def order5_models():
    return MarkovModel.markov5(MU_SEED), MarkovModel.markov5(NU_SEED)


@pytest.fixture(scope="session")
def order5_samples(order5_models):
    mu, nu = order5_models
    return generate(mu, 10**6, 11), generate(nu, 10**6, 12)
