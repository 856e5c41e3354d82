import numpy as np
import pytest

from vacusense.config import default_config
from vacusense.hydraulics import CatheterSpec, ContactState, SyringeDrive, VesselScenario


@pytest.fixture(scope="session")
def config():
    return default_config()


@pytest.fixture(scope="session")
def catheter():
    return CatheterSpec()


@pytest.fixture(scope="session")
def drive():
    return SyringeDrive()


def open_scenario(seed=0, **kwargs):
    return VesselScenario(contact_state=ContactState.OPEN_VESSEL, rng_seed=seed, **kwargs)


def contact_scenario(seed=0, **kwargs):
    return VesselScenario(contact_state=ContactState.CLOT_CONTACT, rng_seed=seed, **kwargs)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def corpus76():
    from vacusense.bench import build_training_corpus

    return build_training_corpus(seed=20240501)


@pytest.fixture(scope="session")
def corpus_model(corpus76):
    from vacusense.svm import train

    return train(corpus76)
