import numpy as np
import pytest

from deductree import tensor
from deductree.model import HyperParams, ModelParams, init_params, param_schema
from deductree.rng import Rng
from deductree.synth import memory_corpus

# every op asserts finiteness throughout the suite
tensor.DEBUG_CHECKS = True

SMALL = dict(feature_dim=8, hidden_dim=16, heads=2)


@pytest.fixture(scope="session")
def corpus():
    return memory_corpus(seed=5)


@pytest.fixture
def small_hyper():
    return HyperParams(**SMALL)


@pytest.fixture
def small_params(small_hyper):
    return init_params(small_hyper, Rng(1))


def zero_params(hyper: HyperParams) -> ModelParams:
    return ModelParams(hyper, {name: np.zeros(shape)
                               for name, shape in param_schema(hyper)})
