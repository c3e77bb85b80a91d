import numpy as np
import pytest

from ctmc.bounds.model.processing import pure_batch_service, uniform_batch_arrival
from ctmc.bounds.model.structures import ChainModel, RateFunction

# Import doctest fixtures for use in docstring examples
from tests import doctest_fixtures


@pytest.fixture(autouse=True)
def add_doctest_fixtures(doctest_namespace):
    """
    Add doctest fixtures to the doctest namespace.

    Sample models and numpy are injected into the namespace of all doctests
    collected under ``tests/``.
    """
    doctest_namespace["np"] = np
    doctest_namespace["get_sample_birth_death"] = doctest_fixtures.get_sample_birth_death
    doctest_namespace["get_random_birth_death"] = doctest_fixtures.get_random_birth_death
    doctest_namespace["get_periodic_birth_death"] = doctest_fixtures.get_periodic_birth_death
    doctest_namespace["get_small_example_one"] = doctest_fixtures.get_small_example_one
    doctest_namespace["get_small_example_two"] = doctest_fixtures.get_small_example_two
    doctest_namespace["SAMPLE_RATE"] = doctest_fixtures.SAMPLE_RATE
    doctest_namespace["SAMPLE_STATES"] = doctest_fixtures.SAMPLE_STATES


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture(scope="module")
def bd_model() -> ChainModel:
    return doctest_fixtures.get_sample_birth_death()


@pytest.fixture(scope="module")
def two_state_model() -> ChainModel:
    return ChainModel.birth_death(1, birth={0: 2.0}, death={1: 3.0})


@pytest.fixture(scope="module")
def periodic_bd_model() -> ChainModel:
    return doctest_fixtures.get_periodic_birth_death()


@pytest.fixture(scope="module")
def uniform_batch_model() -> ChainModel:
    return uniform_batch_arrival(3, 1.0, [1.0, 2.0, 3.0])


@pytest.fixture(scope="module")
def small_example_one() -> ChainModel:
    return doctest_fixtures.get_small_example_one()


@pytest.fixture(scope="module")
def small_example_two() -> ChainModel:
    return doctest_fixtures.get_small_example_two()


@pytest.fixture(scope="module")
def batch_service_model() -> ChainModel:
    return pure_batch_service(4, RateFunction(2.0, ((1, 1.0, 0.0),)), 0.1)


@pytest.fixture(scope="function", params=["BirthDeath", "BatchArrival", "BatchService", "BatchBoth"])
def model_of_each_class(request) -> ChainModel:
    periodic = RateFunction(2.0, ((1, 1.0, 0.5),))
    if request.param == "BirthDeath":
        return ChainModel.birth_death(4, birth={i: 1.0 + i for i in range(4)}, death={i: periodic for i in range(1, 5)})
    if request.param == "BatchArrival":
        return ChainModel.batch_arrival(
            4, arrivals={1: periodic, 2: 0.5, 3: 0.25}, death={i: 2.0 * i for i in range(1, 5)}
        )
    if request.param == "BatchService":
        return ChainModel.batch_service(4, birth={i: periodic for i in range(4)}, services={1: 3.0, 2: 1.0, 4: 0.5})
    return ChainModel.batch_both(4, arrivals={1: 1.0, 3: periodic}, services={1: 2.0, 2: periodic, 4: 0.3})
