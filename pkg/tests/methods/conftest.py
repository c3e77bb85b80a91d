import numpy as np
import pytest

from ctmc.bounds.model.structures import ChainModel


@pytest.fixture(scope="module")
def asymmetric_bd() -> ChainModel:
    return ChainModel.birth_death(2, birth={0: 1.0, 1: 2.0}, death={1: 3.0, 2: 4.0})


@pytest.fixture(scope="module")
def nonergodic_columns_bd() -> ChainModel:
    return ChainModel.birth_death(2, birth={0: 1.0, 1: 10.0}, death={1: 1.0, 2: 1.0})


@pytest.fixture(scope="module")
def grid() -> np.ndarray:
    return np.linspace(0.0, 1.0, 401)
