import pytest

from ctmc.bounds.model.structures import RateFunction


@pytest.fixture(scope="module")
def sin_rate() -> RateFunction:
    return RateFunction(1.0, ((1, 1.0, 0.0),))


@pytest.fixture(scope="module")
def model_document() -> str:
    return """{
  "schema_version": 1,
  "class": "BatchService",
  "S": 3,
  "truncated": false,
  "birth": {"0": [2.0, [1, 1.0, 0.0]], "1": 2.0, "2": [2.0]},
  "service_batch": {"3": [0.5, [1, 0.0, 0.25]]}
}
"""
