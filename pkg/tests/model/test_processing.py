import pytest

from ctmc.bounds._utils.exceptions import InvalidParameterError, ModelValidationError
from ctmc.bounds.model.processing import (
    ensure_valid,
    example_one,
    example_two,
    pure_batch_service,
    uniform_batch_arrival,
    truncation_sweep,
    validate,
)
from ctmc.bounds.model.structures import ChainClass, ChainModel, RateFunction


class TestValidate:
    def test_valid_models(self, model_of_each_class) -> None:
        assert validate(model_of_each_class) == []
        assert ensure_valid(model_of_each_class) is model_of_each_class

    @pytest.mark.parametrize(
        "model, violation",
        [
            (ChainModel.birth_death(0, birth={}, death={}), "state space too small: S=0"),
            (ChainModel.birth_death(2, birth={2: 1.0}, death={1: 1.0}), "state out of range: birth[2]"),
            (ChainModel.birth_death(2, birth={0: 1.0}, death={0: 1.0}), "state out of range: death[0]"),
            (ChainModel.batch_arrival(2, arrivals={0: 1.0}, death={1: 1.0}), "batch size below 1: arrival_batch[0]"),
            (ChainModel.batch_service(2, birth={0: 1.0}, services={3: 1.0}), "batch size exceeds S: service_batch[3]"),
            (
                ChainModel.birth_death(2, birth={0: RateFunction(0.5, ((1, 1.0, 0.0),))}, death={1: 1.0}),
                "negative intensity: birth[0]",
            ),
            (ChainModel.birth_death(2, birth={0: float("inf")}, death={1: 1.0}), "non-finite intensity: birth[0]"),
            (
                ChainModel(ChainClass.BIRTH_DEATH, 2, birth={0: 1.0}, service_batch={1: 1.0}),
                "unexpected rate family service_batch for class BirthDeath",
            ),
        ],
    )
    def test_violations(self, model, violation) -> None:
        assert violation in validate(model)
        with pytest.raises(ModelValidationError) as err:
            ensure_valid(model)
        assert violation in err.value.violations

    def test_touching_zero_is_allowed(self, sin_rate) -> None:
        assert validate(ChainModel.birth_death(1, birth={0: sin_rate}, death={1: 1.0})) == []

    def test_truncation_warns(self) -> None:
        model = ChainModel.birth_death(1, birth={0: 1.0}, death={1: 1.0}, truncated=True)
        with pytest.warns(UserWarning, match="truncation"):
            ensure_valid(model)


class TestExamples:
    def test_example_one(self) -> None:
        model = example_one()
        assert model.S == 199
        assert model.chain_class is ChainClass.BATCH_ARRIVAL
        assert model.arrival_batch[1] == RateFunction(1.0, ((1, 1.0, 0.0),))
        assert model.arrival_batch[199] == RateFunction(2.0, ((1, 1.0, 1.0),))
        assert model.death[5] == RateFunction(8100.0, ((1, 0.0, 8100.0),))
        assert validate(model) == []

    def test_example_two(self) -> None:
        model = example_two(m=2.0)
        assert model.S == 40
        assert model.chain_class is ChainClass.BATCH_SERVICE
        assert list(model.service_batch) == [40]
        assert model.service_batch[40] == RateFunction(0.5, ((1, 0.0, 0.25),))
        assert model.birth[39] == RateFunction(20.0, ((1, 10.0, 0.0),))
        assert validate(model) == []

    def test_uniform_batch_arrival(self, uniform_batch_model) -> None:
        assert 1 not in uniform_batch_model.arrival_batch
        assert [uniform_batch_model.death[k].constant for k in (1, 2, 3)] == [1.0, 2.0, 3.0]
        with pytest.raises(InvalidParameterError):
            uniform_batch_arrival(3, 1.0, [1.0, 2.0])

    def test_pure_batch_service(self) -> None:
        model = pure_batch_service(3, 2.0, 0.5)
        assert sorted((i, j) for i, j, _ in model.transitions()) == [(0, 1), (1, 2), (2, 3), (3, 0)]


def test_truncation_sweep():
    sweep = truncation_sweep(example_two, [2, 5, 3], lambda model: sorted(model.service_batch))
    assert sweep == [(2, [2]), (5, [5]), (3, [3])]
