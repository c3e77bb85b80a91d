import json

import pytest

from ctmc.bounds._utils.exceptions import ModelFileError
from ctmc.bounds.model.io import (
    dumps_model,
    load_model,
    loads_model,
    model_from_dict,
    model_hash,
    model_to_dict,
    save_model,
)
from ctmc.bounds.model.processing import example_one
from ctmc.bounds.model.structures import ChainClass, RateFunction


class TestModelFile:
    def test_parse_document(self, model_document) -> None:
        model = loads_model(model_document)
        assert model.chain_class is ChainClass.BATCH_SERVICE
        assert model.S == 3
        assert model.birth[0] == RateFunction(2.0, ((1, 1.0, 0.0),))
        assert model.birth[1] == model.birth[2] == RateFunction(2.0)
        assert model.service_batch[3].harmonics == ((1, 0.0, 0.25),)

    def test_round_trip(self, model_of_each_class, tmp_path) -> None:
        path = save_model(model_of_each_class, tmp_path / "model.json")
        assert load_model(path) == model_of_each_class
        assert model_hash(load_model(path)) == model_hash(model_of_each_class)

    def test_dict_layout(self, two_state_model) -> None:
        assert model_to_dict(two_state_model) == {
            "schema_version": 1,
            "class": "BirthDeath",
            "S": 1,
            "truncated": False,
            "birth": {"0": [2.0]},
            "death": {"1": [3.0]},
        }

    def test_dumps_is_json(self, two_state_model) -> None:
        assert json.loads(dumps_model(two_state_model))["class"] == "BirthDeath"

    def test_hash_changes_with_rates(self) -> None:
        assert model_hash(example_one(5, 3.0)) != model_hash(example_one(5, 3.5))
        assert model_hash(example_one(5, 3.0)) == model_hash(example_one(5, 3.0))


class TestModelFileErrors:
    def test_malformed_json_has_line(self) -> None:
        with pytest.raises(ModelFileError) as err:
            loads_model('{\n  "class": "BirthDeath",\n  "S": 2,,\n}', path="bad.json")
        assert err.value.path == "bad.json"
        assert err.value.line == 3
        assert str(err.value).startswith("bad.json:3: malformed document")

    @pytest.mark.parametrize(
        "replace, needle, line",
        [
            ('"class": "BatchService"', '"class": "Tandem"', 3),
            ('"S": 3', '"S": 3.5', 4),
            ('"truncated": false', '"truncated": "no"', 5),
            ('"birth": {"0": [2.0, [1, 1.0, 0.0]]', '"birth": {"0": [2.0, [0, 1.0, 0.0]]', 6),
            ('"service_batch"', '"service"', 7),
        ],
    )
    def test_error_points_at_offending_line(self, model_document, replace, needle, line) -> None:
        text = model_document.replace(replace, needle)
        with pytest.raises(ModelFileError) as err:
            loads_model(text, path="m.json")
        assert err.value.line == line

    @pytest.mark.parametrize("doc", [[], {"S": 2}, {"class": "BirthDeath"}])
    def test_missing_structure(self, doc) -> None:
        with pytest.raises(ModelFileError) as err:
            model_from_dict(doc)
        assert err.value.line == 1

    def test_missing_file(self, tmp_path) -> None:
        with pytest.raises(ModelFileError) as err:
            load_model(tmp_path / "absent.json")
        assert err.value.path.endswith("absent.json")
