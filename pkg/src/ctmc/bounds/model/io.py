"""Module for reading and writing chain model files."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any, Optional, Union

from ctmc.bounds._utils.exceptions import BoundsException, ModelFileError
from ctmc.bounds.model.structures import RATE_FAMILIES, ChainClass, ChainModel, RateFunction

MODEL_SCHEMA_VERSION = 1


def model_to_dict(model: ChainModel) -> dict[str, Any]:
    """
    Transform a model into its file representation.

    Parameters
    ----------
    model : ChainModel
        Model to serialise.

    Returns
    -------
    dict
        Dictionary with keys ``schema_version``, ``class``, ``S``,
        ``truncated`` and one table per populated rate family.

    Examples
    --------
    >>> m = ChainModel.birth_death(1, birth={0: 2}, death={1: 3})
    >>> model_to_dict(m)["birth"]
    {'0': [2.0]}
    """
    data: dict[str, Any] = {
        "schema_version": MODEL_SCHEMA_VERSION,
        "class": model.chain_class.value,
        "S": model.S,
        "truncated": model.truncation_of_infinite,
    }
    for family in RATE_FAMILIES:
        table = getattr(model, family)
        if table:
            data[family] = {str(key): rate.as_list() for key, rate in table.items()}
    return data


def _line_of(text: Optional[str], needle: str) -> Optional[int]:
    if not text:
        return None
    for number, line in enumerate(text.splitlines(), start=1):
        if needle in line:
            return number
    return None


def model_from_dict(data: Any, text: Optional[str] = None, path: Optional[str] = None) -> ChainModel:
    """
    Build a model from its file representation.

    Parameters
    ----------
    data : dict
        Parsed document.
    text : str, optional
        Raw document, used to attach line numbers to errors.
    path : str, optional
        File name used in error messages.

    Returns
    -------
    ChainModel
        The model.

    Raises
    ------
    ModelFileError
        If a key is missing or a value has the wrong shape.

    Examples
    --------
    >>> doc = {"class": "BirthDeath", "S": 1, "truncated": False, "birth": {"0": [2]}, "death": {"1": 3}}
    >>> model_from_dict(doc).death[1].constant
    3.0
    """
    if not isinstance(data, dict):
        raise ModelFileError("model document must be a mapping", path=path, line=1)
    for key in ("class", "S"):
        if key not in data:
            raise ModelFileError(f"missing key '{key}'", path=path, line=1)
    try:
        chain_class = ChainClass(data["class"])
    except ValueError as err:
        line = _line_of(text, '"class"')
        raise ModelFileError(f"unknown class {data['class']!r}", path=path, line=line) from err
    S = data["S"]
    if not isinstance(S, int) or isinstance(S, bool):
        raise ModelFileError(f"S must be an integer, got {S!r}", path=path, line=_line_of(text, '"S"'))
    truncated = data.get("truncated", False)
    if not isinstance(truncated, bool):
        raise ModelFileError("truncated must be true or false", path=path, line=_line_of(text, '"truncated"'))
    unknown = set(data) - {"schema_version", "class", "S", "truncated", *RATE_FAMILIES}
    if unknown:
        name = sorted(unknown)[0]
        raise ModelFileError(f"unknown key '{name}'", path=path, line=_line_of(text, f'"{name}"'))
    tables: dict[str, dict[int, RateFunction]] = {}
    for family in RATE_FAMILIES:
        raw = data.get(family, {})
        if not isinstance(raw, dict):
            raise ModelFileError(f"{family} must be a table", path=path, line=_line_of(text, f'"{family}"'))
        table = {}
        for key, value in raw.items():
            try:
                table[int(key)] = RateFunction.from_list(value)
            except (ValueError, BoundsException) as err:
                line = _line_of(text, f'"{family}"')
                raise ModelFileError(f"{family}[{key}]: {err}", path=path, line=line) from err
        tables[family] = table
    return ChainModel(chain_class, S, truncation_of_infinite=truncated, **tables)


def dumps_model(model: ChainModel) -> str:
    """
    Serialise a model to text.

    Examples
    --------
    >>> m = ChainModel.birth_death(1, birth={0: 2}, death={1: 3})
    >>> loads_model(dumps_model(m)) == m
    True
    """
    return json.dumps(model_to_dict(model), indent=2, sort_keys=False) + "\n"


def loads_model(text: str, path: Optional[str] = None) -> ChainModel:
    """
    Parse a model from text.

    Raises
    ------
    ModelFileError
        If the document is not valid JSON or not a valid model.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise ModelFileError(f"malformed document: {err.msg}", path=path, line=err.lineno) from err
    return model_from_dict(data, text=text, path=path)


def load_model(path: Union[str, Path]) -> ChainModel:
    """Read a model file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as err:
        raise ModelFileError(f"cannot read model file: {err.strerror}", path=str(path)) from err
    return loads_model(text, path=str(path))


def save_model(model: ChainModel, path: Union[str, Path]) -> Path:
    """Write a model file and return its path."""
    path = Path(path)
    path.write_text(dumps_model(model), encoding="utf-8")
    return path


def model_hash(model: ChainModel) -> str:
    """
    Digest of the canonical model text, used to pair certificates with models.

    Examples
    --------
    >>> m = ChainModel.birth_death(1, birth={0: 2}, death={1: 3})
    >>> len(model_hash(m))
    64
    """
    canonical = json.dumps(model_to_dict(model), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
