"""Module for writing trajectories, certificates, reports and bundle manifests."""

from __future__ import annotations

import hashlib
import json
from collections.abc import Iterable, Mapping
from pathlib import Path
from typing import Any, Optional, Union

import pandas as pd

from ctmc.bounds._utils.exceptions import ModelFileError
from ctmc.bounds.certificates import BoundCertificate
from ctmc.bounds.transient import ConvergenceReport, Trajectory

REPORT_SCHEMA_VERSION = 1
FLOAT_FORMAT = "%.12e"
MANIFEST_NAME = "manifest.json"

PathLike = Union[str, Path]


def write_trajectory_csv(traj: Trajectory, path: PathLike) -> Path:
    """
    Write ``t, p_0..p_S, E[X]`` with a fixed float format.

    Examples
    --------
    >>> import tempfile, pathlib
    >>> import numpy as np
    >>> traj = Trajectory(np.array([0.0]), np.array([[1.0, 0.0]]), 0, 1e-8)
    >>> with tempfile.TemporaryDirectory() as tmp:
    ...     out = write_trajectory_csv(traj, pathlib.Path(tmp) / "traj.csv")
    ...     out.read_text().splitlines()[0]
    't,p_0,p_1,E[X]'
    """
    path = Path(path)
    traj.to_frame().to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path


def write_reduced_csv(traj: Trajectory, path: PathLike, states: Optional[list[int]] = None) -> Path:
    """Write ``t, E[X]`` and the probabilities of ``states``."""
    path = Path(path)
    traj.reduced_frame(states).to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path


def read_trajectory_csv(path: PathLike, tolerance: float = 0.0) -> Trajectory:
    """
    Read a file written by ``write_trajectory_csv``.

    Raises
    ------
    ModelFileError
        If the columns do not form a trajectory table.
    """
    path = Path(path)
    frame = pd.read_csv(path)
    columns = [c for c in frame.columns if c.startswith("p_")]
    if "t" not in frame.columns or not columns:
        raise ModelFileError("not a trajectory table", path=str(path), line=1)
    return Trajectory(frame["t"].to_numpy(), frame[columns].to_numpy(), "file", tolerance, "file")


def dumps_record(record: Mapping[str, Any]) -> str:
    """
    Deterministic JSON text of a record.

    Examples
    --------
    >>> dumps_record({"a": 1.5})
    '{\\n  "a": 1.5\\n}\\n'
    """
    return json.dumps(record, indent=2, allow_nan=True) + "\n"


def write_record(record: Mapping[str, Any], path: PathLike) -> Path:
    path = Path(path)
    path.write_text(dumps_record(record), encoding="utf-8")
    return path


def read_record(path: PathLike) -> dict[str, Any]:
    """
    Read a JSON record.

    Raises
    ------
    ModelFileError
        If the file cannot be read or parsed.
    """
    path = Path(path)
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except OSError as err:
        raise ModelFileError(f"cannot read file: {err.strerror}", path=str(path)) from err
    except json.JSONDecodeError as err:
        raise ModelFileError(f"malformed document: {err.msg}", path=str(path), line=err.lineno) from err


def save_certificate(cert: BoundCertificate, path: PathLike) -> Path:
    return write_record(cert.to_record(), path)


def load_certificate(path: PathLike) -> BoundCertificate:
    """Read a certificate file; schema errors carry the path."""
    record = read_record(path)
    try:
        return BoundCertificate.from_record(record)
    except ModelFileError as err:
        raise ModelFileError(err.message, path=str(path)) from err


def report_record(report: ConvergenceReport) -> dict[str, Any]:
    return {"schema_version": REPORT_SCHEMA_VERSION, **report.to_record()}


def save_report(report: ConvergenceReport, path: PathLike) -> Path:
    return write_record(report_record(report), path)


def summary_table(rows: Iterable[Mapping[str, Any]]) -> pd.DataFrame:
    """
    Table of method results with one row per method.

    Examples
    --------
    >>> summary_table([{"method": "lognorm", "rate_mean": 1.0, "constant": 1.0, "norm": "l1", "sharp": True}])
        method  rate_mean  constant norm  sharp status
    0  lognorm        1.0       1.0   l1   True     ok
    """
    columns = ["method", "rate_mean", "constant", "norm", "sharp", "status"]
    frame = pd.DataFrame([{"status": "ok", **row} for row in rows])
    return frame.reindex(columns=columns)


def sha256_file(path: PathLike) -> str:
    digest = hashlib.sha256()
    with Path(path).open("rb") as handle:
        for block in iter(lambda: handle.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


def _relative(item: Path, root: Path) -> str:
    try:
        return item.relative_to(root).as_posix()
    except ValueError:
        return item.as_posix()


def write_manifest(directory: PathLike, files: Iterable[PathLike], extra: Optional[Mapping[str, Any]] = None) -> Path:
    """
    List every file of a bundle with its size and SHA-256 checksum.

    Examples
    --------
    >>> import tempfile, pathlib
    >>> with tempfile.TemporaryDirectory() as tmp:
    ...     _ = (pathlib.Path(tmp) / "a.txt").write_text("x")
    ...     manifest = read_record(write_manifest(tmp, [pathlib.Path(tmp) / "a.txt"]))
    >>> manifest["files"][0]["path"], manifest["files"][0]["bytes"]
    ('a.txt', 1)
    """
    root = Path(directory)
    entries = []
    for item in sorted(Path(f) for f in files):
        entries.append(
            {
                "path": _relative(item, root),
                "bytes": item.stat().st_size,
                "sha256": sha256_file(item),
            }
        )
    record = {"schema_version": REPORT_SCHEMA_VERSION, **(extra or {}), "files": entries}
    return write_record(record, root / MANIFEST_NAME)
