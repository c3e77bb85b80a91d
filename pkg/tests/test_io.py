import json

import numpy as np
import pandas as pd
import pytest

from ctmc.bounds._utils.exceptions import ModelFileError
from ctmc.bounds.io import (
    FLOAT_FORMAT,
    MANIFEST_NAME,
    load_certificate,
    read_record,
    read_trajectory_csv,
    report_record,
    save_certificate,
    save_report,
    sha256_file,
    summary_table,
    write_manifest,
    write_reduced_csv,
    write_trajectory_csv,
)
from ctmc.bounds.methods.lognorm import decay_parameter_bound, ergodicity_bound
from ctmc.bounds.transient import Trajectory, solve_kolmogorov, validate_certificate


@pytest.fixture(scope="module")
def trajectory(small_example_two) -> Trajectory:
    return solve_kolmogorov(small_example_two, 0, (0.0, 0.5), points=11)


class TestTrajectoryFiles:
    def test_full_table(self, trajectory, tmp_path) -> None:
        path = write_trajectory_csv(trajectory, tmp_path / "trajectory.csv")
        frame = pd.read_csv(path)
        assert frame.columns.tolist() == ["t", *[f"p_{k}" for k in range(7)], "E[X]"]
        assert len(frame) == 11
        restored = read_trajectory_csv(path)
        np.testing.assert_allclose(restored.states, trajectory.states, rtol=1e-11, atol=1e-13)
        np.testing.assert_allclose(restored.times, trajectory.times)

    def test_fixed_float_format(self, trajectory, tmp_path) -> None:
        path = write_trajectory_csv(trajectory, tmp_path / "trajectory.csv")
        second_line = path.read_text().splitlines()[1]
        assert second_line.split(",")[0] == FLOAT_FORMAT % 0.0

    def test_reduced_table(self, trajectory, tmp_path) -> None:
        frame = pd.read_csv(write_reduced_csv(trajectory, tmp_path / "reduced.csv"))
        assert frame.columns.tolist() == ["t", "E[X]", "p_0", "p_3", "p_6"]
        frame = pd.read_csv(write_reduced_csv(trajectory, tmp_path / "reduced.csv", [1, 2]))
        assert frame.columns.tolist() == ["t", "E[X]", "p_1", "p_2"]

    def test_not_a_trajectory(self, tmp_path) -> None:
        path = tmp_path / "other.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(ModelFileError):
            read_trajectory_csv(path)

    def test_output_is_reproducible(self, small_example_two, tmp_path) -> None:
        first = write_trajectory_csv(solve_kolmogorov(small_example_two, 0, (0.0, 0.5), points=11), tmp_path / "a.csv")
        second = write_trajectory_csv(solve_kolmogorov(small_example_two, 0, (0.0, 0.5), points=11), tmp_path / "b.csv")
        assert sha256_file(first) == sha256_file(second)


class TestRecords:
    def test_certificate_round_trip(self, periodic_bd_model, tmp_path) -> None:
        cert = ergodicity_bound(periodic_bd_model)
        restored = load_certificate(save_certificate(cert, tmp_path / "certificate.json"))
        assert restored == cert

    def test_certificate_errors_carry_path(self, tmp_path) -> None:
        path = tmp_path / "certificate.json"
        path.write_text(json.dumps({"schema_version": 7}))
        with pytest.raises(ModelFileError) as err:
            load_certificate(path)
        assert err.value.path == str(path)

    def test_malformed_record(self, tmp_path) -> None:
        path = tmp_path / "bad.json"
        path.write_text('{\n  "a": 1,\n  "b": \n}\n')
        with pytest.raises(ModelFileError) as err:
            read_record(path)
        assert err.value.line == 4
        with pytest.raises(ModelFileError):
            read_record(tmp_path / "missing.json")

    def test_report(self, bd_model, tmp_path) -> None:
        report = validate_certificate(bd_model, decay_parameter_bound(bd_model), points=11)
        record = read_record(save_report(report, tmp_path / "report.json"))
        assert record == json.loads(json.dumps(report_record(report)))
        assert record["schema_version"] == 1
        assert record["passed"] is True


class TestSummaryAndManifest:
    def test_summary_columns(self) -> None:
        frame = summary_table(
            [
                {"method": "lognorm", "rate_mean": 1.0, "constant": 1.0, "norm": "l1", "sharp": True},
                {"method": "diffineq", "status": "refused"},
            ]
        )
        assert frame.columns.tolist() == ["method", "rate_mean", "constant", "norm", "sharp", "status"]
        assert frame["status"].tolist() == ["ok", "refused"]
        assert np.isnan(frame.loc[1, "rate_mean"])

    def test_manifest(self, tmp_path) -> None:
        (tmp_path / "plots").mkdir()
        a = tmp_path / "model.json"
        b = tmp_path / "plots" / "EX_transient.svg"
        a.write_text("{}")
        b.write_text("<svg/>")
        manifest = read_record(write_manifest(tmp_path, [b, a], extra={"example": 2}))
        assert (tmp_path / MANIFEST_NAME).exists()
        assert manifest["example"] == 2
        assert [entry["path"] for entry in manifest["files"]] == ["model.json", "plots/EX_transient.svg"]
        assert manifest["files"][0]["sha256"] == sha256_file(a)
        assert manifest["files"][1]["bytes"] == 6
