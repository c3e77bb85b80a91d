import numpy as np
import pytest

from ctmc.bounds._utils.exceptions import InvalidParameterError
from ctmc.bounds.plotting import figure_set, plot_quantity, quantity_values
from ctmc.bounds.transient import Trajectory, solve_kolmogorov


@pytest.fixture(scope="module")
def trajectories(small_example_two) -> dict[str, Trajectory]:
    return {
        "X(0)=0": solve_kolmogorov(small_example_two, 0, (0.0, 1.0), points=21),
        "X(0)=S": solve_kolmogorov(small_example_two, small_example_two.S, (0.0, 1.0), points=21),
    }


class TestQuantityValues:
    def test_values(self, trajectories) -> None:
        traj = trajectories["X(0)=S"]
        assert quantity_values(traj, "p_6")[0] == 1.0
        assert quantity_values(traj, "E[X]")[0] == pytest.approx(6.0)

    @pytest.mark.parametrize("quantity", ["p_7", "q_1", "EX", "p_"])
    def test_unknown(self, trajectories, quantity) -> None:
        with pytest.raises(InvalidParameterError):
            quantity_values(trajectories["X(0)=0"], quantity)


class TestPlots:
    def test_svg_written(self, trajectories, tmp_path) -> None:
        path = plot_quantity(trajectories, "E[X]", tmp_path / "EX.svg", title="E[X], transient")
        text = path.read_text()
        assert text.lstrip().startswith("<?xml")
        assert "<svg" in text

    def test_deterministic_output(self, trajectories, tmp_path) -> None:
        first = plot_quantity(trajectories, "p_0", tmp_path / "a.svg").read_bytes()
        second = plot_quantity(trajectories, "p_0", tmp_path / "b.svg").read_bytes()
        assert first == second

    def test_nothing_to_plot(self, tmp_path) -> None:
        with pytest.raises(InvalidParameterError):
            plot_quantity({}, "E[X]", tmp_path / "empty.svg")

    def test_figure_set(self, trajectories, tmp_path) -> None:
        limiting = {label: traj.window(0.5, 1.0) for label, traj in trajectories.items()}
        written = figure_set(trajectories, limiting, 6, tmp_path / "plots", prefix="ex2_")
        names = sorted(path.name for path in written)
        expected = sorted(
            f"ex2_{stem}_{window}.svg" for stem in ("EX", "p_0", "p_3", "p_6") for window in ("transient", "limiting")
        )
        assert names == expected
        assert all(path.stat().st_size > 0 for path in written)
        assert np.all([path.parent == tmp_path / "plots" for path in written])
