"""Module for static SVG line plots of trajectories."""

from __future__ import annotations

from collections.abc import Mapping
from pathlib import Path
from typing import Optional, Union

import matplotlib as mpl
import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from ctmc.bounds._utils.exceptions import InvalidParameterError
from ctmc.bounds.transient import Trajectory, expected_value

SVG_METADATA = {"Date": None, "Creator": "ctmc-bounds"}


def quantity_values(traj: Trajectory, quantity: str) -> np.ndarray:
    """
    Series of ``E[X]`` or ``p_k`` along a trajectory.

    Examples
    --------
    >>> traj = Trajectory(np.array([0.0, 1.0]), np.array([[1.0, 0.0], [0.5, 0.5]]), 0, 1e-8)
    >>> quantity_values(traj, "p_1").tolist(), quantity_values(traj, "E[X]").tolist()
    ([0.0, 0.5], [0.0, 0.5])
    """
    if quantity == "E[X]":
        return expected_value(traj).to_numpy()
    if quantity.startswith("p_") and quantity[2:].isdigit():
        k = int(quantity[2:])
        if k > traj.S:
            raise InvalidParameterError(f"State {k} outside 0..{traj.S}.")
        return traj.states[:, k]
    raise InvalidParameterError(f"Unknown quantity {quantity!r}; use 'E[X]' or 'p_k'.")


def plot_quantity(
    trajectories: Mapping[str, Trajectory],
    quantity: str,
    path: Union[str, Path],
    title: Optional[str] = None,
) -> Path:
    """
    Write one SVG with ``quantity`` against time for every labelled trajectory.

    Parameters
    ----------
    trajectories : Mapping[str, Trajectory]
        Curves keyed by legend label.
    quantity : str
        ``"E[X]"`` or ``"p_k"``.
    path : str or Path
        Output file.
    title : str, optional
        Axes title.

    Returns
    -------
    Path
        Written file.
    """
    if not trajectories:
        raise InvalidParameterError("Nothing to plot.")
    path = Path(path)
    with mpl.rc_context({"svg.hashsalt": "ctmc-bounds", "svg.fonttype": "none"}):
        fig = Figure(figsize=(6.4, 4.0))
        FigureCanvasAgg(fig)
        ax = fig.add_subplot()
        for label, traj in trajectories.items():
            ax.plot(traj.times, quantity_values(traj, quantity), label=label, linewidth=1.2)
        ax.set_xlabel("t")
        ax.set_ylabel(quantity)
        if title:
            ax.set_title(title)
        ax.grid(which="both", linestyle=":")
        if len(trajectories) > 1:
            ax.legend()
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata=SVG_METADATA)
    return path


def figure_set(
    transient: Mapping[str, Trajectory],
    limiting: Mapping[str, Trajectory],
    S: int,
    directory: Union[str, Path],
    prefix: str = "",
) -> list[Path]:
    """
    Plots of ``E[X]``, ``p_0``, ``p_{S//2}`` and ``p_S`` over the transient and the limiting windows.

    Returns
    -------
    list of Path
        Eight SVG files.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for quantity in ("E[X]", "p_0", f"p_{S // 2}", f"p_{S}"):
        stem = "EX" if quantity == "E[X]" else quantity
        for window, curves in (("transient", transient), ("limiting", limiting)):
            written.append(
                plot_quantity(curves, quantity, directory / f"{prefix}{stem}_{window}.svg", title=f"{quantity}, {window}")
            )
    return written
