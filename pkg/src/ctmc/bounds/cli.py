"""Command-line front end: bounds, transient solutions, certificate checks and example bundles."""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import warnings
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional, Union

from ctmc.bounds._utils.exceptions import (
    BoundsException,
    HypothesisError,
    InvalidParameterError,
    NumericalError,
)
from ctmc.bounds._utils.utils import custom_formatwarning
from ctmc.bounds._version import __version__
from ctmc.bounds.certificates import BoundCertificate
from ctmc.bounds.io import (
    load_certificate,
    save_certificate,
    save_report,
    summary_table,
    write_manifest,
    write_reduced_csv,
    write_trajectory_csv,
)
from ctmc.bounds.matrices import build_Bstar, dump_csv
from ctmc.bounds.methods.diffineq import EXHAUSTIVE_MAX_S, batch_service_bound, diffineq_bound
from ctmc.bounds.methods.lognorm import decay_parameter_bound, ergodicity_bound
from ctmc.bounds.methods.lyapunov import antisym_offdiag_bound, batch_arrival_bound, birth_death_bound
from ctmc.bounds.model.io import load_model, save_model
from ctmc.bounds.model.processing import ensure_valid, example_one, example_two
from ctmc.bounds.model.structures import ChainClass, ChainModel, RateFunction
from ctmc.bounds.plotting import figure_set, plot_quantity
from ctmc.bounds.transient import find_tstar, solve_kolmogorov, validate_certificate

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_REFUSED = 2
EXIT_NUMERIC = 3

METHODS = ("lognorm", "lyapunov", "diffineq")
EXAMPLE_POINTS_PER_UNIT = 100


@dataclass(frozen=True)
class RunConfig:
    """
    Validated options of one command.

    Examples
    --------
    >>> RunConfig("bound", eps=0.3).validate().eps
    0.3
    >>> RunConfig("bound", eps=1.5).validate()
    Traceback (most recent call last):
    ...
    ctmc.bounds._utils.exceptions.InvalidParameterError: eps must lie in (0, 1), got 1.5.
    """

    command: str
    model_path: Optional[Path] = None
    method: str = "all"
    eps: float = 0.5
    horizon: Optional[tuple[float, float]] = None
    tol: float = 1e-8
    delta: float = 1e-3
    initial: Union[int, str] = 0
    output_dir: Path = Path("out")
    plot: bool = False
    verbose: int = 0
    states: Optional[tuple[int, ...]] = None
    points: int = 601
    certificate_path: Optional[Path] = None
    envelope: Optional[RateFunction] = None
    dump_bstar: Optional[float] = None
    which: tuple[int, ...] = (1, 2)
    S: Optional[int] = None
    m: Optional[float] = None

    def validate(self) -> RunConfig:
        """Check ranges and return ``self``."""
        if self.method not in (*METHODS, "all"):
            raise InvalidParameterError(f"Unknown method {self.method!r}.")
        if not 0.0 < self.eps < 1.0:
            raise InvalidParameterError(f"eps must lie in (0, 1), got {self.eps}.")
        if not self.tol > 0.0:
            raise InvalidParameterError(f"tol must be positive, got {self.tol}.")
        if not self.delta > 0.0:
            raise InvalidParameterError(f"delta must be positive, got {self.delta}.")
        if self.horizon is not None and not self.horizon[1] > self.horizon[0]:
            raise InvalidParameterError(f"Horizon must be increasing, got {self.horizon}.")
        if self.points < 2:
            raise InvalidParameterError("At least two output points are required.")
        if isinstance(self.initial, str) and self.initial != "uniform":
            raise InvalidParameterError(f"Initial state must be an index or 'uniform', got {self.initial!r}.")
        if any(w not in (1, 2) for w in self.which):
            raise InvalidParameterError(f"Examples are 1 and 2, got {self.which}.")
        if self.S is not None and self.S < 1:
            raise InvalidParameterError(f"S must be positive, got {self.S}.")
        if self.m is not None and not self.m > 0.0:
            raise InvalidParameterError(f"m must be positive, got {self.m}.")
        return self


def _parse_initial(text: str) -> Union[int, str]:
    return text if text == "uniform" else int(text)


def _parse_rate(text: str) -> RateFunction:
    try:
        return RateFunction.from_list(json.loads(text))
    except json.JSONDecodeError as err:
        raise argparse.ArgumentTypeError(f"not a rate list: {err.msg}") from err
    except InvalidParameterError as err:
        raise argparse.ArgumentTypeError(err.message) from err


def build_parser() -> argparse.ArgumentParser:
    """
    Argument parser with the ``bound``, ``solve``, ``validate`` and ``examples`` commands.

    Examples
    --------
    >>> ns = build_parser().parse_args(["bound", "--model", "m.json", "--method", "lognorm"])
    >>> ns.command, ns.method
    ('bound', 'lognorm')
    """
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    common.add_argument("--tol", type=float, default=1e-8, help="solver tolerance")
    common.add_argument("--delta", type=float, default=1e-3, help="discrepancy for t*")
    common.add_argument("--eps", type=float, default=0.5, help="template parameter in (0, 1)")
    common.add_argument("--horizon", type=float, nargs=2, metavar=("T0", "T1"))
    common.add_argument("--points", type=int, default=601, help="output grid size")
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = argparse.ArgumentParser(prog="ctmc-bounds", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    bound = sub.add_parser("bound", parents=[common], help="compute convergence certificates")
    bound.add_argument("--model", type=Path, required=True)
    bound.add_argument("--method", choices=[*METHODS, "all"], default="all")
    bound.add_argument("--envelope", type=_parse_rate, help="reference rate as '[c, [k, s, cos], ...]'")
    bound.add_argument("--dump-bstar", type=float, metavar="T", help="also write B*(T) as CSV")

    solve = sub.add_parser("solve", parents=[common], help="integrate the forward Kolmogorov system")
    solve.add_argument("--model", type=Path, required=True)
    solve.add_argument("--initial", type=_parse_initial, default=0, help="state index or 'uniform'")
    solve.add_argument("--states", type=int, nargs="+", help="states of the reduced export")
    solve.add_argument("--plot", action="store_true", help="write SVG plots")

    check = sub.add_parser("validate", parents=[common], help="check a certificate on transient solutions")
    check.add_argument("--model", type=Path, required=True)
    check.add_argument("--certificate", type=Path, required=True)

    examples = sub.add_parser("examples", parents=[common], help="reproduce the worked examples")
    examples.add_argument("--which", type=int, nargs="+", choices=[1, 2], default=[1, 2])
    examples.add_argument("--S", type=int, dest="S")
    examples.add_argument("--m", type=float)
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    """Build and validate a ``RunConfig`` from parsed arguments."""
    return RunConfig(
        command=ns.command,
        model_path=getattr(ns, "model", None),
        method=getattr(ns, "method", "all"),
        eps=ns.eps,
        horizon=None if ns.horizon is None else (float(ns.horizon[0]), float(ns.horizon[1])),
        tol=ns.tol,
        delta=ns.delta,
        initial=getattr(ns, "initial", 0),
        output_dir=ns.out,
        plot=getattr(ns, "plot", False),
        verbose=ns.verbose,
        states=None if getattr(ns, "states", None) is None else tuple(ns.states),
        points=ns.points,
        certificate_path=getattr(ns, "certificate", None),
        envelope=getattr(ns, "envelope", None),
        dump_bstar=getattr(ns, "dump_bstar", None),
        which=tuple(getattr(ns, "which", (1, 2))),
        S=getattr(ns, "S", None),
        m=getattr(ns, "m", None),
    ).validate()


def _first_applicable(attempts: Sequence[Callable[[], BoundCertificate]]) -> BoundCertificate:
    reasons = []
    for attempt in attempts:
        try:
            return attempt()
        except HypothesisError as err:
            reasons.append(err.message)
    raise HypothesisError("; ".join(reasons))


def compute_bound(
    model: ChainModel, method: str, eps: float = 0.5, envelope: Optional[RateFunction] = None
) -> BoundCertificate:
    """
    Certificate of one method, picking the construction that fits the model.

    Raises
    ------
    HypothesisError
        If no construction of the method applies.

    Examples
    --------
    >>> m = ChainModel.birth_death(2, birth={0: 1, 1: 1}, death={1: 1, 2: 1})
    >>> compute_bound(m, "lyapunov").metadata["construction"]
    'squares'
    """
    bd = model.chain_class is ChainClass.BIRTH_DEATH
    if method == "lognorm":
        if bd and model.is_homogeneous:
            return _first_applicable([lambda: decay_parameter_bound(model), lambda: ergodicity_bound(model)])
        return ergodicity_bound(model)
    if method == "lyapunov":
        attempts: list[Callable[[], BoundCertificate]] = []
        if bd and model.is_homogeneous:
            attempts.append(lambda: birth_death_bound(model))
        if model.chain_class is ChainClass.BATCH_ARRIVAL and envelope is None:
            attempts.append(lambda: batch_arrival_bound(model))
        attempts.append(lambda: antisym_offdiag_bound(model, envelope=envelope))
        return _first_applicable(attempts)
    if method == "diffineq":
        attempts = []
        if model.chain_class is ChainClass.BATCH_SERVICE:
            attempts.append(lambda: batch_service_bound(model, eps))
        if model.S <= EXHAUSTIVE_MAX_S:
            attempts.append(lambda: diffineq_bound(model, eps_grid=(eps,)))
        else:
            attempts.append(_too_large(model.S))
        return _first_applicable(attempts)
    raise InvalidParameterError(f"Unknown method {method!r}.")


def _too_large(S: int) -> Callable[[], BoundCertificate]:
    def refuse() -> BoundCertificate:
        raise HypothesisError(f"sign-pattern search is limited to S <= {EXHAUSTIVE_MAX_S}, got S={S}")

    return refuse


def _summary_row(method: str, cert: Optional[BoundCertificate], reason: Optional[str] = None) -> dict[str, Any]:
    if cert is None:
        return {"method": method, "status": f"not applicable: {reason}"}
    return {
        "method": method,
        "rate_mean": cert.mean_rate,
        "constant": cert.constant,
        "norm": cert.norm.value,
        "sharp": cert.sharp,
        "status": "ok",
    }


def cmd_bound(cfg: RunConfig) -> int:
    """Run the selected methods, write their certificates and print the summary."""
    model = ensure_valid(load_model(cfg.model_path))  # type: ignore[arg-type]
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    methods = METHODS if cfg.method == "all" else (cfg.method,)
    rows = []
    applicable = 0
    for method in methods:
        try:
            cert = compute_bound(model, method, cfg.eps, cfg.envelope)
        except HypothesisError as err:
            logger.info("%s not applicable: %s", method, err.message)
            rows.append(_summary_row(method, None, err.message))
            continue
        applicable += 1
        save_certificate(cert, cfg.output_dir / f"certificate_{method}.json")
        rows.append(_summary_row(method, cert))
    table = summary_table(rows)
    table.to_csv(cfg.output_dir / "summary.csv", index=False)
    print(table.to_string(index=False))
    if cfg.dump_bstar is not None:
        dump_csv(build_Bstar(model), cfg.dump_bstar, cfg.output_dir / "bstar.csv")
    return EXIT_OK if applicable else EXIT_REFUSED


def cmd_solve(cfg: RunConfig) -> int:
    """Integrate from the configured initial state and write CSV (and SVG) files."""
    model = ensure_valid(load_model(cfg.model_path))  # type: ignore[arg-type]
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    horizon = cfg.horizon or (0.0, 6.0)
    traj = solve_kolmogorov(model, cfg.initial, horizon, tol=cfg.tol, points=cfg.points)
    write_trajectory_csv(traj, cfg.output_dir / "trajectory.csv")
    states = None if cfg.states is None else list(cfg.states)
    reduced = traj.reduced_frame(states)
    write_reduced_csv(traj, cfg.output_dir / "reduced.csv", states)
    if cfg.plot:
        label = f"X(0)={cfg.initial}"
        for column in reduced.columns[1:]:
            stem = "EX" if column == "E[X]" else column
            plot_quantity({label: traj}, column, cfg.output_dir / f"{stem}.svg", title=column)
    print(f"wrote {traj.times.size} time points to {cfg.output_dir}")
    return EXIT_OK


def cmd_validate(cfg: RunConfig) -> int:
    """Check a certificate file against two transient solutions and write the report."""
    model = ensure_valid(load_model(cfg.model_path))  # type: ignore[arg-type]
    cert = load_certificate(cfg.certificate_path)  # type: ignore[arg-type]
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    report = validate_certificate(
        model, cert, horizon=cfg.horizon, tol=cfg.tol, points=cfg.points, delta=cfg.delta
    )
    save_report(report, cfg.output_dir / "report.json")
    t_star = "n/a" if report.t_star is None else f"{report.t_star:.6g}"
    print(f"{'pass' if report.passed else 'FAIL'}: max violation {report.max_violation:.3e}, t* {t_star}")
    return EXIT_OK if report.passed else EXIT_FAILED


@dataclass(frozen=True)
class ExampleSetup:
    """Worked example: model builder, default size, plotting split and initial states."""

    builder: Callable[[int, float], ChainModel]
    S: int
    m: float
    split: float
    initials: tuple[str, ...]
    envelope: Optional[RateFunction] = None


EXAMPLES: dict[int, ExampleSetup] = {
    1: ExampleSetup(example_one, 199, 90.0, 5.0, ("0",), envelope=RateFunction(2.0, ((1, 1.0, 1.0),))),
    2: ExampleSetup(example_two, 40, 1.0, 14.0, ("0", "S")),
}


def _example_certificate(which: int, model: ChainModel, setup: ExampleSetup, eps: float) -> BoundCertificate:
    if which == 1:
        return antisym_offdiag_bound(model, envelope=setup.envelope)
    return batch_service_bound(model, eps)


def run_example(which: int, cfg: RunConfig) -> tuple[list[Path], bool]:
    """
    Build, bound, solve and validate one worked example.

    Files land in ``<out>/example<which>`` together with ``manifest.json``.
    """
    setup = EXAMPLES[which]
    S = cfg.S or setup.S
    m = cfg.m or setup.m
    out = cfg.output_dir / f"example{which}"
    out.mkdir(parents=True, exist_ok=True)
    model = setup.builder(S, m)
    files = [save_model(model, out / "model.json")]
    cert = _example_certificate(which, model, setup, cfg.eps)
    files.append(save_certificate(cert, out / "certificate.json"))
    initial_gap = cert.diameter(S)
    t_star = find_tstar(cert, initial_gap, cfg.delta)
    split = max(setup.split, t_star)
    points = int(math.ceil((split + 1.0) * EXAMPLE_POINTS_PER_UNIT)) + 1
    transient, limiting = {}, {}
    for initial in setup.initials:
        state = S if initial == "S" else int(initial)
        traj = solve_kolmogorov(model, state, (0.0, split + 1.0), tol=cfg.tol, points=points)
        label = f"X(0)={state}"
        transient[label] = traj.window(0.0, split)
        limiting[label] = traj.window(split, split + 1.0)
        files.append(write_trajectory_csv(traj, out / f"trajectory_X0_{state}.csv"))
        files.append(write_reduced_csv(traj, out / f"reduced_X0_{state}.csv"))
    files.extend(figure_set(transient, limiting, S, out / "plots"))
    report = validate_certificate(
        model, cert, horizon=(0.0, 1.0), tol=cfg.tol, points=201, delta=cfg.delta, initial_gap=initial_gap
    )
    files.append(save_report(report, out / "report.json"))
    extra = {
        "example": which,
        "S": S,
        "m": m,
        "method": cert.method.value,
        "rate_mean": cert.mean_rate,
        "constant": cert.constant,
        "initial_gap": initial_gap,
        "t_star": t_star,
        "split": split,
        "passed": report.passed,
    }
    files.append(write_manifest(out, files, extra))
    print(f"example {which}: t* = {t_star:.6g}, validation {'pass' if report.passed else 'FAIL'}, {len(files)} files")
    return files, report.passed


def cmd_examples(cfg: RunConfig) -> int:
    """Generate the artifact bundle of every requested example."""
    passed = True
    for which in cfg.which:
        _, ok = run_example(which, cfg)
        passed = passed and ok
    return EXIT_OK if passed else EXIT_FAILED


COMMANDS: dict[str, Callable[[RunConfig], int]] = {
    "bound": cmd_bound,
    "solve": cmd_solve,
    "validate": cmd_validate,
    "examples": cmd_examples,
}


def _configure_logging(verbose: int) -> None:
    level = logging.WARNING if verbose <= 0 else (logging.INFO if verbose == 1 else logging.DEBUG)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    warnings.formatwarning = custom_formatwarning


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Entry point; returns the process exit code.

    ``0`` on success, ``1`` when a certificate check fails, ``2`` when a model,
    file or parameter is refused and ``3`` on a numerical failure.
    """
    parser = build_parser()
    ns = parser.parse_args(argv)
    _configure_logging(ns.verbose)
    try:
        cfg = config_from_args(ns)
        return COMMANDS[cfg.command](cfg)
    except NumericalError as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    except BoundsException as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_REFUSED
