"""
Command-line front end.

Subcommands margins, simulate, verify, pauli-demo and joint-state read a JSON
experiment config (or the built-in defaults), apply flag overrides and write
CSV tables and JSON reports under the output directory.

Exit codes: 0 success, 1 failed checks, 2 usage or configuration error,
3 broken internal invariant.
"""
import argparse
import hashlib
import json
import sys
from dataclasses import asdict
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .analysis import gaussian_joint_state, localization_bound, pauli_pair_demo
from .configuration import (
    ExperimentConfig,
    JointStateRequest,
    build_grid,
    build_measure,
    build_region,
    build_state,
)
from .errors import ConfigError, NotJointlyMeasurable, PhaseSpaceError
from .logging_config import get_logger, setup_logging
from .measures import LineMeasure, boundary_mass, mean, variance
from .phasespace import covariant_observable, margin_measures, sample_outcomes
from .povm import distinguish_measures
from .settings_manager import SettingsManager
from .verify import VerifyReport, run_suite

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_INVARIANT = 3

FLOAT_FORMAT = "%.17g"
MAX_REGION_CELLS = 4096


def config_hash(config: ExperimentConfig) -> str:
    canonical = json.dumps(config.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def write_table(path: Path, header: Sequence[str], columns: Sequence[np.ndarray]) -> Path:
    np.savetxt(path, np.column_stack(columns), fmt=FLOAT_FORMAT, delimiter=",", header=",".join(header), comments="")
    logger.info(f"Wrote {path}")
    return path


def write_json(path: Path, payload: dict) -> Path:
    with open(path, "w", encoding="utf-8") as f:
        f.write(json.dumps(payload, indent=2) + "\n")
    logger.info(f"Wrote {path}")
    return path


def _output_dir(config: ExperimentConfig) -> Path:
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _moments(mu: LineMeasure) -> dict:
    return {"mean": mean(mu), "variance": variance(mu), "boundary_mass": boundary_mass(mu)}


def _write_margins(out: Path, prefix: str, rho: LineMeasure, nu: LineMeasure) -> list[Path]:
    return [
        write_table(out / f"{prefix}_rho.csv", ("coordinate", "density"), (rho.coordinates, rho.masses / rho.spacing)),
        write_table(out / f"{prefix}_nu.csv", ("coordinate", "density"), (nu.coordinates, nu.masses / nu.spacing)),
    ]


def cmd_margins(config: ExperimentConfig) -> list[Path]:
    """Write the margin densities ρ, ν of G_T for the configured state T."""
    grid = build_grid(config.grid)
    state = build_state(config.state, grid, config.grid.tail_tolerance)
    rho, nu = margin_measures(state)
    out = _output_dir(config)
    files = _write_margins(out, "margin", rho, nu)

    summary: dict = {
        "n": grid.n,
        "dx": grid.dx,
        "config_hash": config_hash(config),
        "rho": _moments(rho),
        "nu": _moments(nu),
    }
    if config.measure is not None:
        summary["measure_distance"] = distinguish_measures(build_measure(config.measure, grid), rho)
    if config.region is not None:
        region = build_region(config.region, grid)
        if len(region) <= MAX_REGION_CELLS:
            report = localization_bound(covariant_observable(state), region)
            summary["region"] = {"cells": len(region), "norm": report.norm, "below_one": report.below_one}
        else:
            logger.warning(f"Region has {len(region)} cells; skipping its localization norm")
            summary["region"] = {"cells": len(region), "norm": None, "below_one": None}
    files.append(write_json(out / "margins.json", summary))
    return files


def cmd_simulate(config: ExperimentConfig) -> list[Path]:
    """Sample `count` outcomes of G_T in the probe state S (S defaults to T)."""
    grid = build_grid(config.grid)
    generator = build_state(config.state, grid, config.grid.tail_tolerance)
    probe = generator
    if config.probe is not None:
        probe = build_state(config.probe, grid, config.grid.tail_tolerance, path="probe")
    samples = sample_outcomes(covariant_observable(generator), probe, config.count, config.seed)
    out = _output_dir(config)
    table = write_table(out / "samples.csv", ("q", "p"), (grid.positions[samples[:, 0]], grid.momenta[samples[:, 1]]))
    meta = write_json(
        out / "samples.json",
        {
            "seed": config.seed,
            "n": grid.n,
            "dx": grid.dx,
            "count": config.count,
            "config_hash": config_hash(config),
            "version": ExperimentConfig.VERSION,
        },
    )
    return [table, meta]


def cmd_verify(config: ExperimentConfig) -> VerifyReport:
    """Run the verification suite and write verify_report.json."""
    report = run_suite(config)
    out = _output_dir(config)
    write_json(out / "verify_report.json", report.to_dict())
    for result in report.results:
        status = "PASS" if result.passed else "FAIL"
        print(f"{status}  {result.name}  value={result.value!r}  tolerance={result.tolerance!r}")
    for request in report.requests:
        print(f"REQUEST  {json.dumps(request)}")
    return report


def cmd_pauli_demo(config: ExperimentConfig) -> list[Path]:
    """Compare the Gaussian pair φ_{a,±b}: equal margins, different observables."""
    grid = build_grid(config.grid)
    report = pauli_pair_demo(config.pauli.a, config.pauli.b, grid, config.grid.tail_tolerance)
    payload = asdict(report)
    payload.update({"a": config.pauli.a, "b": config.pauli.b, "n": grid.n, "dx": grid.dx})
    print(json.dumps(payload, indent=2))
    return [write_json(_output_dir(config) / "pauli.json", payload)]


def cmd_joint_state(config: ExperimentConfig) -> list[Path]:
    """Construct a state T whose margins have the requested variances.

    Raises:
        NotJointlyMeasurable: After writing the refusal (with its deficit) to joint_state.json.
    """
    request = config.joint_state
    if request is None:
        raise ConfigError("joint_state", "missing section (or pass --var-q and --var-p)")
    grid = build_grid(config.grid)
    out = _output_dir(config)
    payload: dict = {"var_q": request.var_q, "var_p": request.var_p, "n": grid.n, "dx": grid.dx}
    try:
        state = gaussian_joint_state(request.var_q, request.var_p, grid, config.grid.tail_tolerance)
    except NotJointlyMeasurable as e:
        payload.update({"result": "NotJointlyMeasurable", "deficit": e.deficit})
        write_json(out / "joint_state.json", payload)
        raise
    rho, nu = margin_measures(state)
    files = _write_margins(out, "joint", rho, nu)
    payload.update({
        "result": "constructed",
        "rho_variance": variance(rho),
        "nu_variance": variance(nu),
        "purity": state.purity(),
        "rank": state.rank,
    })
    files.append(write_json(out / "joint_state.json", payload))
    return files


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON experiment config")
    common.add_argument("--n", type=int, help="number of lattice points")
    common.add_argument("--dx", type=float, help="position spacing")
    common.add_argument("--seed", type=int, help="random seed")
    common.add_argument("--count", type=int, help="number of simulated outcomes")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument(
        "--dump-config", nargs="?", const="-", metavar="PATH",
        help="write the resolved config (to stdout, or PATH) and exit",
    )
    common.add_argument("--debug", action="store_true", help="debug logging")

    parser = argparse.ArgumentParser(
        prog="jointphasespace",
        description="Position/momentum joint measurement toolkit on a periodic lattice.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("margins", parents=[common], help="write margin densities of G_T")
    sub.add_parser("simulate", parents=[common], help="sample phase-space outcomes")
    sub.add_parser("verify", parents=[common], help="run the verification suite")
    sub.add_parser("pauli-demo", parents=[common], help="Gaussian pair with equal margins")
    joint = sub.add_parser("joint-state", parents=[common], help="construct a state with given margin variances")
    joint.add_argument("--var-q", type=float, help="target position margin variance")
    joint.add_argument("--var-p", type=float, help="target momentum margin variance")
    return parser


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    """Config file (or defaults) with command-line overrides applied and validated."""
    config = SettingsManager(args.config).config if args.config else ExperimentConfig()
    config = config.with_overrides(
        n=args.n, dx=args.dx, seed=args.seed, count=args.count, out_dir=args.out, debug=args.debug
    )
    var_q = getattr(args, "var_q", None)
    var_p = getattr(args, "var_p", None)
    if var_q is not None or var_p is not None:
        base = config.joint_state or JointStateRequest()
        config.joint_state = JointStateRequest(
            var_q=base.var_q if var_q is None else var_q,
            var_p=base.var_p if var_p is None else var_p,
        )
    config.validate()
    return config


def _dump_config(config: ExperimentConfig, target: str) -> None:
    manager = SettingsManager()
    manager.config = config
    if target == "-":
        sys.stdout.write(manager.dumps())
    else:
        manager.save(target)


COMMANDS = {
    "margins": cmd_margins,
    "simulate": cmd_simulate,
    "pauli-demo": cmd_pauli_demo,
    "joint-state": cmd_joint_state,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse arguments, run one subcommand and map the outcome onto an exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE

    try:
        config = load_config(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_USAGE

    setup_logging(debug_mode=config.general.debug_mode, log_file=config.general.log_file)
    logger.debug(f"JointPhaseSpace v{ExperimentConfig.VERSION}, command {args.command}")

    if args.dump_config is not None:
        _dump_config(config, args.dump_config)
        return EXIT_OK

    try:
        if args.command == "verify":
            report = cmd_verify(config)
            if not report.passed:
                for failure in report.failures:
                    print(f"failed check: {failure.name}", file=sys.stderr)
                return EXIT_CHECK_FAILED
            return EXIT_OK
        COMMANDS[args.command](config)
        return EXIT_OK
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except NotJointlyMeasurable as e:
        print(f"not jointly measurable: {e}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    except PhaseSpaceError as e:
        logger.error(f"Invariant violated: {e}")
        return EXIT_INVARIANT
