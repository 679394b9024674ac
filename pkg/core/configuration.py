"""
Experiment configuration.

Nested dataclasses mirror the sections of the JSON config file. Every section
can validate itself and round-trips through to_dict/from_dict; the build_*
helpers turn validated specs into lattice, operator, measure and region objects.
"""
import math
from dataclasses import dataclass, field, replace
from typing import Any, ClassVar, Optional

import numpy as np

from .errors import ConfigError, GridError, PhaseSpaceError
from .lattice import DEFAULT_TAIL_TOLERANCE, MOMENTUM, POSITION, GridSpec, StateVector, gaussian_state, make_grid
from .logging_config import get_logger
from .measures import GridSet, LineMeasure, dirac, from_masses, gaussian_measure, interval
from .operators import DensityOperator
from .phasespace import PhaseRegion

logger = get_logger(__name__)

STATE_KINDS = ("gaussian", "mixture", "table", "maximally_mixed")
MEASURE_KINDS = ("dirac", "gaussian_density", "table")
REGION_KINDS = ("cells", "intervals")


def _section(data: Any, path: str) -> dict:
    if not isinstance(data, dict):
        raise ConfigError(path, f"expected an object, got {type(data).__name__}")
    return data


def _check_keys(data: dict, allowed: tuple[str, ...], path: str) -> None:
    for key in data:
        if key not in allowed:
            raise ConfigError(f"{path}.{key}" if path else key, "unknown key")


def _number(data: dict, key: str, path: str, default: float) -> float:
    value = data.get(key, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}.{key}", f"expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(f"{path}.{key}", f"expected a finite number, got {value!r}")
    return value


def _integer(data: dict, key: str, path: str, default: int) -> int:
    value = data.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}.{key}" if path else key, f"expected an integer, got {value!r}")
    return value


def _flag(data: dict, key: str, path: str, default: bool) -> bool:
    value = data.get(key, default)
    if not isinstance(value, bool):
        raise ConfigError(f"{path}.{key}", f"expected true or false, got {value!r}")
    return value


def _require(data: dict, key: str, path: str) -> Any:
    if key not in data:
        raise ConfigError(f"{path}.{key}", "missing required field")
    return data[key]


@dataclass
class GeneralSettings:
    debug_mode: bool = False
    log_file: Optional[str] = None

    def validate(self) -> None:
        if self.log_file is not None and not self.log_file:
            raise ConfigError("general.log_file", "must be a path or null")

    def to_dict(self) -> dict:
        return {"debug_mode": self.debug_mode, "log_file": self.log_file}

    @classmethod
    def from_dict(cls, data: Any) -> "GeneralSettings":
        data = _section(data, "general")
        _check_keys(data, ("debug_mode", "log_file"), "general")
        log_file = data.get("log_file")
        if log_file is not None and not isinstance(log_file, str):
            raise ConfigError("general.log_file", f"expected a string, got {log_file!r}")
        return cls(debug_mode=_flag(data, "debug_mode", "general", False), log_file=log_file)


@dataclass
class GridSettings:
    """Lattice size, spacing and the tail tolerance applied to Gaussian states."""
    n: int = 1024
    dx: float = 0.05
    tail_tolerance: float = DEFAULT_TAIL_TOLERANCE

    def validate(self) -> None:
        if self.n < 4 or self.n % 2:
            raise ConfigError("grid.n", f"must be an even integer >= 4, got {self.n}")
        if not self.dx > 0.0:
            raise ConfigError("grid.dx", f"must be positive, got {self.dx}")
        if not 0.0 < self.tail_tolerance < 1.0:
            raise ConfigError("grid.tail_tolerance", f"must lie in (0, 1), got {self.tail_tolerance}")

    def to_dict(self) -> dict:
        return {"n": self.n, "dx": self.dx, "tail_tolerance": self.tail_tolerance}

    @classmethod
    def from_dict(cls, data: Any) -> "GridSettings":
        data = _section(data, "grid")
        _check_keys(data, ("n", "dx", "tail_tolerance"), "grid")
        return cls(
            n=_integer(data, "n", "grid", cls.n),
            dx=_number(data, "dx", "grid", cls.dx),
            tail_tolerance=_number(data, "tail_tolerance", "grid", cls.tail_tolerance),
        )


@dataclass
class GaussianComponent:
    """One weighted Gaussian φ_{a,b} with linear phase b_lin and centre c."""
    a: float = 0.5
    b: float = 0.0
    b_lin: float = 0.0
    c: float = 0.0
    weight: float = 1.0

    _FIELDS: ClassVar[tuple[str, ...]] = ("a", "b", "b_lin", "c")

    def validate(self, path: str) -> None:
        if not self.a > 0.0:
            raise ConfigError(f"{path}.a", f"must be positive, got {self.a}")
        if not self.weight > 0.0:
            raise ConfigError(f"{path}.weight", f"must be positive, got {self.weight}")

    def to_dict(self, with_weight: bool) -> dict:
        out = {"a": self.a, "b": self.b, "b_lin": self.b_lin, "c": self.c}
        if with_weight:
            out["weight"] = self.weight
        return out

    @classmethod
    def from_dict(cls, data: dict, path: str, with_weight: bool) -> "GaussianComponent":
        allowed = cls._FIELDS + (("weight",) if with_weight else ())
        _check_keys(data, allowed, path)
        return cls(
            a=_number(_require_present(data, "a", path), "a", path, 0.5),
            b=_number(data, "b", path, 0.0),
            b_lin=_number(data, "b_lin", path, 0.0),
            c=_number(data, "c", path, 0.0),
            weight=_number(data, "weight", path, 1.0) if with_weight else 1.0,
        )


def _require_present(data: dict, key: str, path: str) -> dict:
    _require(data, key, path)
    return data


@dataclass
class StateSpec:
    """A density operator: one Gaussian, a Gaussian mixture, an amplitude table or I/n."""
    kind: str = "gaussian"
    gaussian: GaussianComponent = field(default_factory=GaussianComponent)
    components: tuple[GaussianComponent, ...] = ()
    amplitudes: tuple[complex, ...] = ()

    def validate(self, path: str = "state", n: Optional[int] = None) -> None:
        if self.kind not in STATE_KINDS:
            raise ConfigError(f"{path}.kind", f"must be one of {', '.join(STATE_KINDS)}, got {self.kind!r}")
        if self.kind == "gaussian":
            self.gaussian.validate(path)
        elif self.kind == "mixture":
            if not self.components:
                raise ConfigError(f"{path}.components", "a mixture needs at least one component")
            for idx, comp in enumerate(self.components):
                comp.validate(f"{path}.components[{idx}]")
        elif self.kind == "table":
            if n is not None and len(self.amplitudes) != n:
                raise ConfigError(f"{path}.amplitudes", f"expected {n} amplitudes, got {len(self.amplitudes)}")
            if not any(abs(v) > 0.0 for v in self.amplitudes):
                raise ConfigError(f"{path}.amplitudes", "amplitude table is zero")

    def to_dict(self) -> dict:
        out: dict[str, Any] = {"kind": self.kind}
        if self.kind == "gaussian":
            out.update(self.gaussian.to_dict(with_weight=False))
        elif self.kind == "mixture":
            out["components"] = [comp.to_dict(with_weight=True) for comp in self.components]
        elif self.kind == "table":
            out["amplitudes"] = [[v.real, v.imag] for v in self.amplitudes]
        return out

    @classmethod
    def from_dict(cls, data: Any, path: str = "state") -> "StateSpec":
        data = _section(data, path)
        kind = _require(data, "kind", path)
        if kind not in STATE_KINDS:
            raise ConfigError(f"{path}.kind", f"must be one of {', '.join(STATE_KINDS)}, got {kind!r}")
        body = {k: v for k, v in data.items() if k != "kind"}
        if kind == "gaussian":
            return cls(kind=kind, gaussian=GaussianComponent.from_dict(body, path, with_weight=False))
        if kind == "mixture":
            _check_keys(body, ("components",), path)
            raw = _require(body, "components", path)
            if not isinstance(raw, list):
                raise ConfigError(f"{path}.components", "expected a list of components")
            components = tuple(
                GaussianComponent.from_dict(_section(item, f"{path}.components[{i}]"), f"{path}.components[{i}]", True)
                for i, item in enumerate(raw)
            )
            return cls(kind=kind, components=components)
        if kind == "table":
            _check_keys(body, ("amplitudes",), path)
            raw = _require(body, "amplitudes", path)
            if not isinstance(raw, list):
                raise ConfigError(f"{path}.amplitudes", "expected a list")
            return cls(kind=kind, amplitudes=tuple(_parse_amplitude(v, f"{path}.amplitudes[{i}]") for i, v in enumerate(raw)))
        _check_keys(body, (), path)
        return cls(kind=kind)


def _parse_amplitude(value: Any, path: str) -> complex:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(float(value), 0.0)
    if (
        isinstance(value, list)
        and len(value) == 2
        and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)
    ):
        return complex(float(value[0]), float(value[1]))
    raise ConfigError(path, f"expected a number or [re, im], got {value!r}")


@dataclass
class MeasureSpec:
    """A probability measure on the line: δ_x, the Gaussian |φ_a|² law, or a mass table."""
    kind: str = "dirac"
    x: float = 0.0
    a: float = 0.5
    masses: tuple[float, ...] = ()

    def validate(self, path: str = "measure", n: Optional[int] = None) -> None:
        if self.kind not in MEASURE_KINDS:
            raise ConfigError(f"{path}.kind", f"must be one of {', '.join(MEASURE_KINDS)}, got {self.kind!r}")
        if self.kind == "gaussian_density" and not self.a > 0.0:
            raise ConfigError(f"{path}.a", f"must be positive, got {self.a}")
        if self.kind == "table":
            if n is not None and len(self.masses) != n:
                raise ConfigError(f"{path}.masses", f"expected {n} masses, got {len(self.masses)}")
            if any(m < 0.0 for m in self.masses) or not any(m > 0.0 for m in self.masses):
                raise ConfigError(f"{path}.masses", "masses must be nonnegative with a positive entry")

    def to_dict(self) -> dict:
        if self.kind == "dirac":
            return {"kind": self.kind, "x": self.x}
        if self.kind == "gaussian_density":
            return {"kind": self.kind, "a": self.a}
        return {"kind": self.kind, "masses": list(self.masses)}

    @classmethod
    def from_dict(cls, data: Any, path: str = "measure") -> "MeasureSpec":
        data = _section(data, path)
        kind = _require(data, "kind", path)
        if kind == "dirac":
            _check_keys(data, ("kind", "x"), path)
            return cls(kind=kind, x=_number(_require_present(data, "x", path), "x", path, 0.0))
        if kind == "gaussian_density":
            _check_keys(data, ("kind", "a"), path)
            return cls(kind=kind, a=_number(_require_present(data, "a", path), "a", path, 0.5))
        if kind == "table":
            _check_keys(data, ("kind", "masses"), path)
            raw = _require(data, "masses", path)
            if not isinstance(raw, list):
                raise ConfigError(f"{path}.masses", "expected a list")
            masses = tuple(_number({"m": v}, "m", f"{path}.masses[{i}]", 0.0) for i, v in enumerate(raw))
            return cls(kind=kind, masses=masses)
        raise ConfigError(f"{path}.kind", f"must be one of {', '.join(MEASURE_KINDS)}, got {kind!r}")


@dataclass
class RegionSpec:
    """Phase-space region: explicit (q-index, p-index) cells or a product of interval unions.

    An empty interval list stands for the whole line in that coordinate.
    """
    kind: str = "intervals"
    cells: tuple[tuple[int, int], ...] = ()
    q_intervals: tuple[tuple[float, float], ...] = ()
    p_intervals: tuple[tuple[float, float], ...] = ()

    def validate(self, path: str = "region", n: Optional[int] = None) -> None:
        if self.kind not in REGION_KINDS:
            raise ConfigError(f"{path}.kind", f"must be one of {', '.join(REGION_KINDS)}, got {self.kind!r}")
        if n is not None:
            for idx, (c, d) in enumerate(self.cells):
                if not (0 <= c < n and 0 <= d < n):
                    raise ConfigError(f"{path}.cells[{idx}]", f"cell ({c}, {d}) outside [0, {n})")
        for name in ("q_intervals", "p_intervals"):
            for idx, (lo, hi) in enumerate(getattr(self, name)):
                if not lo < hi:
                    raise ConfigError(f"{path}.{name}[{idx}]", f"need lo < hi, got [{lo}, {hi}]")

    def to_dict(self) -> dict:
        if self.kind == "cells":
            return {"kind": self.kind, "cells": [list(cell) for cell in self.cells]}
        return {
            "kind": self.kind,
            "q_intervals": [list(iv) for iv in self.q_intervals],
            "p_intervals": [list(iv) for iv in self.p_intervals],
        }

    @classmethod
    def from_dict(cls, data: Any, path: str = "region") -> "RegionSpec":
        data = _section(data, path)
        kind = data.get("kind", "intervals")
        if kind == "cells":
            _check_keys(data, ("kind", "cells"), path)
            raw = _require(data, "cells", path)
            cells = []
            for idx, cell in enumerate(raw if isinstance(raw, list) else [raw]):
                if not (isinstance(cell, list) and len(cell) == 2 and all(isinstance(v, int) and not isinstance(v, bool) for v in cell)):
                    raise ConfigError(f"{path}.cells[{idx}]", f"expected [q_index, p_index], got {cell!r}")
                cells.append((cell[0], cell[1]))
            return cls(kind=kind, cells=tuple(cells))
        if kind == "intervals":
            _check_keys(data, ("kind", "q_intervals", "p_intervals"), path)
            return cls(
                kind=kind,
                q_intervals=_parse_intervals(data.get("q_intervals", []), f"{path}.q_intervals"),
                p_intervals=_parse_intervals(data.get("p_intervals", []), f"{path}.p_intervals"),
            )
        raise ConfigError(f"{path}.kind", f"must be one of {', '.join(REGION_KINDS)}, got {kind!r}")


def _parse_intervals(raw: Any, path: str) -> tuple[tuple[float, float], ...]:
    if not isinstance(raw, list):
        raise ConfigError(path, "expected a list of [lo, hi] pairs")
    out = []
    for idx, item in enumerate(raw):
        if not (isinstance(item, list) and len(item) == 2):
            raise ConfigError(f"{path}[{idx}]", f"expected [lo, hi], got {item!r}")
        pair = {"lo": item[0], "hi": item[1]}
        out.append((_number(pair, "lo", f"{path}[{idx}]", 0.0), _number(pair, "hi", f"{path}[{idx}]", 0.0)))
    return tuple(out)


@dataclass
class JointStateRequest:
    """Target margin variances for gaussian_joint_state."""
    var_q: float = 0.5
    var_p: float = 0.5

    def validate(self) -> None:
        for name in ("var_q", "var_p"):
            if not getattr(self, name) > 0.0:
                raise ConfigError(f"joint_state.{name}", f"must be positive, got {getattr(self, name)}")

    def to_dict(self) -> dict:
        return {"var_q": self.var_q, "var_p": self.var_p}

    @classmethod
    def from_dict(cls, data: Any) -> "JointStateRequest":
        data = _section(data, "joint_state")
        _check_keys(data, ("var_q", "var_p"), "joint_state")
        return cls(
            var_q=_number(_require_present(data, "var_q", "joint_state"), "var_q", "joint_state", 0.5),
            var_p=_number(_require_present(data, "var_p", "joint_state"), "var_p", "joint_state", 0.5),
        )


@dataclass
class PauliSettings:
    """The Gaussian pair φ_{a,±b} used by pauli-demo."""
    a: float = 0.5
    b: float = 0.5

    def validate(self) -> None:
        if not self.a > 0.0:
            raise ConfigError("pauli.a", f"must be positive, got {self.a}")
        if self.b == 0.0:
            raise ConfigError("pauli.b", "must be nonzero")

    def to_dict(self) -> dict:
        return {"a": self.a, "b": self.b}

    @classmethod
    def from_dict(cls, data: Any) -> "PauliSettings":
        data = _section(data, "pauli")
        _check_keys(data, ("a", "b"), "pauli")
        return cls(a=_number(data, "a", "pauli", 0.5), b=_number(data, "b", "pauli", 0.5))


@dataclass
class VerifySettings:
    """parallel runs checks on a thread pool; tolerance_override replaces every check tolerance."""
    parallel: bool = False
    tolerance_override: Optional[float] = None

    def validate(self) -> None:
        if self.tolerance_override is not None and self.tolerance_override < 0.0:
            raise ConfigError("verify.tolerance_override", f"must be >= 0, got {self.tolerance_override}")

    def to_dict(self) -> dict:
        return {"parallel": self.parallel, "tolerance_override": self.tolerance_override}

    @classmethod
    def from_dict(cls, data: Any) -> "VerifySettings":
        data = _section(data, "verify")
        _check_keys(data, ("parallel", "tolerance_override"), "verify")
        override = data.get("tolerance_override")
        if override is not None:
            override = _number(data, "tolerance_override", "verify", 0.0)
        return cls(parallel=_flag(data, "parallel", "verify", False), tolerance_override=override)


@dataclass
class ExperimentConfig:
    """Main experiment configuration container.

    Attributes:
        general: Logging settings
        grid: Lattice parameters
        state: Generating state T
        probe: State S measured by simulate (defaults to T)
        measure: Optional position/momentum measure compared against the margins
        region: Optional phase-space region whose localization norm is reported
        joint_state: Optional margin-variance request for joint-state
        pauli: Gaussian pair for pauli-demo
        verify: Verification suite settings
        seed: Seed for every random draw
        count: Number of simulated outcomes
        out_dir: Directory receiving CSV and JSON outputs
        VERSION: Package version string
        CONFIG_VERSION: Config schema version for migrations
    """
    general: GeneralSettings = field(default_factory=GeneralSettings)
    grid: GridSettings = field(default_factory=GridSettings)
    state: StateSpec = field(default_factory=StateSpec)
    probe: Optional[StateSpec] = None
    measure: Optional[MeasureSpec] = None
    region: Optional[RegionSpec] = None
    joint_state: Optional[JointStateRequest] = None
    pauli: PauliSettings = field(default_factory=PauliSettings)
    verify: VerifySettings = field(default_factory=VerifySettings)
    seed: int = 0
    count: int = 10000
    out_dir: str = "out"

    VERSION: ClassVar[str] = "0.3.0"
    CONFIG_VERSION: ClassVar[int] = 1

    SECTIONS: ClassVar[tuple[str, ...]] = (
        "config_version", "general", "grid", "state", "probe", "measure", "region",
        "joint_state", "pauli", "verify", "seed", "count", "out_dir",
    )

    def validate(self) -> None:
        """Check every section.

        Raises:
            ConfigError: Naming the first offending field.
        """
        self.general.validate()
        self.grid.validate()
        self.state.validate("state", self.grid.n)
        if self.probe is not None:
            self.probe.validate("probe", self.grid.n)
        if self.measure is not None:
            self.measure.validate("measure", self.grid.n)
        if self.region is not None:
            self.region.validate("region", self.grid.n)
        if self.joint_state is not None:
            self.joint_state.validate()
        self.pauli.validate()
        self.verify.validate()
        if self.count < 1:
            raise ConfigError("count", f"must be a positive integer, got {self.count}")
        if self.seed < 0:
            raise ConfigError("seed", f"must be >= 0, got {self.seed}")
        if not self.out_dir:
            raise ConfigError("out_dir", "must be a non-empty path")

    def to_dict(self) -> dict:
        out: dict[str, Any] = {
            "config_version": self.CONFIG_VERSION,
            "general": self.general.to_dict(),
            "grid": self.grid.to_dict(),
            "state": self.state.to_dict(),
        }
        if self.probe is not None:
            out["probe"] = self.probe.to_dict()
        if self.measure is not None:
            out["measure"] = self.measure.to_dict()
        if self.region is not None:
            out["region"] = self.region.to_dict()
        if self.joint_state is not None:
            out["joint_state"] = self.joint_state.to_dict()
        out["pauli"] = self.pauli.to_dict()
        out["verify"] = self.verify.to_dict()
        out["seed"] = self.seed
        out["count"] = self.count
        out["out_dir"] = self.out_dir
        return out

    @classmethod
    def from_dict(cls, data: Any) -> "ExperimentConfig":
        """Parse an already-migrated config mapping. Missing sections take their defaults."""
        data = _section(data, "config")
        _check_keys(data, cls.SECTIONS, "")
        config = cls(
            general=GeneralSettings.from_dict(data.get("general", {})),
            grid=GridSettings.from_dict(data.get("grid", {})),
            state=StateSpec.from_dict(data["state"]) if "state" in data else StateSpec(),
            probe=StateSpec.from_dict(data["probe"], "probe") if data.get("probe") is not None else None,
            measure=MeasureSpec.from_dict(data["measure"]) if data.get("measure") is not None else None,
            region=RegionSpec.from_dict(data["region"]) if data.get("region") is not None else None,
            joint_state=JointStateRequest.from_dict(data["joint_state"]) if data.get("joint_state") is not None else None,
            pauli=PauliSettings.from_dict(data.get("pauli", {})),
            verify=VerifySettings.from_dict(data.get("verify", {})),
            seed=_integer(data, "seed", "", 0),
            count=_integer(data, "count", "", 10000),
            out_dir=data.get("out_dir", "out"),
        )
        if not isinstance(config.out_dir, str):
            raise ConfigError("out_dir", f"expected a string, got {config.out_dir!r}")
        return config

    def with_overrides(
        self,
        n: Optional[int] = None,
        dx: Optional[float] = None,
        seed: Optional[int] = None,
        count: Optional[int] = None,
        out_dir: Optional[str] = None,
        debug: bool = False,
    ) -> "ExperimentConfig":
        """Copy with command-line values taking precedence over file values."""
        grid = replace(
            self.grid,
            n=self.grid.n if n is None else n,
            dx=self.grid.dx if dx is None else dx,
        )
        return replace(
            self,
            grid=grid,
            general=replace(self.general, debug_mode=self.general.debug_mode or debug),
            seed=self.seed if seed is None else seed,
            count=self.count if count is None else count,
            out_dir=self.out_dir if out_dir is None else out_dir,
        )

    @staticmethod
    def migrate_config(data: dict, from_version: int) -> dict:
        """Bring an older config mapping up to CONFIG_VERSION.

        Version 0 files kept n and dx at the top level instead of in a grid section.
        """
        if from_version >= ExperimentConfig.CONFIG_VERSION:
            return data
        migrated = dict(data)
        if from_version == 0:
            logger.info(f"Migrating config from version {from_version} to {ExperimentConfig.CONFIG_VERSION}")
            grid = dict(migrated.get("grid", {}))
            for key in ("n", "dx"):
                if key in migrated:
                    grid.setdefault(key, migrated.pop(key))
            if grid:
                migrated["grid"] = grid
        migrated["config_version"] = ExperimentConfig.CONFIG_VERSION
        logger.info(f"Config migration complete, now at version {ExperimentConfig.CONFIG_VERSION}")
        return migrated


def build_grid(settings: GridSettings) -> GridSpec:
    try:
        return make_grid(settings.n, settings.dx)
    except GridError as e:
        raise ConfigError("grid", str(e)) from e


def _gaussian(grid: GridSpec, comp: GaussianComponent, tail_tolerance: float, path: str) -> StateVector:
    try:
        return gaussian_state(grid, comp.a, comp.b, comp.b_lin, comp.c, tail_tolerance=tail_tolerance)
    except (ValueError, PhaseSpaceError) as e:
        raise ConfigError(f"{path}.a", str(e)) from e


def build_state(
    spec: StateSpec, grid: GridSpec, tail_tolerance: float = DEFAULT_TAIL_TOLERANCE, path: str = "state"
) -> DensityOperator:
    """Density operator described by a state spec.

    Raises:
        ConfigError: If the spec does not describe a valid state on this grid.
    """
    spec.validate(path, grid.n)
    if spec.kind == "gaussian":
        return DensityOperator.pure(_gaussian(grid, spec.gaussian, tail_tolerance, path))
    if spec.kind == "mixture":
        states = [
            _gaussian(grid, comp, tail_tolerance, f"{path}.components[{i}]")
            for i, comp in enumerate(spec.components)
        ]
        return DensityOperator.mixture(states, [comp.weight for comp in spec.components])
    if spec.kind == "table":
        amplitudes = np.array(spec.amplitudes, dtype=np.complex128)
        return DensityOperator.pure(StateVector(grid, amplitudes / np.linalg.norm(amplitudes)))
    return DensityOperator.maximally_mixed(grid)


def build_measure(spec: MeasureSpec, grid: GridSpec, path: str = "measure") -> LineMeasure:
    spec.validate(path, grid.n)
    try:
        if spec.kind == "dirac":
            return dirac(grid, spec.x)
        if spec.kind == "gaussian_density":
            # |φ_a|² is normal with variance 1/(4a).
            return gaussian_measure(grid, 1.0 / (4.0 * spec.a))
        return from_masses(grid, np.array(spec.masses))
    except (ValueError, PhaseSpaceError) as e:
        raise ConfigError(path, str(e)) from e


def _interval_union(grid: GridSpec, intervals: tuple[tuple[float, float], ...], axis: str) -> Optional[GridSet]:
    if not intervals:
        return None
    out = GridSet.empty(grid)
    for lo, hi in intervals:
        out = out.union(interval(grid, lo, hi, axis))
    return out


def build_region(spec: RegionSpec, grid: GridSpec, path: str = "region") -> PhaseRegion:
    spec.validate(path, grid.n)
    if spec.kind == "cells":
        return PhaseRegion.from_cells(grid, spec.cells)
    return PhaseRegion.product(
        grid,
        _interval_union(grid, spec.q_intervals, POSITION),
        _interval_union(grid, spec.p_intervals, MOMENTUM),
    )
