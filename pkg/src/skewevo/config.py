"""JSON analysis configs with field-level validation.

A config names a system, optional projector families, a sample grid and a
command.  :func:`parse_config` collects every problem it finds and raises one
:class:`ConfigError` listing them as ``field: message`` lines.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from .classifier import SpectralConstants
from .criteria import CriterionFunction, InvalidCriterionError
from .grid import GridSpec
from .profiles import DEFAULT_PANELS_PER_UNIT, BaseProfile
from .systems import DEFAULT_PROFILE

COMMANDS = ("verify-axioms", "classify", "certify", "criterion-3-1", "criterion-3-2")
COMMAND_ALIASES = {"growth-criterion": "criterion-3-1", "integral-criterion": "criterion-3-2"}
EXAMPLES = ("ses", "ued", "uet", "custom_diagonal")
INTEGRATION_METHODS = ("closed_form", "quadrature")

DEFAULT_TOLERANCES = {"closed_form": 1e-9, "quadrature": 1e-6, "tabulated": 1e-5}
DEFAULT_PARTITIONS = {"ued": ((0,), (1,)), "uet": ((0,), (1,), (2,))}

# number of projector families each command needs (None: optional)
FAMILIES_NEEDED = {"verify-axioms": None, "classify": (2, 3), "certify": (2, 3),
                   "criterion-3-1": (2,), "criterion-3-2": (3,)}

TOP_LEVEL_KEYS = {"system", "projectors", "grid", "tolerances", "command", "seed", "constants",
                  "criterion", "n_axiom_samples", "output"}


class ConfigError(ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("invalid config:\n" + "\n".join(f"  {e}" for e in self.errors))


@dataclass(frozen=True)
class SystemSpec:
    example: str
    profile: BaseProfile = DEFAULT_PROFILE
    p: int = 1
    mu: float | None = None
    exponents: tuple[float, ...] | None = None
    literal_t0: bool = False
    integration: str = "closed_form"
    panels_per_unit: int = DEFAULT_PANELS_PER_UNIT

    @property
    def dim(self) -> int:
        if self.example == "ses":
            return self.p
        if self.example == "uet":
            return 3
        return len(self.exponents) if self.exponents else 2

    @property
    def uses_quadrature(self) -> bool:
        return self.integration == "quadrature" or not self.profile.has_antiderivative

    def to_dict(self) -> dict:
        out: dict[str, Any] = {"example": self.example, "profile": self.profile.to_dict(),
                               "integration": self.integration, "panels_per_unit": self.panels_per_unit}
        if self.example == "ses":
            out["p"] = self.p
        if self.example == "uet":
            out["mu"] = self.mu
            out["literal_t0"] = self.literal_t0
        if self.exponents is not None:
            out["exponents"] = list(self.exponents)
        return out


@dataclass(frozen=True)
class ProjectorSpec:
    kind: str
    partition: tuple[tuple[int, ...], ...] | None = None
    matrices: tuple | None = None

    @property
    def n_families(self) -> int:
        return len(self.partition) if self.kind == "coordinate" else len(self.matrices)

    def to_dict(self) -> dict:
        if self.kind == "coordinate":
            return {"kind": "coordinate", "partition": [list(b) for b in self.partition]}
        return {"kind": "matrices", "matrices": [[list(row) for row in m] for m in self.matrices]}


@dataclass(frozen=True)
class CriterionSpec:
    function: CriterionFunction
    delta: float = 1.0
    min_horizon: float | None = None
    max_gain: float = 10.0
    panels_per_unit: int = DEFAULT_PANELS_PER_UNIT

    def to_dict(self) -> dict:
        return {"function": self.function.to_dict(), "delta": self.delta, "min_horizon": self.min_horizon,
                "max_gain": self.max_gain, "panels_per_unit": self.panels_per_unit}


@dataclass(frozen=True)
class AnalysisConfig:
    system: SystemSpec
    command: str
    projectors: ProjectorSpec | None = None
    grid: GridSpec = field(default_factory=GridSpec)
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    seed: int = 42
    constants: SpectralConstants | None = None
    criterion: CriterionSpec | None = None
    n_axiom_samples: int = 1000
    output: dict = field(default_factory=dict)

    @property
    def cocycle_tol(self) -> float:
        if not self.system.profile.has_antiderivative:
            return self.tolerances["tabulated"]
        return self.tolerances["quadrature" if self.system.uses_quadrature else "closed_form"]

    def with_seed(self, seed: int) -> "AnalysisConfig":
        return replace(self, seed=int(seed))

    def to_dict(self) -> dict:
        """Normalized echo: defaults filled in, output paths left out."""
        return {
            "system": self.system.to_dict(),
            "command": self.command,
            "projectors": None if self.projectors is None else self.projectors.to_dict(),
            "grid": self.grid.to_dict(),
            "tolerances": dict(self.tolerances),
            "seed": self.seed,
            "constants": None if self.constants is None else self.constants.to_dict(),
            "criterion": None if self.criterion is None else self.criterion.to_dict(),
            "n_axiom_samples": self.n_axiom_samples,
        }


class _Errors:
    def __init__(self):
        self.items: list[str] = []

    def add(self, where: str, message: str):
        self.items.append(f"{where}: {message}")

    def unknown(self, where: str, data: dict, allowed):
        for key in sorted(set(data) - set(allowed)):
            self.add(f"{where}.{key}" if where else key, "unknown field")


def _number(errors, where, value, *, positive=False, nonneg=False, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        errors.add(where, f"expected a number, got {value!r}")
        return None
    if integer and int(value) != value:
        errors.add(where, f"expected an integer, got {value!r}")
        return None
    if not math.isfinite(value):
        errors.add(where, "must be finite")
        return None
    if positive and not value > 0:
        errors.add(where, f"must be > 0, got {value!r}")
        return None
    if nonneg and value < 0:
        errors.add(where, f"must be >= 0, got {value!r}")
        return None
    return int(value) if integer else float(value)


def _section(errors, data, key) -> dict | None:
    value = data.get(key)
    if value is None:
        return None
    if not isinstance(value, dict):
        errors.add(key, "expected an object")
        return None
    return value


def _parse_system(errors: _Errors, data: dict | None) -> SystemSpec | None:
    if data is None:
        errors.add("system", "required")
        return None
    errors.unknown("system", data, {"example", "profile", "p", "mu", "exponents", "literal_t0",
                                    "integration", "panels_per_unit"})
    example = data.get("example")
    if example not in EXAMPLES:
        errors.add("system.example", f"expected one of {', '.join(EXAMPLES)}, got {example!r}")
        return None
    profile = DEFAULT_PROFILE
    if "profile" in data:
        raw = data["profile"]
        if not isinstance(raw, dict):
            errors.add("system.profile", "expected an object")
            return None
        try:
            profile = BaseProfile.from_dict(raw)
        except (TypeError, ValueError) as exc:
            errors.add("system.profile", str(exc))
            return None
    kwargs: dict[str, Any] = {"example": example, "profile": profile}
    integration = data.get("integration", "closed_form")
    if integration not in INTEGRATION_METHODS:
        errors.add("system.integration", f"expected one of {', '.join(INTEGRATION_METHODS)}, got {integration!r}")
    kwargs["integration"] = integration
    if "panels_per_unit" in data:
        ppu = _number(errors, "system.panels_per_unit", data["panels_per_unit"], positive=True, integer=True)
        if ppu is not None:
            kwargs["panels_per_unit"] = ppu
    if example == "ses":
        p = _number(errors, "system.p", data.get("p", 1), positive=True, integer=True)
        kwargs["p"] = p or 1
    for key in ("mu", "literal_t0"):
        if key in data and example != "uet":
            errors.add(f"system.{key}", f"only applies to the uet example, not {example!r}")
    if example == "uet":
        if "mu" not in data:
            errors.add("system.mu", "required for the uet example")
        else:
            mu = _number(errors, "system.mu", data["mu"])
            f0 = float(profile(0.0))
            if mu is not None and not mu > f0:
                errors.add("system.mu", f"must exceed f(0) = {f0:g}, got {mu:g}")
            kwargs["mu"] = mu
        literal = data.get("literal_t0", False)
        if not isinstance(literal, bool):
            errors.add("system.literal_t0", "expected true or false")
        kwargs["literal_t0"] = bool(literal)
    if "exponents" in data and example not in ("ued", "custom_diagonal"):
        errors.add("system.exponents", f"not used by the {example!r} example")
    if example in ("ued", "custom_diagonal"):
        raw = data.get("exponents")
        if raw is None:
            if example == "custom_diagonal":
                errors.add("system.exponents", "required for custom_diagonal")
        elif not isinstance(raw, list) or not raw:
            errors.add("system.exponents", "expected a nonempty list of numbers")
        else:
            values = [_number(errors, f"system.exponents[{i}]", v) for i, v in enumerate(raw)]
            if example == "ued" and len(values) != 2:
                errors.add("system.exponents", "the ued example takes exactly two exponents")
            kwargs["exponents"] = tuple(v if v is not None else 0.0 for v in values)
    if example == "ued" and "exponents" not in kwargs:
        kwargs["exponents"] = (-2.0, 3.0)
    return SystemSpec(**kwargs)


def _parse_projectors(errors: _Errors, data: dict | None, system: SystemSpec | None) -> ProjectorSpec | None:
    if data is None:
        if system is not None and system.example in DEFAULT_PARTITIONS:
            return ProjectorSpec("coordinate", partition=DEFAULT_PARTITIONS[system.example])
        return None
    kind = data.get("kind", "coordinate")
    dim = system.dim if system is not None else None
    if kind == "coordinate":
        errors.unknown("projectors", data, {"kind", "partition"})
        blocks = data.get("partition")
        if not isinstance(blocks, list) or not all(isinstance(b, list) for b in blocks):
            errors.add("projectors.partition", "expected a list of index lists")
            return None
        if len(blocks) not in (2, 3):
            errors.add("projectors.partition", f"expected 2 or 3 blocks, got {len(blocks)}")
            return None
        flat = [i for b in blocks for i in b]
        if not all(isinstance(i, int) and not isinstance(i, bool) for i in flat):
            errors.add("projectors.partition", "indices must be integers")
            return None
        if dim is not None and sorted(flat) != list(range(dim)):
            errors.add("projectors.partition", f"blocks must cover coordinates 0..{dim - 1} exactly once")
            return None
        return ProjectorSpec("coordinate", partition=tuple(tuple(b) for b in blocks))
    if kind == "matrices":
        errors.unknown("projectors", data, {"kind", "matrices"})
        mats = data.get("matrices")
        if not isinstance(mats, list) or len(mats) not in (2, 3):
            errors.add("projectors.matrices", "expected a list of 2 or 3 square matrices")
            return None
        out = []
        for k, m in enumerate(mats):
            where = f"projectors.matrices[{k}]"
            ok = isinstance(m, list) and all(isinstance(r, list) for r in m) and len(m) > 0
            if ok and dim is not None:
                ok = len(m) == dim and all(len(r) == dim for r in m)
            if ok:
                ok = all(_number(errors, where, v) is not None for r in m for v in r)
            if not ok:
                errors.add(where, f"expected a {dim or 'p'} x {dim or 'p'} numeric matrix")
                return None
            out.append(tuple(tuple(float(v) for v in r) for r in m))
        return ProjectorSpec("matrices", matrices=tuple(out))
    errors.add("projectors.kind", f"expected 'coordinate' or 'matrices', got {kind!r}")
    return None


def _parse_grid(errors: _Errors, data: dict | None) -> GridSpec:
    if data is None:
        return GridSpec()
    allowed = ("t0", "dt", "s_offsets", "shifts", "n_random_vectors")
    errors.unknown("grid", data, allowed)
    kwargs = {}
    for key in allowed[:4]:
        if key not in data:
            continue
        raw = data[key]
        if not isinstance(raw, list) or not raw:
            errors.add(f"grid.{key}", "expected a nonempty list of numbers")
            continue
        values = [_number(errors, f"grid.{key}[{i}]", v, nonneg=True) for i, v in enumerate(raw)]
        if all(v is not None for v in values):
            kwargs[key] = tuple(values)
    if "n_random_vectors" in data:
        n = _number(errors, "grid.n_random_vectors", data["n_random_vectors"], nonneg=True, integer=True)
        if n is not None:
            kwargs["n_random_vectors"] = n
    try:
        return GridSpec(**kwargs)
    except ValueError as exc:
        errors.add("grid", str(exc))
        return GridSpec()


def _parse_tolerances(errors: _Errors, data: dict | None) -> dict:
    out = dict(DEFAULT_TOLERANCES)
    if data is None:
        return out
    errors.unknown("tolerances", data, DEFAULT_TOLERANCES)
    for key in DEFAULT_TOLERANCES:
        if key in data:
            value = _number(errors, f"tolerances.{key}", data[key], nonneg=True)
            if value is not None:
                out[key] = value
    return out


def _parse_constants(errors: _Errors, data: dict | None) -> SpectralConstants | None:
    if data is None:
        return None
    errors.unknown("constants", data, {"gains", "rates"})
    gains, rates = data.get("gains"), data.get("rates")
    if not isinstance(gains, list) or not isinstance(rates, list):
        errors.add("constants", "expected lists 'gains' and 'rates'")
        return None
    try:
        constants = SpectralConstants(tuple(gains), tuple(rates))
        constants.validate()
    except (TypeError, ValueError) as exc:
        errors.add("constants", str(exc))
        return None
    return constants


def _parse_criterion(errors: _Errors, data: dict | None) -> CriterionSpec | None:
    if data is None:
        return None
    errors.unknown("criterion", data, {"kind", "params", "delta", "min_horizon", "max_gain", "panels_per_unit"})
    params = data.get("params", {})
    if not isinstance(params, dict):
        errors.add("criterion.params", "expected an object")
        return None
    try:
        function = CriterionFunction.from_dict({"kind": data.get("kind"), **params})
    except (TypeError, InvalidCriterionError) as exc:
        errors.add("criterion", str(exc))
        return None
    kwargs: dict[str, Any] = {"function": function}
    if "delta" in data:
        kwargs["delta"] = _number(errors, "criterion.delta", data["delta"], positive=True) or 1.0
    if data.get("min_horizon") is not None:
        kwargs["min_horizon"] = _number(errors, "criterion.min_horizon", data["min_horizon"], nonneg=True)
    if "max_gain" in data:
        kwargs["max_gain"] = _number(errors, "criterion.max_gain", data["max_gain"], positive=True) or 10.0
    if "panels_per_unit" in data:
        kwargs["panels_per_unit"] = _number(errors, "criterion.panels_per_unit", data["panels_per_unit"],
                                            positive=True, integer=True) or DEFAULT_PANELS_PER_UNIT
    return CriterionSpec(**kwargs)


def parse_config(data: Any) -> AnalysisConfig:
    """Validate a decoded JSON config and build an :class:`AnalysisConfig`."""
    errors = _Errors()
    if not isinstance(data, dict):
        raise ConfigError(["<root>: expected a JSON object"])
    errors.unknown("", data, TOP_LEVEL_KEYS)

    command = data.get("command")
    command = COMMAND_ALIASES.get(command, command)
    if command not in COMMANDS:
        errors.add("command", f"expected one of {', '.join(COMMANDS)}, got {data.get('command')!r}")

    system = _parse_system(errors, _section(errors, data, "system"))
    projectors = _parse_projectors(errors, _section(errors, data, "projectors"), system)
    grid = _parse_grid(errors, _section(errors, data, "grid"))
    tolerances = _parse_tolerances(errors, _section(errors, data, "tolerances"))
    constants = _parse_constants(errors, _section(errors, data, "constants"))
    criterion = _parse_criterion(errors, _section(errors, data, "criterion"))

    seed = _number(errors, "seed", data.get("seed", 42), nonneg=True, integer=True)
    n_axiom = _number(errors, "n_axiom_samples", data.get("n_axiom_samples", 1000), positive=True, integer=True)

    output = _section(errors, data, "output") or {}
    errors.unknown("output", output, {"report", "plot_data"})
    for key, value in output.items():
        if value is not None and not isinstance(value, str):
            errors.add(f"output.{key}", "expected a path string")

    if command in FAMILIES_NEEDED and system is not None:
        needed = FAMILIES_NEEDED[command]
        if needed is not None:
            if projectors is None:
                errors.add("projectors", f"required for command {command}")
            elif projectors.n_families not in needed:
                errors.add("projectors", f"command {command} needs {' or '.join(map(str, needed))} "
                                         f"families, got {projectors.n_families}")
        if command in ("criterion-3-1", "criterion-3-2") and criterion is None and not any(
                e.startswith("criterion") for e in errors.items):
            errors.add("criterion", f"required for command {command}")
    if constants is not None and projectors is not None and len(constants.gains) != projectors.n_families:
        errors.add("constants", f"expected {projectors.n_families} gain/rate pairs, got {len(constants.gains)}")

    if errors.items:
        raise ConfigError(errors.items)
    return AnalysisConfig(
        system=system, command=command, projectors=projectors, grid=grid, tolerances=tolerances,
        seed=seed, constants=constants, criterion=criterion, n_axiom_samples=n_axiom,
        output={k: v for k, v in output.items() if v is not None},
    )


def load_config(path) -> AnalysisConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError([f"<file>: cannot read {path}: {exc.strerror}"]) from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"<file>: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"]) from exc
    return parse_config(data)
