"""TOML run configuration: schema, unit handling and error locations."""

import copy
import re
import sys
from typing import Annotated, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ..errors import ConfigError
from ..units import ENERGY_UNITS, TEMPERATURE_UNITS, energy_to_au, temperature_to_au

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

TASKS = ("spectrum", "propagate", "surface", "thermal_sweep", "gauge_check", "instability_scan", "collective_scan")
_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([A-Za-z][\w-]*)\s*$")


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class UnitsSection(_Section):
    energy: str = "hartree"
    temperature: str = "hartree"

    @field_validator("energy")
    @classmethod
    def _energy(cls, v):
        v = v.lower()
        if v not in ENERGY_UNITS:
            raise ValueError(f"energy unit must be one of {list(ENERGY_UNITS)}")
        return v

    @field_validator("temperature")
    @classmethod
    def _temperature(cls, v):
        v = v.lower()
        if v not in TEMPERATURE_UNITS:
            raise ValueError(f"temperature unit must be one of {list(TEMPERATURE_UNITS)}")
        return v


class PotentialSection(_Section):
    kind: Literal["none", "harmonic"] = "none"
    omega: float = Field(1.0, gt=0)
    center: float = 0.0
    mass: Optional[float] = Field(None, gt=0)


class ModelSection(_Section):
    kind: Literal["grid", "tavis_cummings"] = "grid"
    softening: float = Field(1.0, gt=0)
    kinetic: Literal["fd", "spectral"] = "fd"
    potential: PotentialSection = PotentialSection()
    n_emitters: int = Field(1, ge=1)
    omega_a: Optional[float] = Field(None, gt=0)
    rwa: bool = True


class GridSection(_Section):
    x_min: float
    x_max: float
    n_points: int = Field(ge=2)

    @model_validator(mode="after")
    def _ordered(self):
        if not self.x_min < self.x_max:
            raise ValueError("x_min must be below x_max")
        return self


class SpeciesSection(_Section):
    name: str = "electron"
    mass: float = Field(1.0, gt=0)
    charge: float = -1.0
    quantum: bool = True
    count: int = Field(1, ge=1)
    positions: List[float] = []


class ModeSection(_Section):
    omega: float = Field(gt=0)
    g: float = 0.0
    polarization: List[float] = [1.0]
    n_max: int = Field(4, ge=0)


class GaugeSection(_Section):
    form: Literal["length", "velocity"] = "length"
    self_polarization: bool = True
    diamagnetic: bool = True


class NumericsSection(_Section):
    tol: float = Field(1e-10, gt=0)
    dense_limit: int = Field(4096, ge=1)
    max_dim: int = Field(2_000_000, ge=1)
    block_size: Optional[int] = Field(None, ge=1)
    max_iter: int = Field(20000, ge=1)


class OutputSection(_Section):
    directory: str = "output"
    write_matrix: bool = False


class SpectrumTask(_Section):
    name: Literal["spectrum"]
    k: Optional[int] = Field(6, ge=1)
    vectors: bool = False


class PulseSection(_Section):
    target: Literal["current", "field"] = "current"
    mode: int = Field(0, ge=0)
    amplitude: float
    duration: float = Field(gt=0)
    t0: float = 0.0


class PropagateTask(_Section):
    name: Literal["propagate"]
    dt: float = Field(gt=0)
    t_end: float = Field(gt=0)
    initial: Literal["ground", "excited"] = "ground"
    kick_operator: Optional[str] = None
    kick_strength: float = 0.0
    observables: List[str] = ["dipole"]
    record_every: int = Field(1, ge=1)
    spectrum_observable: Optional[str] = None
    window: str = "hann"
    pulse: Optional[PulseSection] = None


class AxisRange(_Section):
    start: float
    stop: float
    num: int = Field(ge=1)


class SurfaceTask(_Section):
    name: Literal["surface"]
    kind: Literal["cavity_bo", "polaritonic"] = "cavity_bo"
    axes: Dict[str, Union[AxisRange, List[float]]]
    fixed: Dict[str, float] = {}
    k: int = Field(2, ge=1)
    couplings: List[str] = []
    refine: bool = False


class ThermalTask(_Section):
    name: Literal["thermal_sweep"]
    temperatures: List[float]
    n_levels: Optional[int] = Field(None, ge=1)

    @field_validator("temperatures")
    @classmethod
    def _nonneg(cls, v):
        if not v or any(t < 0 for t in v):
            raise ValueError("temperatures must be a non-empty list of values >= 0")
        return v


class GaugeCheckTask(_Section):
    name: Literal["gauge_check"]
    ladder: List[Tuple[int, int]]
    gap_tol: float = Field(1e-6, gt=0)

    @field_validator("ladder")
    @classmethod
    def _len(cls, v):
        if len(v) < 3:
            raise ValueError("ladder needs at least 3 (n_points, n_max) levels")
        return v


class InstabilityTask(_Section):
    name: Literal["instability_scan"]
    ladder: List[Tuple[float, int]]
    branches: List[Literal["on", "off"]] = ["on", "off"]
    cauchy_tol: float = Field(1e-8, gt=0)

    @field_validator("ladder")
    @classmethod
    def _len(cls, v):
        if len(v) < 4:
            raise ValueError("ladder needs at least 4 (half_width, n_max) levels")
        return v


class CollectiveTask(_Section):
    name: Literal["collective_scan"]
    n_values: List[int]
    omega0: float = Field(gt=0)
    tavis_cummings: bool = True

    @field_validator("n_values")
    @classmethod
    def _positive(cls, v):
        if not v or any(n < 0 for n in v):
            raise ValueError("n_values must be a non-empty list of counts >= 0")
        return v


TaskSection = Annotated[
    Union[SpectrumTask, PropagateTask, SurfaceTask, ThermalTask, GaugeCheckTask, InstabilityTask, CollectiveTask],
    Field(discriminator="name"),
]


class RunConfig(_Section):
    seed: int = Field(0, ge=0, lt=2**64)
    units: UnitsSection = UnitsSection()
    model: ModelSection = ModelSection()
    grid: Optional[GridSection] = None
    species: List[SpeciesSection] = []
    modes: List[ModeSection] = []
    gauge: GaugeSection = GaugeSection()
    task: TaskSection
    numerics: NumericsSection = NumericsSection()
    output: OutputSection = OutputSection()

    @model_validator(mode="after")
    def _sections(self):
        # the collective scan runs on the bilinear oracle and needs no grid
        if self.model.kind == "grid" and self.task.name != "collective_scan":
            if self.grid is None:
                raise ValueError("grid models need a [grid] section")
            if not self.species:
                raise ValueError("grid models need at least one [[species]] entry")
        if self.model.kind == "tavis_cummings" and self.model.omega_a is None:
            raise ValueError("tavis_cummings models need model.omega_a")
        if not self.modes:
            raise ValueError("at least one [[modes]] entry is required")
        return self


# -- unit-bearing fields ------------------------------------------------------

def _energy_paths(raw):
    paths = [("model", "potential", "omega"), ("model", "omega_a"), ("task", "omega0")]
    paths += [("modes", i, "omega") for i in range(len(raw.get("modes", []) or []))]
    return paths


def _get(raw, path):
    node = raw
    for p in path:
        if isinstance(node, dict) and p in node:
            node = node[p]
        elif isinstance(node, list) and isinstance(p, int) and p < len(node):
            node = node[p]
        else:
            return None, False
    return node, True


def _set(raw, path, value):
    node = raw
    for p in path[:-1]:
        node = node[p]
    node[path[-1]] = value


def _convert(value, unit, convert, kind, path, text):
    """Plain numbers are in the declared unit; suffixed strings must name it."""
    if isinstance(value, bool):
        return value
    if isinstance(value, (int, float)):
        return convert(value, unit)
    if isinstance(value, str):
        m = _QUANTITY.match(value)
        if not m:
            raise ConfigError(f"cannot read {kind} quantity {value!r}", key=_dotted(path), line=locate(text, path))
        number, suffix = m.groups()
        if suffix.lower() != unit:
            raise ConfigError(
                f"{kind} given in {suffix!r} but [units] {kind} is {unit!r}; declare the unit to convert",
                key=_dotted(path),
                line=locate(text, path),
            )
        return convert(float(number), unit)
    return value


def _apply_units(raw, text):
    units = raw.get("units", {}) or {}
    try:
        u = UnitsSection(**units)
    except ValidationError as exc:
        raise _schema_error(exc, text, prefix=("units",)) from None
    for path in _energy_paths(raw):
        value, found = _get(raw, path)
        if found:
            _set(raw, path, _convert(value, u.energy, energy_to_au, "energy", path, text))
    temps, found = _get(raw, ("task", "temperatures"))
    if found and isinstance(temps, list):
        _set(raw, ("task", "temperatures"),
             [_convert(t, u.temperature, temperature_to_au, "temperature", ("task", "temperatures"), text)
              for t in temps])
    return raw


# -- error locations ----------------------------------------------------------

def _dotted(path):
    out = []
    for p in path:
        if isinstance(p, int):
            out[-1] = f"{out[-1]}[{p}]" if out else f"[{p}]"
        else:
            out.append(str(p))
    return ".".join(out)


_HEADER = re.compile(r"^\s*(\[\[?)\s*([^\]]+?)\s*\]\]?\s*(#.*)?$")
_KEYLINE = re.compile(r"^\s*([A-Za-z0-9_.\"'-]+)\s*=")


def _index_lines(text):
    """Map every table header and key of ``text`` to its 1-based line."""
    table, counters, where = [], {}, {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        h = _HEADER.match(line)
        if h:
            names = [n.strip().strip("\"'") for n in h.group(2).split(".")]
            if h.group(1) == "[[":
                key = tuple(names)
                counters[key] = counters.get(key, -1) + 1
                table = names + [counters[key]]
            else:
                table = names
            where.setdefault(tuple(table), lineno)
            continue
        k = _KEYLINE.match(line)
        if k:
            names = [n.strip().strip("\"'") for n in k.group(1).split(".")]
            where.setdefault(tuple(table + names), lineno)
    return where


def locate(text, path):
    """Line of the deepest prefix of ``path`` that appears in ``text``."""
    if text is None:
        return None
    where = _index_lines(text)
    path = tuple(path)
    for n in range(len(path), 0, -1):
        if path[:n] in where:
            return where[path[:n]]
    return None


_MEMBER_LABELS = {"AxisRange"}


def _schema_error(exc, text, prefix=()):
    err = exc.errors()[0]
    # drop the union-member labels pydantic inserts ("AxisRange", "list[float]")
    loc = tuple(prefix) + tuple(p for p in err["loc"] if not (isinstance(p, str) and (p in _MEMBER_LABELS or "[" in p)))
    # discriminated unions insert the tag value ("spectrum", ...) into the path
    loc = tuple(p for i, p in enumerate(loc) if not (i == 1 and loc[0] == "task" and p in TASKS))
    msg = err["msg"]
    if err["type"] == "extra_forbidden":
        msg = "unknown key"
    elif err["type"] == "missing":
        msg = "missing required key"
    return ConfigError(f"invalid configuration: {msg}", key=_dotted(loc) or None, line=locate(text, loc))


def validate(raw, text=None):
    """Validate a configuration mapping (deep-copied) into a :class:`RunConfig`."""
    raw = copy.deepcopy(raw)
    if not isinstance(raw.get("task", None), dict):
        raise ConfigError("configuration needs a [task] table with a name", key="task", line=locate(text, ("task",)))
    if raw["task"].get("name") not in TASKS:
        raise ConfigError(f"task.name must be one of {list(TASKS)}", key="task.name",
                          line=locate(text, ("task", "name")))
    _apply_units(raw, text)
    try:
        return RunConfig(**raw)
    except ValidationError as exc:
        raise _schema_error(exc, text) from None


def parse_config(path, task=None, seed=None):
    """Read and validate a TOML run configuration.

    ``task`` and ``seed`` override the file's values (command-line flags).
    A ``task`` naming a different task than the file discards the file's
    ``[task]`` options, so the overriding task starts from its defaults.
    """
    try:
        with open(path, "rb") as fh:
            text = fh.read().decode("utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read configuration: {exc}") from None
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        line = getattr(exc, "lineno", None)
        if line is None:
            m = re.search(r"line (\d+)", str(exc))
            line = int(m.group(1)) if m else None
        raise ConfigError(f"TOML syntax error: {exc}", line=line) from None
    if task is not None and raw.get("task", {}).get("name") != task:
        raw["task"] = {"name": task}
    if seed is not None:
        raw["seed"] = seed
    return validate(raw, text)
