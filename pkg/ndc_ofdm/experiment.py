"""
Experiment files: schema, validation and loading.

An experiment is a YAML document describing Monte Carlo sweeps, an
analytical sweep and/or a spectral-efficiency table. The accepted keys are
declared as parameter definitions per section; unknown keys are rejected and
every error names the offending field path.

Example:

    name: fig5
    seed: 20240601
    frame_size: 2048
    channels: [HPrac1]
    ebn0_db: {start: 110, stop: 160, step: 2}
    stopping: {min_bits: 1000000, min_errors: 100, max_frames: 20000}
    sweeps:
      - scheme: NDC
        M: [8, 16]
      - scheme: DCO-OSM
        M: [4, 8]
        bias_db: [5, 7]
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from itertools import product
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import yaml

from ndc_ofdm.analysis import COMBINATIONS, DEFAULT_COMBINATION
from ndc_ofdm.channel import ChannelMatrix, LinkGeometry, get_channel, link_geometries, load_matrix
from ndc_ofdm.config import (
    ANALYSIS_SIGMA_N,
    CALIBRATION_FRAMES,
    DEFAULT_FRAME_SIZE,
    DEFAULT_SEED,
    DEFAULT_TRANSMITTERS,
    MAX_FRAMES,
    MIN_BITS,
    MIN_ERRORS,
    ROUND_FRAMES,
)
from ndc_ofdm.errors import ConfigError, NdcOfdmError
from ndc_ofdm.modem import Scheme
from ndc_ofdm.montecarlo import RECONSTRUCTIONS, SweepConfig

logger = logging.getLogger(__name__)

RECIPE_PACKAGE = "ndc_ofdm.recipes"
DEFAULT_SE_POINTS = [3.5, 4.0, 4.5, 5.0, 5.5]


class ParameterType(Enum):
    """Value kinds accepted in experiment files."""
    FLOAT = "float"
    INTEGER = "int"
    CATEGORICAL = "categorical"
    STRING = "string"
    GRID = "grid"
    CHANNELS = "channels"
    SECTION = "section"


@dataclass
class ParameterDefinition:
    """
    Definition of a single experiment-file key.

    Attributes:
        name: Key name
        param_type: Kind of value
        bounds: (min, max) for numeric types, allowed options for categorical
        default: Default value
        description: Human-readable description
        multiple: A list of values is accepted and expanded
    """
    name: str
    param_type: ParameterType
    bounds: Optional[Union[Tuple[float, float], List[Any]]] = None
    default: Any = None
    description: str = ""
    multiple: bool = False


def _schemes() -> List[str]:
    return [s.value for s in Scheme]


SCHEMA: Dict[str, Dict[str, ParameterDefinition]] = {
    "experiment": {
        "name": ParameterDefinition("name", ParameterType.STRING, default="experiment",
                                    description="Experiment name, used for output file names"),
        "description": ParameterDefinition("description", ParameterType.STRING, default="",
                                           description="Free text"),
        "seed": ParameterDefinition("seed", ParameterType.INTEGER, (0, 2 ** 63 - 1), DEFAULT_SEED,
                                    "Master seed of every random stream"),
        "frame_size": ParameterDefinition("frame_size", ParameterType.INTEGER, (8, 2 ** 20),
                                          DEFAULT_FRAME_SIZE, "OFDM frame size N"),
        "transmitters": ParameterDefinition("transmitters", ParameterType.INTEGER, (1, 64),
                                            DEFAULT_TRANSMITTERS, "Number of LEDs N_t"),
        "channels": ParameterDefinition("channels", ParameterType.CHANNELS, default=None,
                                        description="Channels shared by all sweeps"),
        "ebn0_db": ParameterDefinition("ebn0_db", ParameterType.GRID, default=None,
                                       description="Eb/N0 grid shared by all sweeps"),
        "calibration_frames": ParameterDefinition("calibration_frames", ParameterType.INTEGER,
                                                  (1, 10 ** 6), CALIBRATION_FRAMES,
                                                  "Frames used to measure Eb"),
        "stopping": ParameterDefinition("stopping", ParameterType.SECTION),
        "sweeps": ParameterDefinition("sweeps", ParameterType.SECTION),
        "analysis": ParameterDefinition("analysis", ParameterType.SECTION),
        "se_table": ParameterDefinition("se_table", ParameterType.SECTION),
    },
    "stopping": {
        "min_bits": ParameterDefinition("min_bits", ParameterType.INTEGER, (1, 10 ** 12), MIN_BITS,
                                        "Minimum information bits per point"),
        "min_errors": ParameterDefinition("min_errors", ParameterType.INTEGER, (1, 10 ** 9), MIN_ERRORS,
                                          "Minimum bit errors per point"),
        "max_frames": ParameterDefinition("max_frames", ParameterType.INTEGER, (1, 10 ** 9), MAX_FRAMES,
                                          "Frame cap per point"),
        "round_frames": ParameterDefinition("round_frames", ParameterType.INTEGER, (1, 10 ** 6),
                                            ROUND_FRAMES, "Frames between stopping checks"),
    },
    "sweep": {
        "scheme": ParameterDefinition("scheme", ParameterType.CATEGORICAL, _schemes(), None,
                                      "Modulation scheme"),
        "M": ParameterDefinition("M", ParameterType.INTEGER, (4, 2 ** 24), None,
                                 "Constellation order", multiple=True),
        "bias_db": ParameterDefinition("bias_db", ParameterType.FLOAT, (0.0, 60.0), None,
                                       "DC bias level in dB (DCO-OSM)", multiple=True),
        "reconstruction": ParameterDefinition("reconstruction", ParameterType.CATEGORICAL,
                                              list(RECONSTRUCTIONS), "sign-select",
                                              "NDC bipolar reconstruction", multiple=True),
        "channels": ParameterDefinition("channels", ParameterType.CHANNELS, default=None,
                                        description="Overrides the experiment channels"),
        "ebn0_db": ParameterDefinition("ebn0_db", ParameterType.GRID, default=None,
                                       description="Overrides the experiment Eb/N0 grid"),
        "slot_length": ParameterDefinition("slot_length", ParameterType.INTEGER, (1, 2 ** 20), None,
                                           "OSM index slot length"),
    },
    "analysis": {
        "channels": ParameterDefinition("channels", ParameterType.CHANNELS, default=None,
                                        description="Channels to analyse"),
        "M": ParameterDefinition("M", ParameterType.INTEGER, (4, 2 ** 24), 16,
                                 "Constellation order", multiple=True),
        "sigma_n": ParameterDefinition("sigma_n", ParameterType.FLOAT, (1e-12, 1e12), ANALYSIS_SIGMA_N,
                                       "Noise standard deviation of the analysis"),
        "ebn0_db": ParameterDefinition("ebn0_db", ParameterType.GRID, default=None,
                                       description="Eb/N0 grid of the analysis"),
        "combination": ParameterDefinition("combination", ParameterType.CATEGORICAL, list(COMBINATIONS),
                                           DEFAULT_COMBINATION, "How detection outcomes are averaged"),
    },
    "se_table": {
        "points": ParameterDefinition("points", ParameterType.FLOAT, (0.0, 64.0), DEFAULT_SE_POINTS,
                                      "Spectral efficiencies in b/s/Hz", multiple=True),
    },
    "geometry": {
        "name": ParameterDefinition("name", ParameterType.STRING, default="geometry",
                                    description="Name of the resulting matrix"),
        "defaults": ParameterDefinition("defaults", ParameterType.SECTION),
        "links": ParameterDefinition("links", ParameterType.SECTION),
    },
}


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _check_value(path: str, definition: ParameterDefinition, value: Any) -> List[str]:
    kind = definition.param_type
    if kind == ParameterType.FLOAT and not _is_number(value):
        return [f"{path}: Expected float, got {type(value).__name__}"]
    if kind == ParameterType.INTEGER and not (isinstance(value, int) and not isinstance(value, bool)):
        return [f"{path}: Expected int, got {type(value).__name__}"]
    if kind == ParameterType.STRING and not isinstance(value, str):
        return [f"{path}: Expected string, got {type(value).__name__}"]

    if kind in (ParameterType.FLOAT, ParameterType.INTEGER) and definition.bounds is not None:
        min_val, max_val = definition.bounds
        if not (min_val <= value <= max_val):
            return [f"{path}: Value {value} out of bounds [{min_val}, {max_val}]"]
    if kind == ParameterType.CATEGORICAL:
        if definition.name == "scheme":
            try:
                Scheme.parse(value)
                return []
            except NdcOfdmError:
                pass
        if value not in definition.bounds:
            return [f"{path}: Value {value} not in allowed options {definition.bounds}"]
    if kind == ParameterType.GRID:
        return _check_grid(path, value)
    if kind == ParameterType.CHANNELS:
        return _check_channels(path, value)
    return []


def _check_grid(path: str, value: Any) -> List[str]:
    if isinstance(value, dict):
        errors = [f"{path}.{key}: Unknown parameter" for key in value if key not in ("start", "stop", "step")]
        for key in ("start", "stop", "step"):
            if key not in value:
                errors.append(f"{path}.{key}: Missing")
            elif not _is_number(value[key]):
                errors.append(f"{path}.{key}: Expected float, got {type(value[key]).__name__}")
        if not errors and value["step"] <= 0:
            errors.append(f"{path}.step: Must be positive")
        if not errors and value["stop"] < value["start"]:
            errors.append(f"{path}: stop is below start")
        return errors
    if isinstance(value, list):
        if not value:
            return [f"{path}: Eb/N0 grid is empty"]
        bad = [i for i, x in enumerate(value) if not _is_number(x)]
        return [f"{path}[{i}]: Expected float" for i in bad]
    return [f"{path}: Expected a list or a {{start, stop, step}} mapping"]


def _check_channels(path: str, value: Any) -> List[str]:
    items = value if isinstance(value, list) else [value]
    if not items:
        return [f"{path}: No channels given"]
    errors = []
    for i, item in enumerate(items):
        where = f"{path}[{i}]"
        if isinstance(item, str):
            continue
        if not isinstance(item, dict):
            errors.append(f"{where}: Expected a channel id or a mapping")
            continue
        unknown = [key for key in item if key not in ("name", "gains", "matrix_file")]
        errors.extend(f"{where}.{key}: Unknown parameter" for key in unknown)
        if ("gains" in item) == ("matrix_file" in item):
            errors.append(f"{where}: Give exactly one of 'gains' or 'matrix_file'")
    return errors


def validate_parameters(section: str, params: Dict[str, Any], path: str = "") -> Tuple[bool, List[str]]:
    """
    Validate one mapping of an experiment file against its section schema.

    Args:
        section: Schema section name
        params: Mapping read from the file
        path: Field path prefix used in messages

    Returns:
        Tuple of (is_valid, list_of_errors)
    """
    schema = SCHEMA[section]
    errors = []
    if not isinstance(params, dict):
        return False, [f"{path or section}: Expected a mapping, got {type(params).__name__}"]

    for name, value in params.items():
        where = f"{path}.{name}" if path else str(name)
        if name not in schema:
            errors.append(f"{where}: Unknown parameter")
            continue
        definition = schema[name]
        if definition.param_type == ParameterType.SECTION:
            continue
        values = value if definition.multiple and isinstance(value, list) else [value]
        if definition.multiple and isinstance(value, list) and not value:
            errors.append(f"{where}: Empty list")
        for item in values:
            errors.extend(_check_value(where, definition, item))

    return len(errors) == 0, errors


def expand_grid(value: Any) -> List[float]:
    """Turn a list or an inclusive {start, stop, step} range into Eb/N0 values."""
    if isinstance(value, dict):
        start, stop, step = float(value["start"]), float(value["stop"]), float(value["step"])
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + i * step, 10) for i in range(count)]
    return [float(x) for x in value]


def _as_list(value: Any) -> List[Any]:
    return list(value) if isinstance(value, list) else [value]


def resolve_channels(value: Any, base_dir: Optional[Path] = None) -> List[ChannelMatrix]:
    """Build channel matrices from ids, inline gains or matrix files."""
    channels = []
    for item in _as_list(value):
        if isinstance(item, str):
            channels.append(get_channel(item))
        elif "gains" in item:
            channels.append(ChannelMatrix(gains=np.array(item["gains"], dtype=np.float64),
                                          name=item.get("name", "custom")))
        else:
            path = Path(item["matrix_file"])
            if not path.is_absolute() and base_dir is not None:
                path = base_dir / path
            try:
                matrix = load_matrix(path)
            except OSError as e:
                raise ConfigError(f"Cannot read matrix file {path}: {e}")
            except ValueError as e:
                raise ConfigError(f"Malformed matrix file {path}: {e}")
            if "name" in item:
                matrix.name = item["name"]
            channels.append(matrix)
    return channels


@dataclass
class AnalysisPlan:
    """Analytical sweep settings."""
    channels: List[ChannelMatrix]
    orders: List[int]
    sigma_n: float
    ebn0_points: List[float]
    N: int
    N_t: int
    combination: str = DEFAULT_COMBINATION


@dataclass
class Experiment:
    """A parsed experiment file."""
    name: str
    seed: int
    raw: Dict[str, Any]
    description: str = ""
    sweeps: List[SweepConfig] = field(default_factory=list)
    analysis: Optional[AnalysisPlan] = None
    se_points: List[float] = field(default_factory=lambda: list(DEFAULT_SE_POINTS))
    transmitters: int = DEFAULT_TRANSMITTERS
    source: str = "<string>"


def parse_yaml(text: str, source: str = "<string>") -> Any:
    """
    Parse YAML text, reporting syntax errors with line and column.

    Raises:
        ConfigError: on malformed YAML
    """
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        problem = getattr(e, "problem", None) or str(e)
        if mark is not None:
            raise ConfigError(f"{source}:{mark.line + 1}:{mark.column + 1}: {problem}")
        raise ConfigError(f"{source}: {problem}")


def build_experiment(data: Any, source: str = "<string>", base_dir: Optional[Path] = None,
                     seed: Optional[int] = None) -> Experiment:
    """
    Validate a parsed experiment mapping and expand its sweeps.

    Args:
        data: Mapping parsed from YAML
        source: Name used in error messages
        base_dir: Directory that relative matrix paths are resolved against
        seed: Overrides the file's seed when given

    Returns:
        Experiment

    Raises:
        ConfigError: listing every validation error found
    """
    if data is None:
        data = {}
    _, errors = validate_parameters("experiment", data)
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: " + "; ".join(errors))

    stopping = data.get("stopping") or {}
    errors.extend(validate_parameters("stopping", stopping, "stopping")[1])

    sweeps = data.get("sweeps") or []
    if not isinstance(sweeps, list):
        errors.append("sweeps: Expected a list")
        sweeps = []
    for i, sweep in enumerate(sweeps):
        where = f"sweeps[{i}]"
        errors.extend(validate_parameters("sweep", sweep, where)[1])
        if isinstance(sweep, dict):
            for key in ("scheme", "M"):
                if key not in sweep:
                    errors.append(f"{where}.{key}: Missing")
            if "channels" not in sweep and "channels" not in data:
                errors.append(f"{where}.channels: No channels given here or at the top level")
            if "ebn0_db" not in sweep and "ebn0_db" not in data:
                errors.append(f"{where}.ebn0_db: No Eb/N0 grid given here or at the top level")

    analysis = data.get("analysis")
    if analysis is not None:
        errors.extend(validate_parameters("analysis", analysis, "analysis")[1])
        if isinstance(analysis, dict):
            if "channels" not in analysis and "channels" not in data:
                errors.append("analysis.channels: No channels given here or at the top level")
            if "ebn0_db" not in analysis and "ebn0_db" not in data:
                errors.append("analysis.ebn0_db: No Eb/N0 grid given here or at the top level")

    table = data.get("se_table")
    if table is not None:
        errors.extend(validate_parameters("se_table", table, "se_table")[1])

    if errors:
        raise ConfigError(f"{source}: invalid experiment:\n  " + "\n  ".join(errors))

    defaults = {name: d.default for name, d in SCHEMA["experiment"].items()}
    settings = {**defaults, **data}
    stop = {name: d.default for name, d in SCHEMA["stopping"].items()}
    stop.update(stopping)
    master_seed = int(seed) if seed is not None else int(settings["seed"])

    experiment = Experiment(
        name=str(settings["name"]),
        seed=master_seed,
        raw=data,
        description=str(settings["description"] or ""),
        transmitters=int(settings["transmitters"]),
        source=source,
    )

    try:
        _expand(experiment, sweeps, analysis, table, settings, stop, base_dir)
        for sweep_config in experiment.sweeps:
            sweep_config.validate()
    except ConfigError:
        raise
    except NdcOfdmError as e:
        raise ConfigError(f"{source}: {e}")

    logger.info(f"Loaded experiment {experiment.name} from {source}: {len(experiment.sweeps)} sweeps"
                + (", analysis" if experiment.analysis else ""))
    return experiment


def _expand(experiment: Experiment, sweeps: List[dict], analysis: Optional[dict], table: Optional[dict],
            settings: Dict[str, Any], stop: Dict[str, Any], base_dir: Optional[Path]) -> None:
    master_seed = experiment.seed
    for sweep in sweeps:
        channels = resolve_channels(sweep.get("channels", settings["channels"]), base_dir)
        grid = expand_grid(sweep.get("ebn0_db", settings["ebn0_db"]))
        scheme = Scheme.parse(sweep["scheme"])
        biases = _as_list(sweep.get("bias_db")) if scheme is Scheme.DCO_OSM else [None]
        recons = _as_list(sweep.get("reconstruction", "sign-select")) if scheme is Scheme.NDC else ["sign-select"]
        for channel, order, bias, recon in product(channels, _as_list(sweep["M"]), biases, recons):
            experiment.sweeps.append(SweepConfig(
                scheme=scheme,
                channel=channel,
                M=int(order),
                ebn0_points=grid,
                N=int(settings["frame_size"]),
                N_t=int(settings["transmitters"]),
                bias_db=None if bias is None else float(bias),
                reconstruction=recon,
                seed=master_seed,
                min_bits=int(stop["min_bits"]),
                min_errors=int(stop["min_errors"]),
                max_frames=int(stop["max_frames"]),
                round_frames=int(stop["round_frames"]),
                calibration_frames=int(settings["calibration_frames"]),
                slot_length=sweep.get("slot_length"),
            ))

    if analysis is not None:
        experiment.analysis = AnalysisPlan(
            channels=resolve_channels(analysis.get("channels", settings["channels"]), base_dir),
            orders=[int(m) for m in _as_list(analysis.get("M", 16))],
            sigma_n=float(analysis.get("sigma_n", ANALYSIS_SIGMA_N)),
            ebn0_points=expand_grid(analysis.get("ebn0_db", settings["ebn0_db"])),
            N=int(settings["frame_size"]),
            N_t=int(settings["transmitters"]),
            combination=str(analysis.get("combination", DEFAULT_COMBINATION)),
        )

    if table is not None:
        experiment.se_points = [float(x) for x in _as_list(table.get("points", DEFAULT_SE_POINTS))]


def load_experiment(path: Union[str, Path], seed: Optional[int] = None) -> Experiment:
    """Load and validate an experiment file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"Cannot read {path}: {e}")
    return build_experiment(parse_yaml(text, str(path)), str(path), path.parent, seed)


def available_recipes() -> List[str]:
    folder = resources.files(RECIPE_PACKAGE)
    return sorted(p.name[:-5] for p in folder.iterdir() if p.name.endswith(".yaml"))


def recipe_text(name: str) -> str:
    resource = resources.files(RECIPE_PACKAGE) / f"{name}.yaml"
    if not resource.is_file():
        raise ConfigError(f"Unknown recipe: {name} (available: {', '.join(available_recipes())})")
    return resource.read_text(encoding="utf-8")


def load_recipe(name: str, seed: Optional[int] = None) -> Experiment:
    """Load one of the bundled experiment recipes."""
    source = f"recipe:{name}"
    return build_experiment(parse_yaml(recipe_text(name), source), source, None, seed)


_GEOMETRY_FIELDS = set(LinkGeometry.__dataclass_fields__)


def load_geometry(path: Union[str, Path]) -> Tuple[str, Dict[tuple, LinkGeometry]]:
    """
    Load a link-geometry file for the channel-gain command.

    The file holds an optional name, optional defaults shared by every link
    and a list of links, each with 1-based rx and tx plus geometry fields.

    Returns:
        Tuple of (matrix name, {(rx, tx): LinkGeometry})
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"Cannot read {path}: {e}")
    data = parse_yaml(text, str(path))

    is_valid, errors = validate_parameters("geometry", data or {})
    data = data or {}
    defaults = data.get("defaults") or {}
    links = data.get("links")
    if not isinstance(defaults, dict):
        errors.append("defaults: Expected a mapping")
        defaults = {}
    errors.extend(f"defaults.{key}: Unknown parameter" for key in defaults if key not in _GEOMETRY_FIELDS)
    if not isinstance(links, list) or not links:
        errors.append("links: Expected a non-empty list")
        links = []
    for i, link in enumerate(links):
        if not isinstance(link, dict):
            errors.append(f"links[{i}]: Expected a mapping")
            continue
        for key in link:
            if key not in _GEOMETRY_FIELDS and key not in ("rx", "tx"):
                errors.append(f"links[{i}].{key}: Unknown parameter")
        for key in ("rx", "tx"):
            if not isinstance(link.get(key), int) or link.get(key) < 1:
                errors.append(f"links[{i}].{key}: Expected a positive int")
        missing = [k for k in ("semiangle", "detector_area", "distance") if k not in link and k not in defaults]
        errors.extend(f"links[{i}].{k}: Missing" for k in missing)
    if errors:
        raise ConfigError(f"{path}: invalid geometry:\n  " + "\n  ".join(errors))

    try:
        geometry = link_geometries(links, defaults)
    except (NdcOfdmError, TypeError) as e:
        raise ConfigError(f"{path}: {e}")
    return str(data.get("name", path.stem)), geometry
