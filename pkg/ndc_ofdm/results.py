"""
Result containers and file emission.

BER curves from the Monte Carlo engine and from the analytical pipeline share
one row schema so both can be written to the same CSV/JSON files. Files are
written to a temporary name first and renamed into place.
"""

import hashlib
import json
import logging
import math
import os
import tempfile
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Union

import pandas as pd

logger = logging.getLogger(__name__)

CSV_COLUMNS = ["source", "scheme", "channel", "M", "bias_db", "reconstruction",
               "ebn0_db", "bits", "errors", "ber"]


@dataclass
class BerPoint:
    """
    One Eb/N0 point of a BER curve.

    Attributes:
        ebn0_db: Eb/N0 in dB (may be +inf for the noiseless sentinel)
        bits: Information bits counted (0 for analytic points)
        errors: Bit errors counted (0 for analytic points)
        ber: Bit error rate
        low_confidence: Frame cap reached before the error target
        index_bits: Spatial decisions counted: per-sample LED decisions for
            NDC, index bits for DCO-OSM and ACO-OSM
        index_errors: Wrong spatial decisions (NDC) or index bit errors (OSM)
    """
    ebn0_db: float
    bits: int
    errors: int
    ber: float
    low_confidence: bool = False
    frames: int = 0
    index_bits: int = 0
    index_errors: int = 0

    @property
    def index_error_rate(self) -> float:
        return self.index_errors / self.index_bits if self.index_bits else 0.0


@dataclass
class BerCurve:
    """BER points plus the metadata of the run that produced them."""
    source: str
    scheme: str
    channel: str
    M: int
    bias_db: Optional[float] = None
    reconstruction: Optional[str] = None
    seed: Optional[int] = None
    points: List[BerPoint] = field(default_factory=list)

    def __post_init__(self):
        self.points = sorted(self.points, key=lambda p: p.ebn0_db)

    @property
    def low_confidence(self) -> bool:
        return any(p.low_confidence for p in self.points)

    @property
    def label(self) -> str:
        parts = [self.source, self.scheme, self.channel, f"M{self.M}"]
        if self.bias_db is not None:
            parts.append(f"{self.bias_db:g}dB")
        if self.reconstruction:
            parts.append(self.reconstruction)
        return "/".join(parts)

    def rows(self) -> List[Dict[str, Any]]:
        return [{
            "source": self.source,
            "scheme": self.scheme,
            "channel": self.channel,
            "M": self.M,
            "bias_db": self.bias_db,
            "reconstruction": self.reconstruction or "",
            "ebn0_db": p.ebn0_db,
            "bits": p.bits,
            "errors": p.errors,
            "ber": p.ber,
        } for p in self.points]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows(), columns=CSV_COLUMNS)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["low_confidence"] = self.low_confidence
        return data


def curves_to_frame(curves: Iterable[BerCurve]) -> pd.DataFrame:
    """Stack curves into one table with the CSV column order."""
    frames = [curve.to_frame() for curve in curves]
    if not frames:
        return pd.DataFrame(columns=CSV_COLUMNS)
    return pd.concat(frames, ignore_index=True)


def _format_optional(value: Any) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    return f"{float(value):g}"


# Fixed per-column text formats keep reruns byte-identical
CSV_FORMATTERS = {
    "M": lambda value: str(int(value)),
    "bias_db": _format_optional,
    "ebn0_db": lambda value: f"{float(value):g}",
    "bits": lambda value: str(int(value)),
    "errors": lambda value: str(int(value)),
    "ber": lambda value: f"{float(value):.6e}",
}


def render_csv(curves: Iterable[BerCurve]) -> str:
    """CSV text of the stacked curves with the fixed column formats."""
    frame = curves_to_frame(curves)
    for column, formatter in CSV_FORMATTERS.items():
        frame[column] = frame[column].map(formatter).astype(object)
    return frame.to_csv(index=False, lineterminator="\n")


def render_json(curves: Iterable[BerCurve]) -> str:
    return json.dumps([curve.to_dict() for curve in curves], indent=2, default=_json_default) + "\n"


def _json_default(value: Any) -> Any:
    if hasattr(value, "item"):
        return value.item()
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def atomic_write(path: Union[str, Path], text: str) -> Path:
    """Write text to a sibling temp file, then rename it over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp_name, path)
    except Exception:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    return path


def write_curves(path: Union[str, Path], curves: List[BerCurve], fmt: str = "csv") -> Path:
    """
    Write curves as CSV or JSON.

    Args:
        path: Destination file
        curves: Curves to write, in order
        fmt: 'csv' or 'json'

    Returns:
        Path written
    """
    text = render_csv(curves) if fmt == "csv" else render_json(curves)
    written = atomic_write(path, text)
    logger.info(f"Wrote {sum(len(c.points) for c in curves)} points to {written}")
    return written


def config_digest(config: Dict[str, Any]) -> str:
    """sha256 of the canonical JSON form of a configuration mapping."""
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass
class RunManifest:
    """Provenance record written next to every result file."""
    command: str
    config_digest: str
    seed: Optional[int]
    version: str
    started_at: str
    finished_at: Optional[str] = None
    outputs: List[str] = field(default_factory=list)
    low_confidence: bool = False

    def finish(self, outputs: Iterable[Union[str, Path]]) -> "RunManifest":
        self.finished_at = utc_now()
        self.outputs = [str(p) for p in outputs]
        return self

    def write(self, path: Union[str, Path]) -> Path:
        return atomic_write(path, json.dumps(asdict(self), indent=2) + "\n")
