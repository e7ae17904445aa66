"""
Machine-readable campaign output.

CSV layout: the cell table (header + one row per cell), a blank line, then
the fit table. JSON layout: {"manifest": ..., "cells": [...], "fits": [...]}
with the same column names. Floats are written with repr, which round-trips
exactly; undefined values are empty in CSV and null in JSON.
"""

import csv
import io
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import List, Optional, Tuple, Union

from .config import Config
from .experiment import CampaignResult, EnergyStats, ExperimentConfig, ScalingFit

logger = logging.getLogger(__name__)

CELL_COLUMNS = [
    "protocol", "n", "lambda", "nreal", "starts_or_budget",
    "runs", "tau", "tau_stderr", "h_n", "h_n_stderr",
]
FIT_COLUMNS = ["lambda", "exponent", "prefactor", "r_squared", "sizes_used", "sizes_excluded"]

FORMATS = ("csv", "json")


@dataclass
class RunManifest:
    """Provenance of one campaign run."""

    config_echo: ExperimentConfig
    build_version: str = Config.BUILD_VERSION
    generator_version: str = Config.GENERATOR_VERSION
    started_at: datetime = field(default_factory=datetime.now)
    finished_at: Optional[datetime] = None
    warnings: List[str] = field(default_factory=list)

    def finish(self, warnings: List[str]) -> "RunManifest":
        self.finished_at = datetime.now()
        self.warnings = list(warnings)
        return self

    def to_dict(self) -> dict:
        return {
            "config_echo": self.config_echo.to_dict(),
            "build_version": self.build_version,
            "generator_version": self.generator_version,
            "started_at": self.started_at.isoformat(),
            "finished_at": self.finished_at.isoformat() if self.finished_at else None,
            "warnings": list(self.warnings),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunManifest":
        return cls(
            config_echo=ExperimentConfig.from_dict(data["config_echo"]),
            build_version=data.get("build_version", ""),
            generator_version=data.get("generator_version", ""),
            started_at=datetime.fromisoformat(data["started_at"]),
            finished_at=datetime.fromisoformat(data["finished_at"]) if data.get("finished_at") else None,
            warnings=list(data.get("warnings", [])),
        )


# ============================================================
# WRITING
# ============================================================

def emit_results(
    result: CampaignResult,
    manifest: RunManifest,
    fmt: str = "csv",
    destination: Union[str, Path, None] = None,
) -> None:
    """
    Write results as CSV or JSON to a path, or to stdout when destination
    is None or "-". Raises OSError when the destination is not writable.
    """
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}, expected one of {FORMATS}")
    if not result.stats:
        raise ValueError("no campaign cells to write")

    text = render_csv(result.stats, result.fits) if fmt == "csv" else render_json(result, manifest)

    if destination is None or str(destination) == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return

    path = Path(destination)
    if path.parent != Path("."):
        path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        f.write(text)
    logger.info(f"Wrote {len(result.stats)} cells and {len(result.fits)} fits to {path}")


def render_csv(stats: List[EnergyStats], fits: List[ScalingFit]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")

    writer.writerow(CELL_COLUMNS)
    for cell in stats:
        row = cell.to_row()
        writer.writerow([_csv_value(row[col]) for col in CELL_COLUMNS])

    writer.writerow([])
    writer.writerow(FIT_COLUMNS)
    for fit in fits:
        row = fit.to_dict()
        writer.writerow([_csv_value(row[col]) for col in FIT_COLUMNS])

    return buffer.getvalue()


def render_json(result: CampaignResult, manifest: RunManifest) -> str:
    payload = {
        "manifest": manifest.to_dict(),
        "cells": [{col: _json_value(cell.to_row()[col]) for col in CELL_COLUMNS} for cell in result.stats],
        "fits": [{col: _json_value(fit.to_dict()[col]) for col in FIT_COLUMNS} for fit in result.fits],
    }
    return json.dumps(payload, indent=2, allow_nan=False) + "\n"


def write_fits_csv(fits: List[ScalingFit], destination: Union[str, Path, None]) -> None:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(FIT_COLUMNS)
    for fit in fits:
        row = fit.to_dict()
        writer.writerow([_csv_value(row[col]) for col in FIT_COLUMNS])

    if destination is None or str(destination) == "-":
        sys.stdout.write(buffer.getvalue())
        return
    Path(destination).write_text(buffer.getvalue(), encoding="utf-8")


def _csv_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value) if math.isfinite(value) else ""
    if isinstance(value, (list, tuple)):
        return ";".join(str(v) for v in value)
    return str(value)


def _json_value(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


# ============================================================
# READING
# ============================================================

def read_results(path: Union[str, Path]) -> Tuple[List[EnergyStats], List[ScalingFit], Optional[RunManifest]]:
    """Parse a results file written by emit_results (CSV or JSON)."""
    path = Path(path)
    with open(path, encoding="utf-8") as f:
        text = f.read()

    if path.suffix.lower() == ".json" or text.lstrip().startswith("{"):
        data = json.loads(text)
        manifest = RunManifest.from_dict(data["manifest"]) if data.get("manifest") else None
        return (
            [EnergyStats.from_dict(c) for c in data.get("cells", [])],
            [ScalingFit.from_dict(f) for f in data.get("fits", [])],
            manifest,
        )
    cells, fits = _parse_csv(text)
    return cells, fits, None


def _parse_csv(text: str) -> Tuple[List[EnergyStats], List[ScalingFit]]:
    rows = list(csv.reader(io.StringIO(text)))
    try:
        split = rows.index([])
    except ValueError:
        split = len(rows)

    cell_rows, fit_rows = rows[:split], rows[split + 1:]
    cells = [EnergyStats.from_dict(dict(zip(cell_rows[0], row))) for row in cell_rows[1:] if row]

    fits = []
    if fit_rows:
        header = fit_rows[0]
        for row in fit_rows[1:]:
            if not row:
                continue
            data = dict(zip(header, row))
            data["sizes_used"] = _split_sizes(data.get("sizes_used", ""))
            data["sizes_excluded"] = _split_sizes(data.get("sizes_excluded", ""))
            fits.append(ScalingFit.from_dict(data))
    return cells, fits


def _split_sizes(value: str) -> List[int]:
    return [int(v) for v in value.split(";") if v]


def load_config_file(path: Union[str, Path]) -> dict:
    """
    Read a campaign config file (JSON object of ExperimentConfig fields).
    A JSON results file is accepted too; its embedded config_echo is used.
    """
    with open(path, encoding="utf-8") as f:
        data = json.load(f)
    if not isinstance(data, dict):
        raise ValueError(f"{path}: config file must contain a JSON object")
    if "manifest" in data:
        return data["manifest"]["config_echo"]
    return data

