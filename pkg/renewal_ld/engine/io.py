"""Artifact reading and writing.

CSVs carry full double precision. Every artifact gets a ``<stem>.meta.json``
sidecar holding the resolved experiment configuration and toolkit version;
wall-clock data goes only into the run metadata file so that repeated runs
produce byte-identical artifacts.
"""

import json
import logging
from pathlib import Path
from typing import Any

import pandas as pd
from pydantic import BaseModel

from renewal_ld import __version__
from renewal_ld.engine.curves import CurveSeries
from renewal_ld.errors import OutputError

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, BaseModel):
        return obj.model_dump(mode="json")
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "item"):
        return obj.item()
    return obj


def ensure_dir(path: str | Path) -> Path:
    """Create the output directory if needed.

    Raises:
        OutputError: If the directory cannot be created.
    """
    path = Path(path)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OutputError(f"Cannot create output directory {path}: {e}") from e
    return path


def write_json(obj: Any, path: str | Path) -> Path:
    """Write a JSON document with sorted keys."""
    path = Path(path)
    try:
        path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as e:
        raise OutputError(f"Cannot write {path}: {e}") from e
    logger.debug(f"Wrote {path}")
    return path


def sidecar_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(f"{path.stem}.meta.json")


def write_sidecar(path: str | Path, config: Any, extra: dict | None = None) -> Path:
    """Write the metadata sidecar of an artifact."""
    meta = {"artifact": Path(path).name, "config": config, "version": __version__}
    if extra:
        meta["metadata"] = extra
    return write_json(meta, sidecar_path(path))


def write_frame(frame: pd.DataFrame, path: str | Path, config: Any, extra: dict | None = None) -> Path:
    """Write a CSV at full precision plus its sidecar."""
    path = Path(path)
    try:
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    except OSError as e:
        raise OutputError(f"Cannot write {path}: {e}") from e
    write_sidecar(path, config, extra)
    logger.info(f"Wrote {path} ({len(frame)} rows)")
    return path


def write_curve(curve: CurveSeries, out_dir: str | Path, config: Any) -> Path:
    """Write a curve as ``<out_dir>/<curve.name>.csv``."""
    return write_frame(curve.to_frame(), Path(out_dir) / f"{curve.name}.csv", config, curve.metadata)


def write_model(model: BaseModel, path: str | Path, config: Any) -> Path:
    """Write a pydantic record as JSON plus its sidecar."""
    write_json(model, path)
    write_sidecar(path, config)
    logger.info(f"Wrote {path}")
    return Path(path)


def read_frame(path: str | Path) -> pd.DataFrame:
    """Read a CSV artifact.

    Raises:
        OutputError: If the file cannot be read or parsed.
    """
    try:
        return pd.read_csv(path, float_precision="round_trip")
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise OutputError(f"Cannot read {path}: {e}") from e


def read_curve(path: str | Path) -> CurveSeries:
    """Read a curve CSV, with metadata from its sidecar when present."""
    path = Path(path)
    frame = read_frame(path)
    metadata: dict = {}
    side = sidecar_path(path)
    if side.exists():
        try:
            metadata = json.loads(side.read_text(encoding="utf-8")).get("metadata", {}) or {}
        except (OSError, json.JSONDecodeError) as e:
            raise OutputError(f"Cannot read sidecar {side}: {e}") from e
    try:
        return CurveSeries.from_frame(path.stem, frame, metadata)
    except ValueError as e:
        raise OutputError(f"{path} is not a curve: {e}") from e
