"""
File outputs: CSV tables with 17 significant digits and JSON documents with
sorted keys, both byte-for-byte reproducible for a fixed input.
"""
import dataclasses
import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence

import numpy as np

logger = logging.getLogger(__name__)

CSV_FMT = "%.17g"


def _ensure_parent(path) -> Path:
    path = Path(path)
    if path.parent and not path.parent.exists():
        os.makedirs(path.parent, exist_ok=True)
    return path


def write_csv(path, columns: Dict[str, Sequence[float]]) -> Path:
    path = _ensure_parent(path)
    names = list(columns)
    data = np.column_stack([np.asarray(columns[k], dtype=float) for k in names])
    np.savetxt(path, data, fmt=CSV_FMT, delimiter=",", header=",".join(names), comments="")
    logger.info(f"wrote {path} ({len(data)} rows)")
    return path


def write_rows(path, header: List[str], rows: Iterable[Sequence[Any]]) -> Path:
    """Mixed-type rows; floats get the same 17-digit format as write_csv."""
    path = _ensure_parent(path)
    cells = [[CSV_FMT % v if isinstance(v, (float, np.floating)) else str(v) for v in row] for row in rows]
    data = np.array(cells, dtype=str).reshape(-1, len(header))
    np.savetxt(path, data, fmt="%s", delimiter=",", header=",".join(header), comments="")
    logger.info(f"wrote {path} ({len(data)} rows)")
    return path


def to_jsonable(obj: Any) -> Any:
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return to_jsonable(dataclasses.asdict(obj))
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return value if np.isfinite(value) else None
    return obj


def write_json(path, doc: Any) -> Path:
    path = _ensure_parent(path)
    with open(path, "w") as f:
        json.dump(to_jsonable(doc), f, indent=2, sort_keys=True)
        f.write("\n")
    logger.info(f"wrote {path}")
    return path
