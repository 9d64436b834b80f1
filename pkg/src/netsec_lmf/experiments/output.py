"""
Table writers: CSV (header always present, %.17g floats) and JSON (one
object with "meta" and "rows"). Output carries no timestamps so identical
inputs give identical bytes.
"""
import io
import json
import math
import sys
from pathlib import Path
from typing import Any, Optional

import numpy as np
import pandas as pd

from .. import config


def _plain(value: Any) -> Any:
    """Convert numpy scalars/arrays and NaN into JSON-ready values."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, float) and (math.isnan(value) or math.isinf(value)):
        return None if math.isnan(value) else ("inf" if value > 0 else "-inf")
    return value


def frame_records(frame: pd.DataFrame) -> list:
    return [_plain(row) for row in frame.to_dict(orient="records")]


def render_csv(frame: pd.DataFrame) -> str:
    buffer = io.StringIO()
    frame.to_csv(buffer, index=False, float_format=config.FLOAT_FORMAT, lineterminator="\n")
    return buffer.getvalue()


def render_json(rows, meta: Optional[dict] = None) -> str:
    if isinstance(rows, pd.DataFrame):
        rows = frame_records(rows)
    payload = {"meta": _plain(meta or {}), "rows": _plain(rows)}
    return json.dumps(payload, indent=2, allow_nan=False) + "\n"


def emit(rows, fmt: str = "csv", out=None, meta: Optional[dict] = None) -> str:
    """
    Render rows (a DataFrame or a list of dicts) and write them to `out`,
    or to stdout when out is None. Returns the rendered text.
    """
    frame = rows if isinstance(rows, pd.DataFrame) else pd.DataFrame(rows)
    text = render_csv(frame) if fmt == "csv" else render_json(frame, meta)
    if out is None:
        sys.stdout.write(text)
    else:
        out = Path(out)
        out.parent.mkdir(parents=True, exist_ok=True)
        with open(out, "w", encoding="utf-8", newline="") as f:
            f.write(text)
    return text
