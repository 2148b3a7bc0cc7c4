"""
Utility functions for result files and configuration handling.
Supports: CSV (with '#' provenance header), JSON, Excel (.xlsx)
"""

import io
import json
import logging
import os
import sys
from typing import Dict, Optional, Tuple

import numpy as np
import pandas as pd
from openpyxl.styles import Font
from openpyxl.utils import get_column_letter

from error_logger import UsageError
from models import TOOL_VERSION


logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


def provenance(config, sieve_limit: Optional[int] = None, **extra) -> Dict[str, str]:
    """Metadata written ahead of every artifact. No timestamps: equal inputs, equal bytes."""
    meta = {
        "tool": "divlab",
        "version": TOOL_VERSION,
        "command": config.command if config is not None else "",
        "config_hash": config.hash() if config is not None else "",
        "sieve_limit": "" if sieve_limit is None else str(int(sieve_limit)),
    }
    for key, value in extra.items():
        meta[key] = str(value)
    return meta


def frame_to_csv_text(df: pd.DataFrame, meta: Dict[str, str]) -> str:
    """CSV text: '#'-prefixed metadata lines, then header and rows."""
    buffer = io.StringIO()
    for key, value in meta.items():
        buffer.write(f"# {key}: {value}\n")
    df.to_csv(buffer, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return buffer.getvalue()


def load_result_csv(filepath: str) -> Tuple[Dict[str, str], pd.DataFrame]:
    """Read a CSV written by ``frame_to_csv_text``."""
    meta = {}
    with open(filepath, "r", encoding="utf-8") as f:
        for line in f:
            if not line.startswith("#"):
                break
            key, _, value = line[1:].strip().partition(":")
            meta[key.strip()] = value.strip()
    df = pd.read_csv(filepath, comment="#")
    return meta, df


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return str(obj)


def to_json_text(data, meta: Dict[str, str]) -> str:
    return json.dumps({"metadata": meta, "data": data}, indent=2,
                      sort_keys=False, default=_json_default) + "\n"


def export_to_excel_formatted(sheets: Dict[str, pd.DataFrame], filepath: str,
                              meta: Optional[Dict[str, str]] = None):
    """Export result frames to Excel with a bold frozen header and sized columns."""
    with pd.ExcelWriter(filepath, engine="openpyxl") as writer:
        for sheet_name, sheet_df in sheets.items():
            sheet_df.to_excel(writer, index=False, sheet_name=sheet_name)
            _format_sheet(writer.sheets[sheet_name])

        if meta:
            meta_df = pd.DataFrame({"key": list(meta.keys()), "value": list(meta.values())})
            meta_df.to_excel(writer, index=False, sheet_name="provenance")
            _format_sheet(writer.sheets["provenance"])


def _format_sheet(ws):
    ws.freeze_panes = "A2"

    header_font = Font(bold=True)
    for cell in ws[1]:
        cell.font = header_font

    for col_idx, column_cells in enumerate(ws.columns, start=1):
        max_length = 0
        for cell in column_cells:
            if cell.value is not None:
                max_length = max(max_length, len(str(cell.value)))
        ws.column_dimensions[get_column_letter(col_idx)].width = min(max_length + 2, 50)

    ws.auto_filter.ref = ws.dimensions


def write_result(df: pd.DataFrame, config, sieve_limit: Optional[int] = None,
                 json_data=None, **extra) -> Optional[str]:
    """Write ``df`` in the configured format to ``config.output`` or stdout.

    Returns the written path, or None for stdout.
    """
    meta = provenance(config, sieve_limit, **extra)
    fmt = getattr(config, "fmt", "csv")
    path = getattr(config, "output", None)

    if fmt == "xlsx":
        if not path:
            raise UsageError("xlsx output needs --output")
        export_to_excel_formatted({"results": df}, path, meta)
        logger.info(f"Wrote {len(df)} rows to {path}")
        return path

    if fmt == "json":
        payload = json_data if json_data is not None else df.to_dict(orient="records")
        text = to_json_text(payload, meta)
    else:
        text = frame_to_csv_text(df, meta)

    if not path:
        sys.stdout.write(text)
        sys.stdout.flush()
        return None

    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(text)
    logger.info(f"Wrote {len(df)} rows to {path} ({format_file_size(len(text))})")
    return path


def load_config_file(filepath: str) -> Dict[str, str]:
    """Parse a flat key=value file; '#' starts a comment."""
    if not os.path.exists(filepath):
        raise UsageError(f"config file not found: {filepath}")

    values = {}
    with open(filepath, "r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{filepath}:{lineno}: expected key=value")
            key, value = line.split("=", 1)
            values[key.strip()] = value.strip()
    logger.debug(f"Loaded {len(values)} keys from {filepath}")
    return values


def format_file_size(size_bytes: int) -> str:
    """Format file size in human-readable format."""
    for unit in ['B', 'KB', 'MB', 'GB']:
        if size_bytes < 1024.0:
            return f"{size_bytes:.1f} {unit}"
        size_bytes /= 1024.0
    return f"{size_bytes:.1f} TB"
