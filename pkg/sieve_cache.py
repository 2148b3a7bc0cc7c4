"""
On-disk store for sieved divisor tables and precomputed constants.
"""

import hashlib
import json
import logging
import os
import struct
from pathlib import Path
from typing import Callable, List, Optional

import numpy as np

from error_logger import DomainError
from models import DivisorTable
from utils import format_file_size


logger = logging.getLogger(__name__)

MAGIC = b"DKTB"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIQQI4x")   # 32 bytes


def default_cache_dir() -> Path:
    env = os.environ.get("DIVLAB_CACHE_DIR")
    if env:
        return Path(env)
    return Path.home() / ".cache" / "divlab"


def _checksum(payload: bytes) -> int:
    digest = hashlib.blake2b(payload, digest_size=8).digest()
    return int.from_bytes(digest, "little")


def save_table(table: DivisorTable, path) -> Path:
    """Write ``table`` in the DKTB binary format."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = table.values.astype("<i8").tobytes()
    header = _HEADER.pack(MAGIC, table.k, table.limit, _checksum(payload), FORMAT_VERSION)

    tmp = path.with_suffix(path.suffix + ".part")
    with open(tmp, "wb") as f:
        f.write(header)
        f.write(payload)
    os.replace(tmp, path)
    logger.debug(f"Saved {table!r} to {path}")
    return path


def load_table(path) -> DivisorTable:
    """Read a DKTB file, checking magic, version and checksum."""
    path = Path(path)
    with open(path, "rb") as f:
        head = f.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise DomainError(f"{path}: truncated header")
        magic, k, limit, checksum, version = _HEADER.unpack(head)
        if magic != MAGIC:
            raise DomainError(f"{path}: bad magic {magic!r}")
        if version != FORMAT_VERSION:
            raise DomainError(f"{path}: unsupported format version {version}")
        payload = f.read()

    if len(payload) != 8 * limit:
        raise DomainError(f"{path}: expected {limit} values, found {len(payload) // 8}")
    if _checksum(payload) != checksum:
        raise DomainError(f"{path}: checksum mismatch")
    values = np.frombuffer(payload, dtype="<i8").astype(np.int64)
    return DivisorTable(k, limit, values)


class SieveCache:
    """Manages sieved tables and JSON constants under one cache directory."""

    def __init__(self, cache_dir=None):
        self.cache_dir = Path(cache_dir) if cache_dir else default_cache_dir()
        os.makedirs(self.cache_dir, exist_ok=True)

    def table_path(self, k: int, N: int) -> Path:
        return self.cache_dir / f"d{k}_N{N}_v{FORMAT_VERSION}.dktb"

    def load_or_build(self, k: int, N: int,
                      builder: Optional[Callable[[int, int], DivisorTable]] = None) -> DivisorTable:
        """Cached table for (k, N), sieving and storing it on a miss."""
        path = self.table_path(k, N)
        if path.exists():
            try:
                table = load_table(path)
                logger.info(f"Loaded d_{k} table for N={N} from cache")
                return table
            except (DomainError, OSError) as e:
                logger.warning(f"Discarding unreadable cache entry {path.name}: {e}")

        if builder is None:
            from arith_core import sieve_dk
            builder = sieve_dk
        table = builder(k, N)
        try:
            save_table(table, path)
        except OSError as e:
            logger.warning(f"Could not store {path.name}: {e}")
        return table

    def list_tables(self) -> List[dict]:
        """Stored tables with their header fields and sizes."""
        tables = []
        for path in sorted(self.cache_dir.glob("*.dktb")):
            try:
                with open(path, "rb") as f:
                    magic, k, limit, _, version = _HEADER.unpack(f.read(_HEADER.size))
            except (OSError, struct.error):
                continue
            if magic != MAGIC:
                continue
            size = path.stat().st_size
            tables.append({
                "name": path.name,
                "k": k,
                "N": limit,
                "version": version,
                "size": format_file_size(size),
                "filepath": str(path),
            })
        return tables

    def delete_table(self, k: int, N: int) -> bool:
        path = self.table_path(k, N)
        try:
            if path.exists():
                os.remove(path)
                return True
            return False
        except OSError as e:
            logger.error(f"Error deleting {path}: {e}")
            return False

    def clear(self) -> int:
        """Remove every stored table; returns how many were deleted."""
        removed = 0
        for path in self.cache_dir.glob("*.dktb"):
            try:
                os.remove(path)
                removed += 1
            except OSError as e:
                logger.error(f"Error deleting {path}: {e}")
        logger.info(f"Cleared {removed} cached tables from {self.cache_dir}")
        return removed

    def load_json(self, name: str) -> Optional[dict]:
        path = self.cache_dir / name
        if not path.exists():
            return None
        try:
            with open(path, "r", encoding="utf-8") as f:
                return json.load(f)
        except (OSError, ValueError) as e:
            logger.warning(f"Error loading {path}: {e}")
            return None

    def save_json(self, name: str, data: dict) -> bool:
        path = self.cache_dir / name
        try:
            with open(path, "w", encoding="utf-8") as f:
                json.dump(data, f, indent=2)
            return True
        except OSError as e:
            logger.warning(f"Error saving {path}: {e}")
            return False
