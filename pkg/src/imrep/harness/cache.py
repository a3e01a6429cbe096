"""Content-addressed feature cache.

Keys hash the configuration subset that affects the features together with
the image content digest, so any config change produces a miss. Corrupt
entries (checksum failures) are treated as misses with a warning.
"""

from __future__ import annotations

import hashlib
import os
import warnings
from pathlib import Path

import numpy as np

from imrep.errors import DataError
from imrep.harness.container import read_feature_cache, write_feature_cache

CACHE_ROOT_ENV = "IMREP_CACHE_ROOT"


def cache_key(*parts) -> str:
    """Stable hex key from heterogeneous parts (dicts are canonicalised)."""
    h = hashlib.sha256()
    for part in parts:
        if isinstance(part, dict):
            for k in sorted(part):
                h.update(f"{k}={part[k]!r};".encode("utf-8"))
        elif isinstance(part, bytes):
            h.update(part)
        else:
            h.update(repr(part).encode("utf-8"))
        h.update(b"\x1f")
    return h.hexdigest()


def file_digest(path) -> str:
    try:
        return hashlib.sha256(Path(path).read_bytes()).hexdigest()
    except FileNotFoundError:
        raise DataError(f"missing image file: {path}")


class FeatureCache:
    """Directory of per-key feature arrays; writes are atomic renames."""

    def __init__(self, root=None):
        if root is None:
            root = os.environ.get(CACHE_ROOT_ENV, ".imrep-cache")
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, key: str) -> Path:
        return self.root / f"{key}.dvk"

    def store(self, key: str, values: np.ndarray) -> None:
        target = self._path(key)
        tmp = target.with_suffix(f".tmp{os.getpid()}")
        write_feature_cache(tmp, values)
        os.replace(tmp, target)

    def load(self, key: str):
        """The cached array, or None on miss/corruption (with a warning)."""
        target = self._path(key)
        if not target.is_file():
            return None
        try:
            return read_feature_cache(target)
        except DataError as exc:
            warnings.warn(f"cache entry {key} unreadable ({exc}); recomputing")
            return None
