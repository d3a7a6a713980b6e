"""Content-addressed result cache.

Keys are SHA-256 digests of the canonical JSON of the configuration (minus
``output.dir``) plus the artifact kind.  Entries are written to a temporary
file and renamed into place, so readers never see partial files.
"""

from __future__ import annotations

import copy
import hashlib
import json
import os
import tempfile
from pathlib import Path

ENV_VAR = "DBSPEC_CACHE_DIR"


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def cache_key(config: dict, kind: str) -> str:
    """Hash of everything that can change the artifact ``kind``."""
    d = copy.deepcopy(config)
    d.get("output", {}).pop("dir", None)
    payload = canonical_json({"kind": kind, "config": d})
    return hashlib.sha256(payload.encode()).hexdigest()


def cache_dir(out_dir) -> Path:
    env = os.environ.get(ENV_VAR)
    return Path(env) if env else Path(out_dir) / ".cache"


def atomic_write(path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class Cache:
    """Files named ``<key>.<name>`` under one directory."""

    def __init__(self, root):
        self.root = Path(root)

    def path(self, key: str, name: str) -> Path:
        return self.root / f"{key}.{name}"

    def get(self, key: str, name: str) -> bytes | None:
        p = self.path(key, name)
        return p.read_bytes() if p.is_file() else None

    def put(self, key: str, name: str, data: bytes) -> None:
        atomic_write(self.path(key, name), data)
