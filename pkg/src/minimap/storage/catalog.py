"""Filesystem catalog: JSON-lines registry of generated artifacts.

One line per artifact. Appends take an exclusive flock and write the whole
line in a single call, so concurrent generators on one machine cannot
interleave bytes. Loading never fails on a bad line; it reports the line
number and keeps going, because one corrupt entry must not brick every job
that consults the catalog.
"""

from __future__ import annotations

import fcntl
import hashlib
import json
import os
import time
from dataclasses import dataclass, field
from typing import Optional

from minimap.errors import LockError

_LOCK_ATTEMPTS = 50
_LOCK_WAIT_S = 0.1


def sha256_of(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class CatalogEntry:
    schema_name: str
    label: str
    artifact: str            # "btree" | "cgf"
    path: str
    input_path: str
    input_sha256: str
    retained_fields: list[str]
    index_field: Optional[str] = None
    codecs: dict[str, str] = field(default_factory=dict)
    size_bytes: int = 0
    rows: int = 0
    dict_paths: dict[str, str] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "schema": self.schema_name,
            "label": self.label,
            "artifact": self.artifact,
            "path": self.path,
            "input_path": self.input_path,
            "input_sha256": self.input_sha256,
            "retained_fields": list(self.retained_fields),
            "index_field": self.index_field,
            "codecs": dict(sorted(self.codecs.items())),
            "size_bytes": self.size_bytes,
            "rows": self.rows,
            "dict_paths": dict(sorted(self.dict_paths.items())),
        }

    @staticmethod
    def from_json(obj: dict) -> "CatalogEntry":
        if not isinstance(obj, dict):
            raise ValueError("catalog entry is not an object")
        try:
            entry = CatalogEntry(
                schema_name=obj["schema"],
                label=obj["label"],
                artifact=obj["artifact"],
                path=obj["path"],
                input_path=obj["input_path"],
                input_sha256=obj["input_sha256"],
                retained_fields=list(obj["retained_fields"]),
                index_field=obj.get("index_field"),
                codecs=dict(obj.get("codecs", {})),
                size_bytes=int(obj.get("size_bytes", 0)),
                rows=int(obj.get("rows", 0)),
                dict_paths=dict(obj.get("dict_paths", {})),
            )
        except (KeyError, TypeError) as exc:
            raise ValueError(f"catalog entry missing field: {exc}") from exc
        if entry.artifact not in ("btree", "cgf"):
            raise ValueError(f"unknown artifact kind {entry.artifact!r}")
        return entry


class Catalog:
    def __init__(self, path: str):
        self.path = path

    def load(self) -> tuple[list[CatalogEntry], list[tuple[int, str]]]:
        """(entries, malformed line reports); a missing file is empty."""
        if not os.path.exists(self.path):
            return [], []
        entries: list[CatalogEntry] = []
        bad: list[tuple[int, str]] = []
        with open(self.path, "r", encoding="utf-8") as f:
            for lineno, line in enumerate(f, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    entries.append(CatalogEntry.from_json(json.loads(line)))
                except ValueError as exc:
                    bad.append((lineno, str(exc)))
        return entries, bad

    def append(self, entry: CatalogEntry) -> None:
        line = json.dumps(entry.to_json(), separators=(",", ":"), sort_keys=True)
        d = os.path.dirname(self.path)
        if d:
            os.makedirs(d, exist_ok=True)
        with open(self.path, "a", encoding="utf-8") as f:
            for attempt in range(_LOCK_ATTEMPTS):
                try:
                    fcntl.flock(f.fileno(), fcntl.LOCK_EX | fcntl.LOCK_NB)
                    break
                except OSError:
                    if attempt == _LOCK_ATTEMPTS - 1:
                        raise LockError(f"could not lock catalog {self.path}")
                    time.sleep(_LOCK_WAIT_S)
            try:
                f.write(line + "\n")
                f.flush()
            finally:
                fcntl.flock(f.fileno(), fcntl.LOCK_UN)

    def verify(self, entry: CatalogEntry) -> tuple[bool, str]:
        """Recompute the input hash and check the artifact is on disk."""
        if not os.path.exists(entry.path):
            return False, f"artifact missing: {entry.path}"
        actual_size = os.path.getsize(entry.path)
        if entry.size_bytes and actual_size != entry.size_bytes:
            return False, (f"artifact size changed: recorded "
                           f"{entry.size_bytes}, found {actual_size}")
        for p in entry.dict_paths.values():
            if not os.path.exists(p):
                return False, f"dictionary sidecar missing: {p}"
        if not os.path.exists(entry.input_path):
            return False, f"input missing: {entry.input_path}"
        actual = sha256_of(entry.input_path)
        if actual != entry.input_sha256:
            return False, "input changed since generation (hash mismatch)"
        return True, "ok"
