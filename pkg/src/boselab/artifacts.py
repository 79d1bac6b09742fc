"""Atomic artifact writing and the run manifest.

Every file is written to a temp sibling and renamed into place; the manifest
lists each produced artifact with its sha256 so a run can be verified after
the fact.  CSV uses '.' decimals, '\n' newlines, UTF-8 and a header row.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os


def _atomic_write_bytes(path: str, payload: bytes) -> None:
    tmp = path + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(payload)
    os.replace(tmp, path)


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    return value


class ArtifactWriter:
    """Collects artifacts for one run directory and writes the manifest."""

    def __init__(self, directory: str):
        self.directory = directory
        os.makedirs(directory, exist_ok=True)
        self.records = []

    def _register(self, name: str, payload: bytes) -> str:
        path = os.path.join(self.directory, name)
        _atomic_write_bytes(path, payload)
        self.records.append({
            "name": name,
            "sha256": hashlib.sha256(payload).hexdigest(),
            "bytes": len(payload),
        })
        return path

    def write_json(self, name: str, obj) -> str:
        payload = (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode()
        return self._register(name, payload)

    def write_csv(self, name: str, header, rows) -> str:
        buf = io.StringIO(newline="")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])
        return self._register(name, buf.getvalue().encode())

    def register_file(self, name: str) -> None:
        """Record an artifact that was written directly (e.g. an npz state)."""
        path = os.path.join(self.directory, name)
        self.records.append({
            "name": name,
            "sha256": sha256_file(path),
            "bytes": os.path.getsize(path),
        })

    def write_manifest(self, config_sha: str, extra=None) -> str:
        manifest = {
            "config_sha256": config_sha,
            "artifacts": sorted(self.records, key=lambda r: r["name"]),
        }
        if extra:
            manifest.update(extra)
        payload = (json.dumps(manifest, indent=2, sort_keys=True) + "\n").encode()
        path = os.path.join(self.directory, "manifest.json")
        _atomic_write_bytes(path, payload)
        return path


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()
