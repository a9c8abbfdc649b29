"""Content-addressed blob store and append-only session event logs.

Layout under the data directory:

    store/<first 2 hex of digest>/<digest>     raw bytes
    sessions/<session_id>/log.jsonl            append-only event/version records
"""
from __future__ import annotations

import json
import os
import threading
from pathlib import Path
from typing import Iterator, Optional

from .errors import StorageFailure
from .types import digest_bytes


class ArtifactStore:
    """Write-once blob store keyed by sha256 hex digest."""

    def __init__(self, root: Path | str):
        self.root = Path(root)
        try:
            self.root.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise StorageFailure(f"cannot create artifact store at {self.root}: {exc}")
        self._lock = threading.Lock()

    def _path(self, digest: str) -> Path:
        return self.root / digest[:2] / digest

    def put(self, data: bytes) -> str:
        digest = digest_bytes(data)
        path = self._path(digest)
        if path.exists():
            return digest
        with self._lock:
            if path.exists():
                return digest
            try:
                path.parent.mkdir(parents=True, exist_ok=True)
                tmp = path.with_suffix(".tmp.%d" % os.getpid())
                tmp.write_bytes(data)
                os.replace(tmp, path)
            except OSError as exc:
                raise StorageFailure(f"cannot write artifact {digest}: {exc}")
        return digest

    def put_text(self, text: str) -> str:
        return self.put(text.encode("utf-8"))

    def get(self, digest: str) -> Optional[bytes]:
        path = self._path(digest)
        if not path.exists():
            return None
        return path.read_bytes()

    def get_text(self, digest: str) -> Optional[str]:
        data = self.get(digest)
        return None if data is None else data.decode("utf-8")

    def __contains__(self, digest: str) -> bool:
        return self._path(digest).exists()


class SessionLog:
    """Append-only JSON Lines log backing one session."""

    def __init__(self, path: Path):
        self.path = path
        self._lock = threading.Lock()

    def append(self, record: dict) -> None:
        line = json.dumps(record, sort_keys=True, separators=(",", ":"))
        with self._lock:
            try:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(line + "\n")
                    fh.flush()
                    os.fsync(fh.fileno())
            except OSError as exc:
                raise StorageFailure(f"cannot append to session log {self.path}: {exc}")

    def read(self) -> Iterator[dict]:
        if not self.path.exists():
            return
        with open(self.path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    yield json.loads(line)
