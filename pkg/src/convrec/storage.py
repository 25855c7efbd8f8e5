"""Crash-safe file persistence for per-user preference stores.

One JSON document per user under the configured directory. Writes go to
a temporary file in the same directory, are fsynced, and land with an
atomic rename, so a reader never observes a torn document: after a crash
the file holds either the old or the new store in full.

The CONVREC_FAILPOINT environment variable aborts the process at a named
point inside save(); it exists only so fault-injection tests can kill the
process exactly between the merge and the rename.
"""

from __future__ import annotations

import logging
import os
import threading
from pathlib import Path
from urllib.parse import quote

from .model import (
    MalformedDocument,
    PreferenceStore,
    parse_preference_store,
    preference_store_to_dict,
)

import json

logger = logging.getLogger(__name__)

FAILPOINT_ENV = "CONVREC_FAILPOINT"
FAIL_BEFORE_RENAME = "store-before-rename"
FAIL_AFTER_RENAME = "store-after-rename"


class PersistenceFailure(RuntimeError):
    pass


def _hit_failpoint(name: str) -> None:
    if os.environ.get(FAILPOINT_ENV) == name:
        logger.error("failpoint %s reached; aborting process", name)
        os._exit(17)


class StoreDirectory:
    """Preference stores in a directory, with per-user exclusive locks."""

    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()

    def lock_for(self, user_id: str) -> threading.Lock:
        with self._registry_lock:
            return self._locks.setdefault(user_id, threading.Lock())

    def _path_for(self, user_id: str) -> Path:
        return self.root / (quote(user_id, safe="") + ".json")

    def load(self, user_id: str, now: float) -> PreferenceStore:
        """Read a user's store; absent file means a fresh empty store."""
        path = self._path_for(user_id)
        try:
            raw = path.read_bytes()
        except FileNotFoundError:
            return PreferenceStore(user_id, {}, now)
        except OSError as exc:
            raise PersistenceFailure(f"cannot read {path}: {exc}") from exc
        try:
            return parse_preference_store(raw)
        except MalformedDocument as exc:
            raise PersistenceFailure(f"corrupt store {path}: {exc}") from exc

    def save(self, store: PreferenceStore) -> None:
        """Atomically replace the user's store document."""
        path = self._path_for(store.user_id)
        tmp = path.with_name(f".{path.name}.{os.getpid()}.tmp")
        payload = json.dumps(preference_store_to_dict(store), sort_keys=True, indent=2)
        try:
            with open(tmp, "w", encoding="utf-8") as fh:
                fh.write(payload)
                fh.flush()
                os.fsync(fh.fileno())
            _hit_failpoint(FAIL_BEFORE_RENAME)
            os.replace(tmp, path)
            _hit_failpoint(FAIL_AFTER_RENAME)
            self._sync_dir()
        except OSError as exc:
            try:
                tmp.unlink(missing_ok=True)
            except OSError:
                pass
            raise PersistenceFailure(f"cannot write {path}: {exc}") from exc

    def _sync_dir(self) -> None:
        try:
            fd = os.open(self.root, os.O_RDONLY)
        except OSError:
            return
        try:
            os.fsync(fd)
        finally:
            os.close(fd)
