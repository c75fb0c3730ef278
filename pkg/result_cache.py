"""Content-addressed JSON cache for CLI results."""

import hashlib
import json
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Optional

from config import config
from logging_config import logger


def canonical_json(payload: Any) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def cache_key(command: str, descriptor: Dict[str, Any], parameters: Dict[str, Any]) -> str:
    """SHA-256 of the canonical JSON of (command, field descriptor, parameters, conventions)."""
    payload = {
        "command": command,
        "field": descriptor,
        "parameters": parameters,
        "conventions": config.as_dict(),
        "version": config.version,
    }
    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()


class ResultCache:
    """One JSON file per key under the cache directory; writes are write-temp-rename."""

    def __init__(self, directory: Optional[str] = None):
        self.directory = Path(directory or os.getenv("BIGCM_CACHE") or config.cache_dir)

    def path(self, key: str) -> Path:
        return self.directory / f"{key}.json"

    def get(self, key: str) -> Optional[Dict[str, Any]]:
        path = self.path(key)
        if not path.exists():
            return None
        try:
            with open(path, "r", encoding="utf-8") as handle:
                data = json.load(handle)
        except (OSError, json.JSONDecodeError) as exc:
            logger.warning(f"Ignoring unreadable cache entry: {exc}", extra={"cache_key": key})
            return None
        logger.debug("Cache hit", extra={"cache_key": key})
        return data

    def put(self, key: str, data: Dict[str, Any]) -> Path:
        self.directory.mkdir(parents=True, exist_ok=True)
        target = self.path(key)
        fd, tmp = tempfile.mkstemp(dir=self.directory, prefix=".tmp-", suffix=".json")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as handle:
                handle.write(canonical_json(data))
            os.replace(tmp, target)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        logger.debug("Cache write", extra={"cache_key": key})
        return target

    def __contains__(self, key: str) -> bool:
        return self.path(key).exists()
