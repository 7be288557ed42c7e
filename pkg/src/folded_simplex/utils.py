"""Small shared helpers: atomic file output, digests, worker limits."""

from __future__ import annotations

import hashlib
import os
import tempfile

__all__ = ["atomic_write_text", "sha256_file", "env_worker_cap", "resolve_workers"]

THREADS_ENV = "FOLDED_SIMPLEX_THREADS"


def atomic_write_text(path: str, text: str) -> None:
    """Write a file via a same-directory temp file and rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def sha256_file(path: str) -> str:
    """Hex SHA-256 digest of a file's bytes."""
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def env_worker_cap() -> int | None:
    """Worker-count cap from the FOLDED_SIMPLEX_THREADS variable, if set."""
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw.strip() == "":
        return None
    try:
        cap = int(raw)
    except ValueError:
        return None
    return max(cap, 1)


def resolve_workers(requested: int | None) -> int:
    """Effective worker count: the request (default 1) capped by the env."""
    workers = 1 if requested is None else max(int(requested), 1)
    cap = env_worker_cap()
    if cap is not None:
        workers = min(workers, cap)
    return workers
