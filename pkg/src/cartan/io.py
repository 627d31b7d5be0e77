"""JSON plumbing for reports and inputs."""
from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np


class InputError(ValueError):
    """Malformed or unreadable user input (exit code 2)."""


def read_json_arg(value: str):
    """Parse ``value`` as inline JSON if it looks like JSON, else as a file path.

    Returns ``(obj, raw_bytes)``; the raw bytes feed the inputs digest.
    """
    text = value.strip()
    if text[:1] in "{[":
        raw = text.encode()
    else:
        try:
            raw = Path(value).read_bytes()
        except OSError as exc:
            raise InputError(f"cannot read {value}: {exc.strerror}") from exc
    try:
        return json.loads(raw), raw
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON in {value[:40]!r}: {exc.msg}") from exc


def inputs_digest(argv, blobs) -> str:
    h = hashlib.sha256()
    h.update(json.dumps(list(argv), separators=(",", ":")).encode())
    for blob in blobs:
        h.update(b"\0")
        h.update(blob)
    return h.hexdigest()


def to_plain(obj):
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_plain(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, float) and not np.isfinite(obj):
        return str(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(to_plain(obj), indent=2, sort_keys=True) + "\n"
