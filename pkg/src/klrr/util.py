"""Shared small helpers: error type, fingerprints, float formatting."""

from __future__ import annotations

import hashlib

import numpy as np


class InputError(ValueError):
    """Raised when a caller-supplied argument or config is invalid."""


def fingerprint_bytes(arr: np.ndarray) -> str:
    """Stable hash of an array's shape and raw bytes (first 16 hex chars)."""
    arr = np.ascontiguousarray(arr)
    h = hashlib.sha256()
    h.update(str(arr.shape).encode())
    h.update(arr.tobytes())
    return h.hexdigest()[:16]


def fmt9(x: float) -> str:
    """Format a float with 9 significant digits, normalizing negative zero."""
    x = float(x)
    if x == 0.0:
        x = 0.0
    return f"{x:.9g}"


def check_finite(arr: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{what} contains non-finite values")
