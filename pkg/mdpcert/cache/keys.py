"""
Cache key and provenance hash utilities.
Ensures consistent keys for artifacts across the toolkit.
"""
import hashlib
import json
from typing import Any

import numpy as np


def _normalize(value: Any) -> Any:
    """Convert numpy values and containers into a JSON-stable form."""
    if isinstance(value, np.ndarray):
        return {"shape": list(value.shape), "data": hash_arrays(value)}
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, dict):
        return {str(k): _normalize(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_normalize(v) for v in value]
    if hasattr(value, "model_dump"):
        return _normalize(value.model_dump(mode="json"))
    return value


def hash_arrays(*arrays: np.ndarray) -> str:
    """
    sha256 over the raw bytes, dtype and shape of the given arrays.

    Args:
        *arrays: Arrays to fingerprint

    Returns:
        Hex digest
    """
    digest = hashlib.sha256()
    for array in arrays:
        contiguous = np.ascontiguousarray(array)
        digest.update(str(contiguous.dtype).encode())
        digest.update(str(contiguous.shape).encode())
        digest.update(contiguous.tobytes())
    return digest.hexdigest()


def generate_cache_key(prefix: str, *args: Any, **kwargs: Any) -> str:
    """
    Generate a deterministic cache key.

    Args:
        prefix: Key prefix (e.g., stage name)
        *args: Positional arguments to include in key
        **kwargs: Keyword arguments to include in key

    Returns:
        Hashed cache key
    """
    key_data = {
        "prefix": prefix,
        "args": [_normalize(arg) for arg in args],
        "kwargs": sorted((k, _normalize(v)) for k, v in kwargs.items())
    }

    # Hash for consistent length
    key_json = json.dumps(key_data, sort_keys=True, default=str)
    key_hash = hashlib.sha256(key_json.encode()).hexdigest()

    return f"{prefix}:{key_hash}"
