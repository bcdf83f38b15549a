"""
Timing utilities for clean latency tracking.
"""
import time
from contextlib import contextmanager
from typing import Optional, Callable


@contextmanager
def timer(callback: Optional[Callable[[float], None]] = None):
    """
    Synchronous timing context manager.

    Usage:
        with timer(lambda t: print(f"Took {t}s")) as elapsed:
            # do work
            pass
        elapsed["elapsed"]

    Args:
        callback: Optional callback receiving elapsed time in seconds

    Yields:
        Elapsed time container dict (filled on exit)
    """
    start = time.perf_counter()
    elapsed_container = {"elapsed": 0.0}

    try:
        yield elapsed_container
    finally:
        elapsed = time.perf_counter() - start
        elapsed_container["elapsed"] = elapsed
        if callback:
            callback(elapsed)
