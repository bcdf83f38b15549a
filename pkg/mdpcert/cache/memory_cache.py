"""
In-memory artifact cache with hit/miss accounting.
"""
import threading
from collections import OrderedDict
from typing import Optional, Any, Callable, Tuple
from mdpcert.cache.interfaces import Cache
from mdpcert.config import settings
from mdpcert.observability import metrics


class MemoryCache(Cache):
    """
    Size-bounded in-memory cache, safe across worker threads.

    Identical subsystems (same fingerprint, configuration and derived seed)
    resolve to the same key, so expensive artifacts are computed once.
    """

    def __init__(self, name: str = "artifacts", max_size: Optional[int] = None):
        """
        Initialize memory cache.

        Args:
            name: Cache label used in metrics
            max_size: Maximum number of entries (defaults to config)
        """
        self.name = name
        self.max_size = max_size or settings.cache_max_size
        self._store: "OrderedDict[str, Any]" = OrderedDict()
        self._lock = threading.Lock()

    def get(self, key: str) -> Optional[Any]:
        """Retrieve value from cache, returning None if missing."""
        with self._lock:
            return self._store.get(key)

    def set(self, key: str, value: Any) -> None:
        """Store value, evicting the oldest entry when full."""
        with self._lock:
            if len(self._store) >= self.max_size and key not in self._store:
                self._store.popitem(last=False)
            self._store[key] = value

    def delete(self, key: str) -> None:
        """Remove key from cache."""
        with self._lock:
            self._store.pop(key, None)

    def clear(self) -> None:
        """Clear all entries."""
        with self._lock:
            self._store.clear()

    def get_or_compute(self, key: str, stage: str, compute: Callable[[], Any]) -> Tuple[Any, bool]:
        """
        Return the cached value for key, computing and storing it on a miss.

        Returns:
            (value, hit)
        """
        cached = self.get(key)
        if cached is not None:
            metrics.record_cache_lookup(self.name, stage, hit=True)
            return cached, True
        metrics.record_cache_lookup(self.name, stage, hit=False)
        value = compute()
        self.set(key, value)
        return value, False

    def size(self) -> int:
        """Get current number of entries."""
        return len(self._store)
