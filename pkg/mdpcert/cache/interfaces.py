"""
Cache interface following Interface Segregation Principle.
Simple, focused contract for artifact caching.
"""
from abc import ABC, abstractmethod
from typing import Optional, Any


class Cache(ABC):
    """
    Abstract artifact cache interface.

    Pipeline stages depend on this interface, not concrete implementations.
    """

    @abstractmethod
    def get(self, key: str) -> Optional[Any]:
        """
        Retrieve a value from cache.

        Args:
            key: Cache key

        Returns:
            Cached value or None if not found
        """
        pass

    @abstractmethod
    def set(self, key: str, value: Any) -> None:
        """
        Store a value in cache.

        Args:
            key: Cache key
            value: Value to store
        """
        pass

    @abstractmethod
    def delete(self, key: str) -> None:
        """Remove a key from cache."""
        pass

    @abstractmethod
    def clear(self) -> None:
        """Clear all entries from cache."""
        pass
