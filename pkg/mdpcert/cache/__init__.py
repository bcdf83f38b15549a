"""Package marker for cache module."""
