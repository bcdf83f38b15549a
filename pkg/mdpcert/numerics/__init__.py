"""Package marker for numerics module."""
