"""Package marker for composition module."""
