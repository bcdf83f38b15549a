"""Package marker for scenario module."""
