"""Package marker for closeness module."""
