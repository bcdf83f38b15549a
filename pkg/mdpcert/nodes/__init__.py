"""Package marker for nodes module."""
