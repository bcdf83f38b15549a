"""Package marker for graph module."""
