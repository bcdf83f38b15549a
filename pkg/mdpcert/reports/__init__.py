"""Package marker for reports module."""
