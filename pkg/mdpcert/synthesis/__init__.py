"""Package marker for synthesis module."""
