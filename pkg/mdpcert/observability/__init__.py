"""Package marker for observability module."""
