"""Package marker for certification module."""
