"""Package marker for systems module."""
