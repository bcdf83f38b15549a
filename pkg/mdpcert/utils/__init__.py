"""Package marker for utils module."""
