"""Package marker for abstraction module."""
