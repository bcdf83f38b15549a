"""Package marker for mdpcert module."""
