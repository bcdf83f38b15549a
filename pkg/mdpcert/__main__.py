"""Allows `python -m mdpcert`."""
import sys

from mdpcert.main import main

sys.exit(main())
