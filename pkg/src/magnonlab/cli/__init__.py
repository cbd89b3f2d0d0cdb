"""Command-line workbench: scenario files, CSV tables, SVG plots."""
from .main import main

__all__ = ["main"]
