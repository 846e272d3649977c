"""Numerical thermodynamics toolkit: max-entropy fits, gas models, Maxwell
constructions and collisionless kinetic transport."""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("thermoscope")
except PackageNotFoundError:  # running from a source checkout
    __version__ = "0.0.0+unknown"
