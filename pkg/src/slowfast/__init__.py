"""Slow-fast competition model, its cross-diffusion limit, and rate experiments."""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("slowfast")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"
