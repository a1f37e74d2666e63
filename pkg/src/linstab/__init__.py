"""Certified small-divisor arithmetic, Fourier-Taylor normal forms and
drift experiments for perturbed linear Hamiltonians."""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"
