"""Symbolic toolkit for polysymplectic-style Hamiltonian field theories on a single chart."""

from importlib import resources

__version__ = "0.1.0"


def corpus_path(name: str):
    """Path of a bundled example system, e.g. ``corpus_path("wave.pdh")``."""
    return resources.files(__name__).joinpath("corpus", name)
