"""Lie groups of equivalence transformations for families of differential equations."""

from importlib.resources import files

__version__ = "0.1.0"


def data_file(name: str):
    """Path of a bundled problem or generator file (e.g. ``"kdv.eqv"``, ``"gens/wave_x.json"``)."""
    return files(__name__) / "data" / name
