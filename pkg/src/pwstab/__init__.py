"""Periodic travelling waves of Hamiltonian PDEs and their stability criteria."""

__version__ = "0.1.0"

from .errors import PwstabError  # noqa: E402
from .models import Model, WaveParams  # noqa: E402

__all__ = ["Model", "WaveParams", "PwstabError", "__version__"]
