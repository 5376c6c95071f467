"""
    flist
    -----
"""
__version__ = "0.1.0"

from .config import Namespace
from .grid import SampledPotential, make_grid
from .loader import RunConfigLoader, build_loader
from .spectrum import SolitonEnsemble

__all__ = [
    "Namespace",
    "RunConfigLoader",
    "SampledPotential",
    "SolitonEnsemble",
    "build_loader",
    "make_grid",
]
