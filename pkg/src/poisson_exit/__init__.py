"""Exit identities for spectrally-negative Levy processes observed at Poisson times."""

from .errors import DomainError, ExitError, NumericFailure, UnknownIdentity
from .exit_identities import IDENTITIES, ExitQuery, evaluate
from .levy_model import LevyModel, RootSystem, load_model, phi, psi, roots, save_model
from .scale_functions import ScaleContext

__version__ = "0.1.0"

__all__ = [
    "DomainError", "ExitError", "NumericFailure", "UnknownIdentity", "IDENTITIES", "ExitQuery", "evaluate",
    "LevyModel", "RootSystem", "load_model", "phi", "psi", "roots", "save_model", "ScaleContext",
]
