"""GPR tack-coat survey simulation, SVM classification and evaluation.

Thin wrapper over the compiled ``_core`` extension.
"""

from ._core import *  # noqa: F401,F403
from ._core import (
    ConvergenceError,
    ValidationError,
    Scene,
    reproduce,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
