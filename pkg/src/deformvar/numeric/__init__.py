"""Numeric integrators, invariant checks and the symbolic residual bridge."""

from .core import *  # noqa: F401,F403
from .fields import *  # noqa: F401,F403
from .langevin import *  # noqa: F401,F403
from .llg import *  # noqa: F401,F403
from .particles import *  # noqa: F401,F403
from .residual import *  # noqa: F401,F403
from .core import __all__ as _core
from .fields import __all__ as _fields
from .langevin import __all__ as _langevin
from .llg import __all__ as _llg
from .particles import __all__ as _particles
from .residual import __all__ as _residual

__all__ = [*_core, *_fields, *_langevin, *_llg, *_particles, *_residual]
