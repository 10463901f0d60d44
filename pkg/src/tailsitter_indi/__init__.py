"""INDI control, guidance and simulation for a dual-motor dual-flap tailsitter."""

from ._accel import NUMBA_ENABLED

__version__ = "0.1.0"

__all__ = ["NUMBA_ENABLED", "__version__"]
