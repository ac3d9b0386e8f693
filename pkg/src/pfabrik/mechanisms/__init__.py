"""Built-in parallel mechanisms, their closed-form IK baselines and Newton FK."""

from .base import ActuationError, ActuationVector, FKDivergedError, Mechanism, fk_newton
from .five_bar import FiveBar, FiveBarGeometry
from .nrpm import Nrpm, NrpmGeometry
from .stewart import Stewart, StewartGeometry

MECHANISMS = {
    FiveBar.kind: (FiveBar, FiveBarGeometry),
    Stewart.kind: (Stewart, StewartGeometry),
    Nrpm.kind: (Nrpm, NrpmGeometry),
}

__all__ = [
    "ActuationError", "ActuationVector", "FKDivergedError", "Mechanism", "fk_newton",
    "FiveBar", "FiveBarGeometry", "Stewart", "StewartGeometry", "Nrpm", "NrpmGeometry", "MECHANISMS",
]
