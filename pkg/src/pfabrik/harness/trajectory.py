"""Circular target trajectories."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .. import geom
from ..model import TargetPose

PLANES = {"xy": (0, 1), "yz": (1, 2), "xz": (0, 2)}
ORIENTATION_MODES = ("fixed", "sinusoidal")


@dataclass(frozen=True)
class TrajectorySpec:
    """A circle of target poses.

    Sample ``k`` sits at angle ``2*pi*k/samples`` from the first axis of ``plane``.
    With ``orientation: fixed`` every sample carries ``rpy_deg``; with
    ``sinusoidal`` the roll is ``A sin(psi)`` and the pitch ``A cos(psi)`` for
    amplitude ``A = amplitude_deg``. A zero radius gives a constant pose.
    """

    kind: str = "circle"
    center: tuple = (0.0, 0.0, 0.0)
    radius: float = 0.0
    plane: str = "xy"
    samples: int = 360
    orientation: str = "fixed"
    amplitude_deg: float = 5.0
    rpy_deg: tuple = field(default=(0.0, 0.0, 0.0))

    def __post_init__(self):
        if self.kind != "circle":
            raise ValueError(f"unsupported trajectory kind {self.kind!r}")
        object.__setattr__(self, "center", tuple(geom.vec3(self.center).tolist()))
        if not self.radius >= 0:
            raise ValueError(f"radius must be non-negative, got {self.radius}")
        if self.plane not in PLANES:
            raise ValueError(f"plane must be one of {sorted(PLANES)}, got {self.plane!r}")
        if self.samples < 2:
            raise ValueError(f"samples must be at least 2, got {self.samples}")
        if self.orientation not in ORIENTATION_MODES:
            raise ValueError(f"orientation must be one of {ORIENTATION_MODES}, got {self.orientation!r}")
        if len(self.rpy_deg) != 3:
            raise ValueError("rpy_deg needs three angles")

    def positions(self) -> np.ndarray:
        i, j = PLANES[self.plane]
        psi = 2.0 * np.pi * np.arange(self.samples) / self.samples
        P = np.tile(np.asarray(self.center, dtype=float), (self.samples, 1))
        P[:, i] += self.radius * np.cos(psi)
        P[:, j] += self.radius * np.sin(psi)
        return P

    def rotation(self, k: int) -> np.ndarray:
        if self.orientation == "fixed":
            return geom.rpy(*np.radians(self.rpy_deg))
        psi = 2.0 * math.pi * k / self.samples
        a = math.radians(self.amplitude_deg)
        return geom.rpy(a * math.sin(psi), a * math.cos(psi), 0.0)

    def poses(self, planar: bool = False) -> list[TargetPose]:
        """Target poses; planar mechanisms get positions only."""
        return [TargetPose(p, None if planar else self.rotation(k)) for k, p in enumerate(self.positions())]

    def as_dict(self) -> dict:
        return {
            "kind": self.kind, "center": list(self.center), "radius": self.radius, "plane": self.plane,
            "samples": self.samples, "orientation": self.orientation,
            "amplitude_deg": self.amplitude_deg, "rpy_deg": list(self.rpy_deg),
        }
