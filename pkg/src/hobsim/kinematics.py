"""Discretised generating motion of the hob relative to the gear blank.

Machine frame: gear axis +z through the origin, hob centre at
``(center_distance, 0, z_a)``.  The un-tilted hob axis is +y; the installed
hob axis is that direction turned by ``-installation_angle`` about +x so the
thread at the cutting point lines up with the tooth helix.

Per pose ``k`` the workpiece turns by ``gear_angle = k * interval`` and the hob
advances ``feed * k * interval / 360``.  The hob angle carries the indexing
ratio and the helical differential::

    hob_angle = (z / starts) * (gear_angle + z_a * tan(beta) / r)

The hob body frame is reached by turning the hob-frame point by ``+hob_angle``
about the hob axis (the hob itself turns by ``-hob_angle``).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from hobsim.gear import GearSpec, derive_transverse, with_tooth_thickness, build_grid
from hobsim.hob import HobSpec, derive_hob, DerivedHob

MAX_POSES = 10_000_000


class ScheduleError(ValueError):
    pass


def installation_angle(gear: GearSpec, hob: HobSpec) -> float:
    """Hob swivel (deg): ``beta - lambda`` for same hands, ``beta + lambda`` otherwise."""
    h = derive_hob(hob)
    return gear.helix_angle - h.hand_sign * h.derived_lead_angle


@dataclass(frozen=True)
class MachineSetup:
    gear: GearSpec = field(default_factory=GearSpec)
    hob: HobSpec = field(default_factory=HobSpec)
    feed_per_rev: float = 1.0
    interval_angle: float = 2.0
    center_distance: float | None = None
    installation_angle: float | None = None
    approach: float | None = None
    overrun: float | None = None

    def __post_init__(self):
        if not self.feed_per_rev > 0:
            raise ScheduleError("feed_per_rev must be positive")
        if not self.interval_angle > 0:
            raise ScheduleError("interval_angle must be positive")
        steps = 360.0 / self.interval_angle
        if abs(steps - round(steps)) > 1e-9:
            raise ScheduleError(f"interval_angle {self.interval_angle} does not divide 360")
        tp = derive_transverse(self.gear)
        h = derive_hob(self.hob)
        if self.center_distance is None:
            object.__setattr__(self, "center_distance", tp.pitch_radius + h.pitch_radius)
        if self.installation_angle is None:
            object.__setattr__(self, "installation_angle", installation_angle(self.gear, self.hob))
        if self.approach is None:
            object.__setattr__(self, "approach", 3 * self.gear.normal_module)
        if self.overrun is None:
            object.__setattr__(self, "overrun", 3 * self.gear.normal_module)
        if not self.center_distance > 0:
            raise ScheduleError("center_distance must be positive")

    @property
    def steps_per_rev(self) -> int:
        return int(round(360.0 / self.interval_angle))

    @property
    def revolutions(self) -> int:
        travel = self.approach + self.gear.face_width + self.overrun
        return math.ceil(travel / self.feed_per_rev - 1e-12)

    @property
    def pose_count(self) -> int:
        return self.revolutions * self.steps_per_rev

    def derived_hob(self) -> DerivedHob:
        return derive_hob(self.hob)

    def generated_normal_thickness(self) -> float:
        """Normal tooth thickness at the pitch circle that the hob's thread space leaves."""
        h = self.derived_hob()
        lam = math.radians(h.derived_lead_angle)
        return (h.axial_pitch - h.axial_thickness) * math.cos(lam)

    def transverse(self):
        return with_tooth_thickness(derive_transverse(self.gear), self.generated_normal_thickness())

    def grid(self, rows=25, cols=25, profile_margin=0.05, axial_margin=0.05):
        """Flank grid phased to the tooth thickness this hob generates."""
        return build_grid(self.gear, rows, cols, profile_margin, axial_margin,
                          normal_thickness=self.generated_normal_thickness())

    def replace(self, **changes) -> "MachineSetup":
        data = {f: getattr(self, f) for f in self.__dataclass_fields__}
        data.update(changes)
        return MachineSetup(**data)

    def to_dict(self) -> dict:
        return {
            "gear": self.gear.to_dict(),
            "hob": self.hob.to_dict(),
            "feed_per_rev": self.feed_per_rev,
            "interval_angle": self.interval_angle,
            "center_distance": self.center_distance,
            "installation_angle": self.installation_angle,
            "approach": self.approach,
            "overrun": self.overrun,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MachineSetup":
        data = dict(data)
        gear = GearSpec.from_dict(data.pop("gear", {}))
        hob = HobSpec.from_dict(data.pop("hob", {}))
        return cls(gear=gear, hob=hob, **data)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False)

    @classmethod
    def from_json(cls, text: str) -> "MachineSetup":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class CutterPose:
    index: int
    gear_angle: float  # rad
    hob_angle: float  # rad
    hob_axial_position: float  # mm


@dataclass(frozen=True)
class CutterSchedule:
    setup: MachineSetup
    gear_angle: np.ndarray = field(repr=False)
    hob_angle: np.ndarray = field(repr=False)
    hob_axial_position: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return len(self.gear_angle)

    def __getitem__(self, k) -> CutterPose:
        return CutterPose(int(k), float(self.gear_angle[k]), float(self.hob_angle[k]),
                          float(self.hob_axial_position[k]))

    @property
    def poses(self) -> list[CutterPose]:
        return [self[k] for k in range(len(self))]

    def subset(self, mask) -> "CutterSchedule":
        return CutterSchedule(self.setup, self.gear_angle[mask], self.hob_angle[mask],
                              self.hob_axial_position[mask])

    def rotated(self, gamma: float) -> "CutterSchedule":
        """Every pose with the workpiece turned a further ``gamma`` rad."""
        return CutterSchedule(self.setup, self.gear_angle + gamma, self.hob_angle,
                              self.hob_axial_position)

    def merged(self, other: "CutterSchedule") -> "CutterSchedule":
        return CutterSchedule(
            self.setup,
            np.concatenate([self.gear_angle, other.gear_angle]),
            np.concatenate([self.hob_angle, other.hob_angle]),
            np.concatenate([self.hob_axial_position, other.hob_axial_position]),
        )

    def transforms(self) -> tuple[np.ndarray, np.ndarray]:
        """Affine maps ``body = A[k] @ p + b[k]`` for all poses."""
        return pose_transforms(self.setup, self.gear_angle, self.hob_angle, self.hob_axial_position)


def hob_angle_for(setup: MachineSetup, gear_angle, axial_position):
    tp = derive_transverse(setup.gear)
    ratio = setup.gear.tooth_count / setup.hob.starts
    if setup.hob.thread_hand == "left":
        ratio = -ratio
    differential = np.asarray(axial_position) * tp.twist_per_mm
    return ratio * (np.asarray(gear_angle) + differential)


def build_schedule(setup: MachineSetup, max_poses: int = MAX_POSES) -> CutterSchedule:
    k_total = setup.pose_count
    if k_total > max_poses:
        raise ScheduleError(f"{k_total} poses exceed the cap of {max_poses}")
    k = np.arange(k_total)
    gear_angle = k * math.radians(setup.interval_angle)
    axial = -setup.approach + setup.feed_per_rev * k / setup.steps_per_rev
    return CutterSchedule(setup, gear_angle, hob_angle_for(setup, gear_angle, axial), axial)


def _hob_axes(setup: MachineSetup) -> np.ndarray:
    """Rows are the hob-frame axes expressed in the machine frame."""
    sig = math.radians(setup.installation_angle)
    c, s = math.cos(sig), math.sin(sig)
    ez = np.array([0.0, c, -s])
    ex = np.array([1.0, 0.0, 0.0])
    ey = np.cross(ez, ex)
    return np.stack([ex, ey, ez])


def _rot_z(angle):
    angle = np.asarray(angle, dtype=float)
    c, s = np.cos(angle), np.sin(angle)
    R = np.zeros(angle.shape + (3, 3))
    R[..., 0, 0], R[..., 0, 1] = c, -s
    R[..., 1, 0], R[..., 1, 1] = s, c
    R[..., 2, 2] = 1.0
    return R


def pose_transforms(setup, gear_angle, hob_angle, axial):
    M = _hob_axes(setup)
    Rg = _rot_z(gear_angle)
    Rh = _rot_z(hob_angle)
    A = Rh @ M @ Rg
    centre = np.zeros(np.shape(axial) + (3,))
    centre[..., 0] = setup.center_distance
    centre[..., 2] = axial
    b = -np.einsum("...ij,...j->...i", Rh @ M, centre)
    return np.ascontiguousarray(A), np.ascontiguousarray(b)


def workpiece_to_hob(pose: CutterPose, setup: MachineSetup, p) -> np.ndarray:
    A, b = pose_transforms(setup, pose.gear_angle, pose.hob_angle, pose.hob_axial_position)
    return np.asarray(p, dtype=float) @ A.T + b


def hob_to_workpiece(pose: CutterPose, setup: MachineSetup, q) -> np.ndarray:
    A, b = pose_transforms(setup, pose.gear_angle, pose.hob_angle, pose.hob_axial_position)
    return (np.asarray(q, dtype=float) - b) @ A
