"""Workpiece gear definition and the theoretical involute-helicoid flank.

Conventions (workpiece frame):

* the gear axis is +z, a right-hand helix has ``helix_angle > 0``;
* at ``z = 0`` tooth 0 is centred on the +x axis;
* the modelled flank is the one whose outward normal points in the -theta
  direction (tooth material lies counter-clockwise of it);
* the profile coordinate is the roll parameter ``u`` (base-circle unwrap
  angle) and the lengthwise coordinate is the axial position ``z``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np


class GeometryError(ValueError):
    """Raised for inconsistent or degenerate gear geometry."""


def involute_function(alpha):
    return np.tan(alpha) - alpha


@dataclass(frozen=True)
class GearSpec:
    normal_module: float = 2.0
    normal_pressure_angle: float = 20.0
    tooth_count: int = 30
    helix_angle: float = 15.0
    face_width: float = 30.0
    addendum_coeff: float = 1.0
    dedendum_coeff: float = 1.25

    def __post_init__(self):
        if not self.normal_module > 0:
            raise GeometryError("normal_module must be positive")
        if not 0 < self.normal_pressure_angle < 45:
            raise GeometryError("normal_pressure_angle must lie in (0, 45) deg")
        if int(self.tooth_count) != self.tooth_count or self.tooth_count < 6:
            raise GeometryError("tooth_count must be an integer >= 6")
        if not abs(self.helix_angle) < 45:
            raise GeometryError("|helix_angle| must be below 45 deg")
        if not self.face_width > 0:
            raise GeometryError("face_width must be positive")
        if self.addendum_coeff <= 0 or self.dedendum_coeff <= 0:
            raise GeometryError("addendum/dedendum coefficients must be positive")

    @property
    def hand(self) -> str:
        return "left" if self.helix_angle < 0 else "right"

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "GearSpec":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise GeometryError(f"unknown GearSpec fields: {sorted(unknown)}")
        return cls(**data)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "GearSpec":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class TransverseParams:
    transverse_module: float
    transverse_pressure_angle: float  # deg
    pitch_radius: float
    base_radius: float
    lead: float  # signed, +inf for spur
    tip_radius: float
    root_radius: float
    root_form_radius: float
    helix_angle: float  # deg, signed
    base_helix_angle: float  # deg, signed
    tooth_count: int
    face_width: float
    # angular position (rad) of the modelled flank's base-circle origin at z = 0
    base_phase: float

    @property
    def lead_per_radian(self) -> float:
        return self.lead / (2 * math.pi)

    @property
    def twist_per_mm(self) -> float:
        """Rotation of the tooth (rad) per mm of axial travel."""
        return math.tan(math.radians(self.helix_angle)) / self.pitch_radius

    @property
    def angular_pitch(self) -> float:
        return 2 * math.pi / self.tooth_count

    def roll_at_radius(self, radius):
        return np.sqrt(np.asarray(radius, dtype=float) ** 2 / self.base_radius**2 - 1.0)

    @property
    def u_tip(self) -> float:
        return float(self.roll_at_radius(self.tip_radius))

    @property
    def u_form(self) -> float:
        return float(self.roll_at_radius(self.root_form_radius))


def derive_transverse(spec: GearSpec) -> TransverseParams:
    """Standard transverse-plane relations for a zero-shift helical gear.

    The lower end of the usable involute (``root_form_radius``) is where a
    basic rack reaching ``addendum_coeff * m_n`` below the pitch line stops
    generating involute, i.e. the limit of the mating gear's active profile.
    """
    beta = math.radians(spec.helix_angle)
    alpha_n = math.radians(spec.normal_pressure_angle)
    m_t = spec.normal_module / math.cos(beta)
    alpha_t = math.atan(math.tan(alpha_n) / math.cos(beta))
    r = m_t * spec.tooth_count / 2
    r_b = r * math.cos(alpha_t)
    lead = math.inf if beta == 0 else 2 * math.pi * r / math.tan(beta)
    r_a = r + spec.addendum_coeff * spec.normal_module
    r_f = r - spec.dedendum_coeff * spec.normal_module

    form_roll_length = r * math.sin(alpha_t) - spec.addendum_coeff * spec.normal_module / math.sin(alpha_t)
    if form_roll_length <= 0:
        raise GeometryError(
            "base radius reaches the root-form start: the measured involute window is empty "
            f"(form roll length {form_roll_length:.4f} mm)"
        )
    r_form = math.hypot(r_b, form_roll_length)
    if not r_b < r < r_a:
        raise GeometryError("expected base_radius < pitch_radius < tip_radius")

    beta_b = math.atan(math.tan(beta) * math.cos(alpha_t))
    # zero-shift tooth: normal thickness pi*m_n/2, centred on +x at z=0
    half_thickness_angle = math.pi / (2 * spec.tooth_count)
    base_phase = -half_thickness_angle - float(involute_function(alpha_t))
    return TransverseParams(
        transverse_module=m_t,
        transverse_pressure_angle=math.degrees(alpha_t),
        pitch_radius=r,
        base_radius=r_b,
        lead=lead,
        tip_radius=r_a,
        root_radius=r_f,
        root_form_radius=r_form,
        helix_angle=spec.helix_angle,
        base_helix_angle=math.degrees(beta_b),
        tooth_count=spec.tooth_count,
        face_width=spec.face_width,
        base_phase=base_phase,
    )


def with_tooth_thickness(tp: TransverseParams, normal_thickness: float) -> TransverseParams:
    """Return ``tp`` re-phased for a given normal tooth thickness at the pitch circle."""
    s_t = normal_thickness / math.cos(math.radians(tp.helix_angle))
    alpha_t = math.radians(tp.transverse_pressure_angle)
    phase = -s_t / (2 * tp.pitch_radius) - float(involute_function(alpha_t))
    return TransverseParams(**{**tp.__dict__, "base_phase": phase})


def flank_point(tp: TransverseParams, u, z):
    """Point(s) of the involute helicoid at roll ``u`` and axial position ``z``.

    Broadcasts over ``u`` and ``z``; the result has a trailing axis of size 3.
    """
    u, z = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(z, dtype=float))
    t = tp.base_phase + u + z * tp.twist_per_mm
    c, s = np.cos(t), np.sin(t)
    rb = tp.base_radius
    return np.stack([rb * (c + u * s), rb * (s - u * c), z], axis=-1)


def flank_normal(tp: TransverseParams, u, z):
    """Outward unit normal of the flank; undefined at the involute cusp ``u = 0``."""
    u, z = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(z, dtype=float))
    if np.any(u <= 0):
        raise GeometryError("flank normal is undefined for u <= 0")
    t = tp.base_phase + u + z * tp.twist_per_mm
    beta_b = math.radians(tp.base_helix_angle)
    cb, sb = math.cos(beta_b), math.sin(beta_b)
    # transverse normal is -e_theta(t); the helicoid tilts it by the base helix angle
    n = np.stack([np.sin(t) * cb, -np.cos(t) * cb, np.full_like(t, sb)], axis=-1)
    return n / np.linalg.norm(n, axis=-1, keepdims=True)


def screw(tp: TransverseParams, points, delta):
    """Rotate ``points`` by ``delta`` about the gear axis and advance them by the lead."""
    points = np.asarray(points, dtype=float)
    c, s = math.cos(delta), math.sin(delta)
    dz = 0.0 if math.isinf(tp.lead) else tp.lead_per_radian * delta
    x, y, z = points[..., 0], points[..., 1], points[..., 2]
    return np.stack([c * x - s * y, s * x + c * y, z + dz], axis=-1)


def rotate_about_axis(points, angle):
    points = np.asarray(points, dtype=float)
    c, s = math.cos(angle), math.sin(angle)
    x, y, z = points[..., 0], points[..., 1], points[..., 2]
    return np.stack([c * x - s * y, s * x + c * y, z], axis=-1)


def invert_flank_point(tp: TransverseParams, point):
    """Recover ``(u, z)`` of a point assumed to lie on the flank."""
    point = np.asarray(point, dtype=float)
    x, y, z = point[..., 0], point[..., 1], point[..., 2]
    rho = np.hypot(x, y)
    u = np.sqrt(np.maximum(rho**2 / tp.base_radius**2 - 1.0, 0.0))
    return u, z


def flank_signed_distance_2d(tp: TransverseParams, xy, z):
    """Signed normal distance of transverse-plane points from the involute at height ``z``.

    Positive values lie on the space side (material in excess). Exact for
    points outside the base circle.
    """
    xy = np.asarray(xy, dtype=float)
    rb = tp.base_radius
    length = np.sqrt(np.maximum(np.sum(xy**2, axis=-1) - rb**2, 0.0))
    polar = np.arctan2(xy[..., 1], xy[..., 0])
    phase = tp.base_phase + np.asarray(z, dtype=float) * tp.twist_per_mm
    t = polar + np.arctan2(length, rb)
    roll = np.angle(np.exp(1j * (t - phase)))  # wrap to the branch near this tooth
    return length - rb * roll


@dataclass(frozen=True)
class FlankGrid:
    rows: int
    cols: int
    points: np.ndarray = field(repr=False)  # (rows, cols, 3)
    normals: np.ndarray = field(repr=False)  # (rows, cols, 3)
    profile_params: np.ndarray = field(repr=False)  # (cols,) roll u
    axial_params: np.ndarray = field(repr=False)  # (rows,) z in mm
    transverse: TransverseParams = field(repr=False)

    @property
    def center_index(self) -> tuple[int, int]:
        return self.rows // 2, self.cols // 2

    def rotated(self, angle: float) -> "FlankGrid":
        """The grid rotated rigidly about the gear axis by ``angle`` rad."""
        return FlankGrid(
            self.rows,
            self.cols,
            rotate_about_axis(self.points, angle),
            rotate_about_axis(self.normals, angle),
            self.profile_params,
            self.axial_params,
            self.transverse,
        )


def subsample_indices(n: int, k: int) -> np.ndarray:
    """Equidistant indices picking ``k`` of ``n`` samples, end points included."""
    if k < 2 or (n - 1) % (k - 1):
        raise GeometryError(f"cannot pick {k} equidistant samples out of {n}")
    return np.arange(k) * ((n - 1) // (k - 1))


def build_grid(
    spec: GearSpec,
    rows: int = 25,
    cols: int = 25,
    profile_margin: float = 0.05,
    axial_margin: float = 0.05,
    normal_thickness: float | None = None,
) -> FlankGrid:
    """Equidistant ``rows x cols`` grid over the measured flank window.

    ``normal_thickness`` re-phases the flank for a tooth thickness other than
    the nominal ``pi * m_n / 2``.
    """
    if rows < 2 or cols < 2:
        raise GeometryError("grid needs at least 2 rows and 2 columns")
    for m in (profile_margin, axial_margin):
        if not 0 <= m <= 0.2:
            raise GeometryError("margins must lie in [0, 0.2]")
    tp = derive_transverse(spec)
    if normal_thickness is not None:
        tp = with_tooth_thickness(tp, normal_thickness)
    u_lo = tp.u_form * (1 + profile_margin)
    u_hi = tp.u_tip * (1 - profile_margin)
    if not u_lo < u_hi:
        raise GeometryError("profile window is empty")
    z_lo = axial_margin * spec.face_width
    z_hi = (1 - axial_margin) * spec.face_width
    u = np.linspace(u_lo, u_hi, cols)
    z = np.linspace(z_lo, z_hi, rows)
    uu, zz = np.meshgrid(u, z)
    return FlankGrid(rows, cols, flank_point(tp, uu, zz), flank_normal(tp, uu, zz), u, z, tp)
