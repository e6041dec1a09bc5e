"""Continuous-thread hob: a single-start worm thread solid with rounded tip and root.

The thread is described in reduced coordinates ``(rho, w)`` where ``rho`` is
the distance from the hob axis and ``w = z - (lead / 2pi) * theta`` folded
modulo the axial pitch.  In those coordinates every axial section is the same
rack-like profile, so the solid is screw invariant by construction.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import optimize

from hobsim import _kernels


class HobSpecError(ValueError):
    pass


_DMS = re.compile(r"^\s*([-+]?\d+(?:\.\d+)?)\s*°\s*(?:(\d+(?:\.\d+)?)\s*['′])?\s*(?:(\d+(?:\.\d+)?)\s*(?:\"|″))?\s*$")


def parse_angle(value) -> float:
    """Decimal degrees from a number or a ``D°M′S″`` string such as ``"1°46'"``."""
    if isinstance(value, (int, float)):
        return float(value)
    text = str(value).strip()
    try:
        return float(text)
    except ValueError:
        pass
    m = _DMS.match(text)
    if not m:
        raise HobSpecError(f"cannot parse angle {value!r}")
    deg = float(m.group(1))
    minutes = float(m.group(2) or 0.0)
    seconds = float(m.group(3) or 0.0)
    sign = -1.0 if deg < 0 or text.startswith("-") else 1.0
    return sign * (abs(deg) + minutes / 60 + seconds / 3600)


def format_dms(deg: float) -> str:
    sign = "-" if deg < 0 else ""
    total = round(abs(deg) * 60, 1)
    d, m = divmod(total, 60)
    return f"{sign}{int(d)}°{m:g}′"


@dataclass(frozen=True)
class HobSpec:
    module: float = 2.0
    pitch_diameter: float = 65.06
    addendum: float = 2.5
    whole_depth: float = 5.0
    normal_pitch: float = 6.286
    normal_tooth_thickness: float = 3.143
    axial_profile_angle: float = 20 + 1 / 60
    lead_angle: float = 1 + 46 / 60
    thread_hand: str = "right"
    tip_corner_radius: float = 0.6
    root_fillet_radius: float = 0.6
    starts: int = 1
    hob_length: float = 50.0
    external_diameter: float = 71.0
    bore: float = 27.0
    # not listed in the hob table; the axial angle 20°1′ follows from 20° normal
    normal_pressure_angle: float = 20.0
    # "ZI": involute-helicoid flanks (conjugate to an involute gear);
    # "ZA": straight-sided axial section (Archimedean)
    thread_form: str = "ZI"

    def __post_init__(self):
        object.__setattr__(self, "axial_profile_angle", parse_angle(self.axial_profile_angle))
        object.__setattr__(self, "lead_angle", parse_angle(self.lead_angle))
        object.__setattr__(self, "normal_pressure_angle", parse_angle(self.normal_pressure_angle))
        lengths = ("module", "pitch_diameter", "addendum", "whole_depth", "normal_pitch",
                   "normal_tooth_thickness", "hob_length", "external_diameter", "bore")
        for name in lengths:
            if not getattr(self, name) > 0:
                raise HobSpecError(f"{name} must be positive")
        if self.tip_corner_radius < 0 or self.root_fillet_radius < 0:
            raise HobSpecError("corner radii must be non-negative")
        if not 0 < self.lead_angle < 10:
            raise HobSpecError("lead_angle must lie in (0, 10) deg")
        if self.whole_depth < self.addendum:
            raise HobSpecError("whole_depth must be at least the addendum")
        if self.thread_hand not in ("right", "left"):
            raise HobSpecError("thread_hand must be 'right' or 'left'")
        if self.thread_form not in ("ZI", "ZA"):
            raise HobSpecError("thread_form must be 'ZI' or 'ZA'")
        if int(self.starts) != self.starts or self.starts < 1:
            raise HobSpecError("starts must be a positive integer")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "HobSpec":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise HobSpecError(f"unknown HobSpec fields: {sorted(unknown)}")
        return cls(**data)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False)

    @classmethod
    def from_json(cls, text: str) -> "HobSpec":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class DerivedHob:
    spec: HobSpec
    pitch_radius: float
    cutting_tip_radius: float
    root_radius: float
    axial_pitch: float
    lead: float
    derived_lead_angle: float  # deg
    derived_axial_profile_angle: float  # deg
    axial_thickness: float  # at the pitch radius
    half_length: float
    profile: np.ndarray = field(repr=False)  # packed parameters for the kernels

    @property
    def lead_per_radian(self) -> float:
        """Signed axial advance per radian of thread rotation (+ for right hand)."""
        sign = 1.0 if self.spec.thread_hand == "right" else -1.0
        return sign * self.lead / (2 * math.pi)

    @property
    def hand_sign(self) -> float:
        return 1.0 if self.spec.thread_hand == "right" else -1.0

    @property
    def lipschitz(self) -> float:
        return float(self.profile[_kernels.LIP])

    def consistency_report(self) -> dict:
        s = self.spec
        return {
            "lead_angle": {"declared": s.lead_angle, "derived": self.derived_lead_angle,
                           "delta": self.derived_lead_angle - s.lead_angle},
            "axial_profile_angle": {"declared": s.axial_profile_angle,
                                    "derived": self.derived_axial_profile_angle,
                                    "delta": self.derived_axial_profile_angle - s.axial_profile_angle},
            "axial_pitch": {"declared": s.normal_pitch, "derived": self.axial_pitch,
                            "delta": self.axial_pitch - s.normal_pitch},
            "cutting_tip_radius": self.cutting_tip_radius,
            "external_radius": s.external_diameter / 2,
        }


def derive_hob(spec: HobSpec, truncate: bool = True) -> DerivedHob:
    lam = math.asin(spec.starts * spec.module / spec.pitch_diameter)
    if abs(math.degrees(lam) - spec.lead_angle) > 0.1:
        raise HobSpecError(
            f"lead angle {spec.lead_angle:.4f}° disagrees with asin(starts*m/d) = {math.degrees(lam):.4f}°"
        )
    alpha_x = math.atan(math.tan(math.radians(spec.normal_pressure_angle)) / math.cos(lam))
    pitch = math.pi * spec.module / math.cos(lam)
    lead = spec.starts * pitch
    r_p = spec.pitch_diameter / 2
    r_tip = r_p + spec.addendum
    r_root = r_tip - spec.whole_depth
    s_x = spec.normal_tooth_thickness / math.cos(lam)
    half_length = spec.hob_length / 2 if truncate else math.inf
    sign = 1.0 if spec.thread_hand == "right" else -1.0
    profile = _pack_profile(
        lead_per_rad=sign * lead / (2 * math.pi),
        pitch=pitch,
        r_tip=r_tip,
        r_root=r_root,
        r_pitch=r_p,
        half_thickness=s_x / 2,
        alpha=alpha_x,
        rt=spec.tip_corner_radius,
        rf=spec.root_fillet_radius,
        half_length=half_length,
        form=spec.thread_form,
    )
    return DerivedHob(
        spec=spec,
        pitch_radius=r_p,
        cutting_tip_radius=r_tip,
        root_radius=r_root,
        axial_pitch=pitch,
        lead=lead,
        derived_lead_angle=math.degrees(lam),
        derived_axial_profile_angle=math.degrees(alpha_x),
        axial_thickness=s_x,
        half_length=half_length,
        profile=profile,
    )


def _pack_profile(lead_per_rad, pitch, r_tip, r_root, r_pitch, half_thickness, alpha, rt, rf,
                  half_length, form="ZI"):
    p = np.zeros(_kernels.PROFILE_SIZE)
    p[_kernels.LEAD] = lead_per_rad
    p[_kernels.PITCH] = pitch
    p[_kernels.R_TIP] = r_tip
    p[_kernels.R_ROOT] = r_root
    p[_kernels.SIN_A] = math.sin(alpha)
    p[_kernels.COS_A] = math.cos(alpha)
    p[_kernels.HALF_LEN] = half_length
    p[_kernels.R_PITCH] = r_pitch
    p[_kernels.V_PITCH] = half_thickness
    if form == "ZI":
        # involute helicoid whose axial slope at r_pitch equals tan(alpha)
        s_p = math.tan(alpha) * r_pitch / abs(lead_per_rad)
        p[_kernels.FORM] = _kernels.INVOLUTE
        p[_kernels.R_BASE] = r_pitch / math.sqrt(1 + s_p * s_p)
        p[_kernels.PSI_PITCH] = s_p - math.atan(s_p)
    elif form == "ZA":
        p[_kernels.FORM] = _kernels.STRAIGHT
    else:
        raise HobSpecError(f"unknown thread form {form!r}")

    def curve(rho):
        return _kernels.flank_curve(rho, p)

    def unit_normal(rho):
        # outward normal of the flank in (rho, v), pointing into the thread space
        _, h1, _ = curve(rho)
        n = np.array([-h1, 1.0])
        return n / np.hypot(*n)

    def tangent_point(offset, target):
        # flank point whose normal offset by `offset` lands on rho = target
        def g(rho):
            return rho + offset * unit_normal(rho)[0] - target
        lo = max(r_root - 2 * abs(offset) - 1.0, 1e-3 + (p[_kernels.R_BASE] if form == "ZI" else 0.0))
        return optimize.brentq(g, lo, r_tip + 2 * abs(offset) + 1.0, xtol=1e-14)

    t1 = tangent_point(-rt, r_tip - rt)
    t2 = tangent_point(rf, r_root + rf)
    n1, n2 = unit_normal(t1), unit_normal(t2)
    ct = np.array([t1, curve(t1)[0]]) - rt * n1
    cf = np.array([t2, curve(t2)[0]]) + rf * n2
    if ct[1] < 0:
        raise HobSpecError("tip corner radius does not fit on the thread tip")
    if cf[1] > pitch / 2:
        raise HobSpecError("root fillet radius does not fit in the thread space")
    p[_kernels.CT_RHO], p[_kernels.CT_V], p[_kernels.RT] = ct[0], ct[1], rt
    p[_kernels.CF_RHO], p[_kernels.CF_V], p[_kernels.RF] = cf[0], cf[1], rf
    p[_kernels.T1_RHO], p[_kernels.T1_V] = t1, curve(t1)[0]
    p[_kernels.T2_RHO], p[_kernels.T2_V] = t2, curve(t2)[0]
    p[_kernels.TIP_SPAN] = math.atan2(n1[1], n1[0])
    p[_kernels.FIL_SPAN] = math.atan2(n2[1], n2[0])
    # marching bound: |grad (rho, w)| <= sqrt(1 + (lead/2pi / rho)^2), rho kept above r_root/2
    p[_kernels.LIP] = math.sqrt(1 + (lead_per_rad / (0.5 * r_root)) ** 2)
    return p


def hob_signed_membership(h: DerivedHob, points) -> np.ndarray:
    """Signed membership of hob-frame points: negative inside the thread solid.

    The value is the Euclidean distance to the axial-section boundary measured
    in ``(rho, w)`` coordinates, combined with the end faces of the hob body.
    """
    pts = np.ascontiguousarray(np.asarray(points, dtype=float).reshape(-1, 3))
    out = _kernels.membership_many(pts, h.profile)
    return out.reshape(np.shape(points)[:-1])


def axial_section_value(h: DerivedHob, rho, w) -> np.ndarray:
    """Signed distance of reduced coordinates ``(rho, w)`` to the axial section."""
    rho, w = np.broadcast_arrays(np.asarray(rho, dtype=float), np.asarray(w, dtype=float))
    out = _kernels.section_many(np.ascontiguousarray(rho.ravel()), np.ascontiguousarray(w.ravel()), h.profile)
    return out.reshape(rho.shape)


def screw_hob(h: DerivedHob, points, turns: float = 1.0) -> np.ndarray:
    """Move points along the thread helix by ``turns`` revolutions."""
    pts = np.asarray(points, dtype=float)
    ang = 2 * math.pi * turns
    c, s = math.cos(ang), math.sin(ang)
    x, y, z = pts[..., 0], pts[..., 1], pts[..., 2]
    return np.stack([c * x - s * y, s * x + c * y, z + h.lead_per_radian * ang], axis=-1)
