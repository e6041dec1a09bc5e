"""Compiled inner loops: thread membership and ray/cutter intersection.

All functions take the hob profile as a packed float array (see the index
constants below) and cutter poses as affine maps ``body = A[k] @ p + b[k]``
from the workpiece frame into the rotating hob body frame.
"""

import math

import numpy as np
from numba import njit

LEAD, PITCH, R_TIP, R_ROOT = 0, 1, 2, 3
CT_RHO, CT_V, RT = 4, 5, 6
CF_RHO, CF_V, RF = 7, 8, 9
SIN_A, COS_A = 10, 11
T1_RHO, T1_V, T2_RHO, T2_V = 12, 13, 14, 15
HALF_LEN, R_PITCH, V_PITCH, LIP = 16, 17, 18, 19
FORM, R_BASE, PSI_PITCH, TIP_SPAN, FIL_SPAN = 20, 21, 22, 23, 24
PROFILE_SIZE = 25

STRAIGHT, INVOLUTE = 0.0, 1.0


@njit(cache=True)
def flank_curve(rho, prof):
    """Half thickness of the thread at radius ``rho`` and its first two derivatives."""
    if prof[FORM] == INVOLUTE:
        p = abs(prof[LEAD])
        rb = prof[R_BASE]
        s = math.sqrt(max(rho * rho / (rb * rb) - 1.0, 1e-300))
        h = prof[V_PITCH] - p * ((s - math.atan(s)) - prof[PSI_PITCH])
        return h, -p * s / rho, -p / (s * rho * rho)
    tan_a = prof[SIN_A] / prof[COS_A]
    return prof[V_PITCH] - (rho - prof[R_PITCH]) * tan_a, -tan_a, 0.0


@njit(cache=True)
def _flank_distance(rho, v, prof):
    lo, hi = prof[T2_RHO], prof[T1_RHO]
    # start from the projection onto the chord, then Newton on the foot point
    ax, ay, bx, by = lo, prof[T2_V], hi, prof[T1_V]
    dx, dy = bx - ax, by - ay
    s = ((rho - ax) * dx + (v - ay) * dy) / (dx * dx + dy * dy)
    r = ax + min(1.0, max(0.0, s)) * dx
    for _ in range(4):
        h, h1, h2 = flank_curve(r, prof)
        g = (r - rho) + (h - v) * h1
        dg = 1.0 + h1 * h1 + (h - v) * h2
        if dg <= 0.0:
            break
        r = min(hi, max(lo, r - g / dg))
    h, h1, h2 = flank_curve(r, prof)
    return math.sqrt((rho - r) ** 2 + (v - h) ** 2)


@njit(cache=True)
def _segment_distance(px, py, ax, ay, bx, by):
    dx, dy = bx - ax, by - ay
    den = dx * dx + dy * dy
    s = 0.0
    if den > 0.0:
        s = ((px - ax) * dx + (py - ay) * dy) / den
        s = min(1.0, max(0.0, s))
    ex, ey = px - (ax + s * dx), py - (ay + s * dy)
    return math.sqrt(ex * ex + ey * ey)


@njit(cache=True)
def section_value(rho, v, prof):
    """Signed distance to the axial section in the half period ``0 <= v <= pitch/2``."""
    r_tip, r_root = prof[R_TIP], prof[R_ROOT]
    ct_r, ct_v, rt = prof[CT_RHO], prof[CT_V], prof[RT]
    cf_r, cf_v, rf = prof[CF_RHO], prof[CF_V], prof[RF]
    t1r, t1v, t2r, t2v = prof[T1_RHO], prof[T1_V], prof[T2_RHO], prof[T2_V]
    half_pitch = 0.5 * prof[PITCH]

    # material half-width at this radius
    if rho >= r_tip:
        inside = False
    elif rho <= r_root:
        inside = True
    else:
        if rho < t2r:
            dr = rho - cf_r
            width = cf_v - math.sqrt(max(rf * rf - dr * dr, 0.0))
        elif rho <= t1r:
            width = flank_curve(rho, prof)[0]
        else:
            dr = rho - ct_r
            width = ct_v + math.sqrt(max(rt * rt - dr * dr, 0.0))
        inside = v < width

    d = _segment_distance(rho, v, r_tip, 0.0, r_tip, ct_v)
    d = min(d, _flank_distance(rho, v, prof))
    d = min(d, _segment_distance(rho, v, r_root, cf_v, r_root, half_pitch))
    # tip arc: directions from (1, 0) to the flank normal at T1
    dr, dv = rho - ct_r, v - ct_v
    if dr >= 0.0 and dv >= 0.0 and math.atan2(dv, dr) <= prof[TIP_SPAN]:
        d = min(d, abs(math.sqrt(dr * dr + dv * dv) - rt))
    else:
        d = min(d, math.sqrt((rho - t1r) ** 2 + (v - t1v) ** 2))
        d = min(d, math.sqrt((rho - r_tip) ** 2 + (v - ct_v) ** 2))
    # root fillet: directions from (-1, 0) to minus the flank normal at T2
    dr, dv = rho - cf_r, v - cf_v
    if dr <= 0.0 and dv <= 0.0 and math.atan2(-dv, -dr) <= prof[FIL_SPAN]:
        d = min(d, abs(math.sqrt(dr * dr + dv * dv) - rf))
    else:
        d = min(d, math.sqrt((rho - t2r) ** 2 + (v - t2v) ** 2))
        d = min(d, math.sqrt((rho - r_root) ** 2 + (v - cf_v) ** 2))
    if inside:
        # deep in the core the nearest boundary depends on v, which is undefined on the
        # hob axis; a radial cap keeps the value single-valued there (slope 1/2 < 1)
        d = min(d, 0.5 * (prof[R_ROOT] - rho) + (prof[R_TIP] - prof[R_ROOT]))
        return -d
    return d


@njit(cache=True)
def fold(w, pitch):
    return abs(w - pitch * math.floor(w / pitch + 0.5))


@njit(cache=True)
def thread_value(x, y, z, prof):
    rho = math.sqrt(x * x + y * y)
    theta = math.atan2(y, x)
    v = fold(z - prof[LEAD] * theta, prof[PITCH])
    d = section_value(rho, v, prof)
    return max(d, abs(z) - prof[HALF_LEN])


@njit(cache=True)
def membership_many(pts, prof):
    out = np.empty(pts.shape[0])
    for i in range(pts.shape[0]):
        out[i] = thread_value(pts[i, 0], pts[i, 1], pts[i, 2], prof)
    return out


@njit(cache=True)
def section_many(rho, w, prof):
    out = np.empty(rho.shape[0])
    for i in range(rho.shape[0]):
        out[i] = section_value(rho[i], fold(w[i], prof[PITCH]), prof)
    return out


@njit(cache=True)
def _ray_value(ox, oy, oz, dx, dy, dz, t, prof):
    return thread_value(ox + t * dx, oy + t * dy, oz + t * dz, prof)


@njit(cache=True)
def _bisect(ox, oy, oz, dx, dy, dz, t_out, t_in, prof, tol):
    # invariant: value(t_out) > 0 >= value(t_in)
    while abs(t_in - t_out) > tol:
        tm = 0.5 * (t_out + t_in)
        if _ray_value(ox, oy, oz, dx, dy, dz, tm, prof) > 0.0:
            t_out = tm
        else:
            t_in = tm
    return 0.5 * (t_out + t_in)


@njit(cache=True)
def first_entry(ox, oy, oz, dx, dy, dz, t_lo, t_hi, f_lo, prof, tol):
    """Smallest t in [t_lo, t_hi] where the ray enters the solid, else +inf.

    Marches with steps ``f / L`` (never past a boundary for an ``L``-Lipschitz
    membership), falling back to ``tol / 2`` near the surface.
    """
    lip = prof[LIP]
    if f_lo <= 0.0:
        return t_lo
    t, f = t_lo, f_lo
    while t < t_hi:
        t_next = min(t + max(f / lip, 0.5 * tol), t_hi)
        f_next = _ray_value(ox, oy, oz, dx, dy, dz, t_next, prof)
        if f_next <= 0.0:
            return _bisect(ox, oy, oz, dx, dy, dz, t, t_next, prof, tol)
        t, f = t_next, f_next
    return np.inf


@njit(cache=True)
def last_exit_below(ox, oy, oz, dx, dy, dz, t_hi, t_lo, f_hi, prof, tol):
    """Starting inside at t_hi, the largest t >= t_lo where the solid begins (going up)."""
    lip = prof[LIP]
    t, f = t_hi, f_hi
    while t > t_lo:
        t_next = max(t - max(-f / lip, 0.5 * tol), t_lo)
        f_next = _ray_value(ox, oy, oz, dx, dy, dz, t_next, prof)
        if f_next > 0.0:
            return _bisect(ox, oy, oz, dx, dy, dz, t_next, t, prof, tol)
        t, f = t_next, f_next
    return t_lo


@njit(cache=True)
def _to_body(A, b, k, px, py, pz):
    return (
        A[k, 0, 0] * px + A[k, 0, 1] * py + A[k, 0, 2] * pz + b[k, 0],
        A[k, 1, 0] * px + A[k, 1, 1] * py + A[k, 1, 2] * pz + b[k, 1],
        A[k, 2, 0] * px + A[k, 2, 1] * py + A[k, 2, 2] * pz + b[k, 2],
    )


@njit(cache=True)
def _rotate(A, k, nx, ny, nz):
    return (
        A[k, 0, 0] * nx + A[k, 0, 1] * ny + A[k, 0, 2] * nz,
        A[k, 1, 0] * nx + A[k, 1, 1] * ny + A[k, 1, 2] * nz,
        A[k, 2, 0] * nx + A[k, 2, 1] * ny + A[k, 2, 2] * nz,
    )


@njit(cache=True)
def _reachable(ox, oy, oz, reach, prof):
    # a ray segment of half-length `reach` cannot touch a pose whose solid lies farther away
    rho = math.sqrt(ox * ox + oy * oy)
    return rho - reach <= prof[R_TIP] and abs(oz) - reach <= prof[HALF_LEN]


@njit(cache=True)
def ray_deviation(px, py, pz, nx, ny, nz, A, b, prof, halfwidth, tol, cull):
    """Per-pose surface position along the normal ray, minimised over poses.

    For each pose: if the base point is outside the cutter, the first entry
    above it; otherwise the entry below it (the point is undercut).
    Returns ``(t, pose)``; ``t = inf`` when no pose reaches the ray.
    """
    n_pose = A.shape[0]
    f0 = np.empty(n_pose)
    for k in range(n_pose):
        ox, oy, oz = _to_body(A, b, k, px, py, pz)
        if cull and not _reachable(ox, oy, oz, halfwidth, prof):
            f0[k] = np.inf
        else:
            f0[k] = thread_value(ox, oy, oz, prof)
    order = np.argsort(f0, kind="mergesort")
    lip = prof[LIP]
    best, best_k = np.inf, -1
    for j in range(n_pose):
        k = order[j]
        f = f0[k]
        if f == np.inf:
            break
        limit = min(best, halfwidth)
        if f > 0.0 and f > lip * limit:
            break  # sorted: no later pose can enter below the current best
        ox, oy, oz = _to_body(A, b, k, px, py, pz)
        dx, dy, dz = _rotate(A, k, nx, ny, nz)
        if f > 0.0:
            t = first_entry(ox, oy, oz, dx, dy, dz, 0.0, limit, f, prof, tol)
        else:
            t = last_exit_below(ox, oy, oz, dx, dy, dz, 0.0, -halfwidth, f, prof, tol)
        if t < best:
            best, best_k = t, k
    return best, best_k


@njit(cache=True)
def deviations_many(points, normals, A, b, prof, halfwidth, tol, cull):
    n = points.shape[0]
    dev = np.empty(n)
    idx = np.empty(n, dtype=np.int64)
    for i in range(n):
        t, k = ray_deviation(points[i, 0], points[i, 1], points[i, 2],
                             normals[i, 0], normals[i, 1], normals[i, 2],
                             A, b, prof, halfwidth, tol, cull)
        dev[i] = t
        idx[i] = k
    return dev, idx


@njit(cache=True)
def brute_ray_deviation(px, py, pz, nx, ny, nz, A, b, prof, halfwidth, step):
    """Same per-pose rule evaluated on a uniform ``step`` lattice, no bisection, no culling.

    Lattice samples are skipped only when the Lipschitz bound proves that no
    sign change can occur before them, so the result equals a full scan.
    Crossings are reported at the midpoint of the bracketing lattice cell.
    """
    n_steps = int(round(halfwidth / step))
    lip = prof[LIP]
    best, best_k = np.inf, -1
    for k in range(A.shape[0]):
        ox, oy, oz = _to_body(A, b, k, px, py, pz)
        dx, dy, dz = _rotate(A, k, nx, ny, nz)
        f0 = thread_value(ox, oy, oz, prof)
        t_k = np.inf
        i, f = 0, f0
        if f0 > 0.0:
            while i < n_steps:
                # lattice points closer than f / lip are provably outside
                j = min(i + max(int(f / (lip * step)), 1), n_steps)
                f = _ray_value(ox, oy, oz, dx, dy, dz, j * step, prof)
                if f <= 0.0:
                    t_k = (j - 0.5) * step
                    break
                i = j
        else:
            t_k = -halfwidth
            while i < n_steps:
                j = min(i + max(int(-f / (lip * step)), 1), n_steps)
                f = _ray_value(ox, oy, oz, dx, dy, dz, -j * step, prof)
                if f > 0.0:
                    t_k = -(j - 0.5) * step
                    break
                i = j
        if t_k < best:
            best, best_k = t_k, k
    return best, best_k


@njit(cache=True)
def brute_many(points, normals, A, b, prof, halfwidth, step):
    n = points.shape[0]
    dev = np.empty(n)
    idx = np.empty(n, dtype=np.int64)
    for i in range(n):
        t, k = brute_ray_deviation(points[i, 0], points[i, 1], points[i, 2],
                                   normals[i, 0], normals[i, 1], normals[i, 2],
                                   A, b, prof, halfwidth, step)
        dev[i] = t
        idx[i] = k
    return dev, idx


@njit(cache=True)
def radial_profile(angles, z_plane, r_start, r_end, A, b, prof, tol):
    """Radius of the first cutter entry along radial rays in a transverse plane.

    Returns ``(radius, pose)``; rays no pose reaches keep ``r_end`` and pose -1.
    """
    n = angles.shape[0]
    out = np.empty(n)
    who = np.full(n, -1, dtype=np.int64)
    half = 0.5 * (r_end - r_start)
    r_mid = r_start + half
    lip = prof[LIP]
    for i in range(n):
        c, s = math.cos(angles[i]), math.sin(angles[i])
        best = r_end
        for k in range(A.shape[0]):
            ox, oy, oz = _to_body(A, b, k, r_mid * c, r_mid * s, z_plane)
            if not _reachable(ox, oy, oz, half, prof):
                continue
            dx, dy, dz = _rotate(A, k, c, s, 0.0)
            lo_x, lo_y, lo_z = ox - half * dx, oy - half * dy, oz - half * dz
            f = thread_value(lo_x, lo_y, lo_z, prof)
            limit = best - r_start
            if f > lip * limit:
                continue
            t = first_entry(lo_x, lo_y, lo_z, dx, dy, dz, 0.0, limit, f, prof, tol)
            if r_start + t < best:
                best = r_start + t
                who[i] = k
        out[i] = best
    return out, who
