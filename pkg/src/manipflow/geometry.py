"""Rigid-body math: quaternions, pose composition, SE(2) base poses.

Conventions used throughout the project:

* quaternions are ``(w, x, y, z)``, Hamilton product, active rotation;
* a pose transforms local coordinates into parent coordinates, so
  ``compose(a, b)`` is "b expressed in a's parent frame";
* all values are plain Python floats so that serialized entities
  round-trip bit-exactly.
"""

from __future__ import annotations

import math
from typing import Sequence, Tuple

Vec3 = Tuple[float, float, float]
Quat = Tuple[float, float, float, float]

IDENTITY_QUAT: Quat = (1.0, 0.0, 0.0, 0.0)


def vec3(v: Sequence[float]) -> Vec3:
    x, y, z = v
    return (float(x), float(y), float(z))


def quat(q: Sequence[float]) -> Quat:
    w, x, y, z = q
    return (float(w), float(x), float(y), float(z))


def vnorm(v: Sequence[float]) -> float:
    return math.sqrt(sum(c * c for c in v))


def vsub(a: Vec3, b: Vec3) -> Vec3:
    return (a[0] - b[0], a[1] - b[1], a[2] - b[2])


def vadd(a: Vec3, b: Vec3) -> Vec3:
    return (a[0] + b[0], a[1] + b[1], a[2] + b[2])


def vscale(v: Vec3, s: float) -> Vec3:
    return (v[0] * s, v[1] * s, v[2] * s)


def vdot(a: Vec3, b: Vec3) -> float:
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def vcross(a: Vec3, b: Vec3) -> Vec3:
    return (
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    )


def vunit(v: Vec3) -> Vec3:
    n = vnorm(v)
    if n == 0.0:
        raise ValueError("cannot normalize zero vector")
    return (v[0] / n, v[1] / n, v[2] / n)


def qmul(a: Quat, b: Quat) -> Quat:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return (
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    )


def qconj(q: Quat) -> Quat:
    return (q[0], -q[1], -q[2], -q[3])


def qnormalize(q: Quat) -> Quat:
    n = vnorm(q)
    if n == 0.0:
        raise ValueError("cannot normalize zero quaternion")
    return (q[0] / n, q[1] / n, q[2] / n, q[3] / n)


def qrotate(q: Quat, v: Vec3) -> Vec3:
    """Rotate vector v by quaternion q (active rotation)."""
    w, x, y, z = q
    # q * (0, v) * q^-1 expanded; assumes unit q.
    tx = 2.0 * (y * v[2] - z * v[1])
    ty = 2.0 * (z * v[0] - x * v[2])
    tz = 2.0 * (x * v[1] - y * v[0])
    return (
        v[0] + w * tx + (y * tz - z * ty),
        v[1] + w * ty + (z * tx - x * tz),
        v[2] + w * tz + (x * ty - y * tx),
    )


def quat_from_axis_angle(axis: Vec3, angle: float) -> Quat:
    a = vunit(axis)
    h = 0.5 * angle
    s = math.sin(h)
    return (math.cos(h), a[0] * s, a[1] * s, a[2] * s)


def quat_from_unit_axis_angle(axis: Vec3, angle: float) -> Quat:
    """Like quat_from_axis_angle but trusts |axis| = 1 (hot path)."""
    h = 0.5 * angle
    s = math.sin(h)
    return (math.cos(h), axis[0] * s, axis[1] * s, axis[2] * s)


def quat_to_rotvec(q: Quat) -> Vec3:
    """Rotation vector (axis * angle) of a unit quaternion, angle in [0, pi]."""
    w, x, y, z = q
    if w < 0.0:  # shortest arc
        w, x, y, z = -w, -x, -y, -z
    sin_half = math.sqrt(x * x + y * y + z * z)
    if sin_half < 1e-12:
        return (2.0 * x, 2.0 * y, 2.0 * z)
    angle = 2.0 * math.atan2(sin_half, w)
    k = angle / sin_half
    return (x * k, y * k, z * k)


def rotvec_to_quat(r: Vec3) -> Quat:
    angle = vnorm(r)
    if angle < 1e-12:
        return (1.0, 0.5 * r[0], 0.5 * r[1], 0.5 * r[2])
    s = math.sin(0.5 * angle) / angle
    return (math.cos(0.5 * angle), r[0] * s, r[1] * s, r[2] * s)


def quat_angle(a: Quat, b: Quat) -> float:
    """Geodesic angle between two unit quaternions in radians."""
    return vnorm(quat_to_rotvec(qmul(a, qconj(b))))


def slerp(a: Quat, b: Quat, t: float) -> Quat:
    """Shortest-arc spherical interpolation between unit quaternions."""
    dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
    if dot < 0.0:
        b = (-b[0], -b[1], -b[2], -b[3])
        dot = -dot
    if dot > 1.0 - 1e-12:
        mixed = tuple(a[i] + t * (b[i] - a[i]) for i in range(4))
        return qnormalize(mixed)  # type: ignore[arg-type]
    theta = math.acos(min(1.0, dot))
    sin_theta = math.sin(theta)
    wa = math.sin((1.0 - t) * theta) / sin_theta
    wb = math.sin(t * theta) / sin_theta
    return qnormalize(tuple(wa * a[i] + wb * b[i] for i in range(4)))  # type: ignore[arg-type]


def quat_to_matrix(q: Quat) -> Tuple[Vec3, Vec3, Vec3]:
    """Rows of the rotation matrix for q."""
    w, x, y, z = q
    return (
        (1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)),
        (2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)),
        (2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)),
    )


def matrix_to_quat(rows: Sequence[Sequence[float]]) -> Quat:
    m00, m01, m02 = rows[0]
    m10, m11, m12 = rows[1]
    m20, m21, m22 = rows[2]
    tr = m00 + m11 + m22
    if tr > 0.0:
        s = math.sqrt(tr + 1.0) * 2.0
        q = (0.25 * s, (m21 - m12) / s, (m02 - m20) / s, (m10 - m01) / s)
    elif m00 > m11 and m00 > m22:
        s = math.sqrt(1.0 + m00 - m11 - m22) * 2.0
        q = ((m21 - m12) / s, 0.25 * s, (m01 + m10) / s, (m02 + m20) / s)
    elif m11 > m22:
        s = math.sqrt(1.0 + m11 - m00 - m22) * 2.0
        q = ((m02 - m20) / s, (m01 + m10) / s, 0.25 * s, (m12 + m21) / s)
    else:
        s = math.sqrt(1.0 + m22 - m00 - m11) * 2.0
        q = ((m10 - m01) / s, (m02 + m20) / s, (m12 + m21) / s, 0.25 * s)
    return qnormalize(q)


def orientation_from_axes(z_axis: Vec3, y_axis: Vec3) -> Quat:
    """Quaternion whose frame has the given z (approach) and y (closing) axes.

    y is re-orthogonalized against z; x completes the right-handed triple.
    """
    z = vunit(z_axis)
    y = vsub(y_axis, vscale(z, vdot(y_axis, z)))
    y = vunit(y)
    x = vcross(y, z)
    # columns x, y, z -> rows of the matrix
    return matrix_to_quat(((x[0], y[0], z[0]), (x[1], y[1], z[1]), (x[2], y[2], z[2])))


def compose(pa: "tuple[Vec3, Quat]", pb: "tuple[Vec3, Quat]") -> "tuple[Vec3, Quat]":
    """(position, quat) composition: result = pa ∘ pb."""
    pos_a, q_a = pa
    pos_b, q_b = pb
    return (vadd(pos_a, qrotate(q_a, pos_b)), qmul(q_a, q_b))


def invert(p: "tuple[Vec3, Quat]") -> "tuple[Vec3, Quat]":
    pos, q = p
    qi = qconj(q)
    return (vscale(qrotate(qi, pos), -1.0), qi)


def se2_to_se3(x: float, y: float, yaw: float) -> "tuple[Vec3, Quat]":
    return ((x, y, 0.0), quat_from_axis_angle((0.0, 0.0, 1.0), yaw))


def wrap_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""
    a = math.fmod(a, 2.0 * math.pi)
    if a > math.pi:
        a -= 2.0 * math.pi
    elif a <= -math.pi:
        a += 2.0 * math.pi
    return a
