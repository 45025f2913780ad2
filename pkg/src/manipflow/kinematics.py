"""Serial-chain kinematics: FK, geometric Jacobian, damped-least-squares IK,
Yoshikawa manipulability and a soft joint-limit cost.

All operations are pure functions over immutable inputs. Joint values are
radians for revolute joints and meters for prismatic ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Mapping, Optional, Sequence, Tuple

import numpy as np

from . import geometry as geo
from .idf import Pose, _check


class JointType(Enum):
    Revolute = "Revolute"
    Prismatic = "Prismatic"


class DimensionMismatch(Exception):
    """Joint vector length does not match the chain."""


@dataclass(frozen=True)
class Joint:
    name: str
    type: JointType
    origin: Pose  # parent frame -> joint frame, fixed
    axis: geo.Vec3  # unit, in joint frame
    limits: Tuple[float, float]

    def __post_init__(self) -> None:
        object.__setattr__(self, "axis", geo.vec3(self.axis))
        object.__setattr__(self, "limits",
                           (float(self.limits[0]), float(self.limits[1])))
        _check(abs(geo.vnorm(self.axis) - 1.0) <= 1e-9, "|axis| = 1")
        _check(self.limits[0] < self.limits[1], "lower < upper")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "type": self.type.name,
            "originTransform": self.origin.to_dict(),
            "axis": list(self.axis),
            "limits": list(self.limits),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "Joint":
        return cls(
            name=str(d["name"]),
            type=JointType[d["type"]],
            origin=Pose.from_dict(d["originTransform"]),
            axis=geo.vec3(d["axis"]),
            limits=(float(d["limits"][0]), float(d["limits"][1])),
        )


@dataclass(frozen=True)
class SerialChain:
    name: str
    joints: Tuple[Joint, ...]
    base: Pose = field(default_factory=Pose)
    tcp: Pose = field(default_factory=Pose)

    def __post_init__(self) -> None:
        object.__setattr__(self, "joints", tuple(self.joints))
        _check(len(self.joints) >= 1, "chain has >= 1 joint")

    @property
    def dof(self) -> int:
        return len(self.joints)

    def limits_low(self) -> np.ndarray:
        return np.array([j.limits[0] for j in self.joints])

    def limits_high(self) -> np.ndarray:
        return np.array([j.limits[1] for j in self.joints])

    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.limits_low() + self.limits_high())

    def clamp(self, q: np.ndarray) -> np.ndarray:
        return np.clip(q, self.limits_low(), self.limits_high())

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "baseTransform": self.base.to_dict(),
            "joints": [j.to_dict() for j in self.joints],
            "tcpTransform": self.tcp.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "SerialChain":
        return cls(
            name=str(d["name"]),
            joints=tuple(Joint.from_dict(j) for j in d["joints"]),
            base=Pose.from_dict(d["baseTransform"]),
            tcp=Pose.from_dict(d["tcpTransform"]),
        )


def _check_dims(chain: SerialChain, q: Sequence[float]) -> None:
    if len(q) != chain.dof:
        raise DimensionMismatch(
            f"joint vector length {len(q)} != chain dof {chain.dof}")


def _joint_motion(joint: Joint, value: float) -> "tuple[geo.Vec3, geo.Quat]":
    if joint.type is JointType.Revolute:
        return ((0.0, 0.0, 0.0),
                geo.quat_from_unit_axis_angle(joint.axis, value))
    return (geo.vscale(joint.axis, value), geo.IDENTITY_QUAT)


def _sweep(chain: SerialChain, q: Sequence[float]):
    """One pass down the chain: TCP pose plus per-joint world axes/origins."""
    t = (chain.base.position, chain.base.orientation)
    axes = []
    origins = []
    for joint, value in zip(chain.joints, q):
        t = geo.compose(t, (joint.origin.position, joint.origin.orientation))
        axes.append(geo.qrotate(t[1], joint.axis))
        origins.append(t[0])
        t = geo.compose(t, _joint_motion(joint, float(value)))
    t = geo.compose(t, (chain.tcp.position, chain.tcp.orientation))
    return t, axes, origins


def _jacobian_from_sweep(chain: SerialChain, tcp, axes, origins) -> np.ndarray:
    p_tcp = tcp[0]
    J = np.zeros((6, chain.dof))
    for i, joint in enumerate(chain.joints):
        z = axes[i]
        if joint.type is JointType.Revolute:
            r = geo.vsub(p_tcp, origins[i])
            J[0:3, i] = geo.vcross(z, r)
            J[3:6, i] = z
        else:
            J[0:3, i] = z
    return J


def fk(chain: SerialChain, q: Sequence[float]) -> Pose:
    """TCP pose in the robot-base frame at configuration q.

    Joint limits are deliberately not enforced here.
    """
    _check_dims(chain, q)
    t, _, _ = _sweep(chain, q)
    return Pose(position=t[0], orientation=t[1])


def jacobian(chain: SerialChain, q: Sequence[float]) -> np.ndarray:
    """Geometric Jacobian at the TCP, 6 x n (linear rows first)."""
    _check_dims(chain, q)
    t, axes, origins = _sweep(chain, q)
    return _jacobian_from_sweep(chain, t, axes, origins)


def manipulability(J: np.ndarray, block: str = "auto") -> float:
    """Yoshikawa measure w = sqrt(det(J J^T)) on the chosen row block.

    ``block``: "full" uses all 6 rows, "position" the linear rows only,
    "auto" picks "full" for n >= 6 and "position" otherwise. For blocks
    with fewer joints than rows the Gram matrix is taken on the joint side
    (det(J^T J)), which equals the squared product of singular values either
    way and keeps the measure meaningful for short test chains.
    """
    n = J.shape[1]
    if block == "auto":
        block = "full" if n >= 6 else "position"
    rows = J if block == "full" else J[0:3, :]
    m = rows.shape[0]
    g = rows @ rows.T if m <= n else rows.T @ rows
    det = float(np.linalg.det(g))
    return math.sqrt(det) if det > 0.0 else 0.0


@dataclass(frozen=True)
class IKOptions:
    max_iter: int = 200
    pos_tol: float = 1e-4
    ori_tol: float = 1e-3
    damping: float = 0.05
    clamp_limits: bool = True


@dataclass(frozen=True)
class IKResult:
    q: np.ndarray
    converged: bool
    pos_residual: float
    ori_residual: float
    iterations: int


def pose_twist_error(target: Pose, current: Pose) -> np.ndarray:
    """6-vector (linear, angular) moving current toward target, base frame."""
    return _twist_error((target.position, target.orientation),
                        (current.position, current.orientation))


def _twist_error(target, current) -> np.ndarray:
    dp = geo.vsub(target[0], current[0])
    dq = geo.qmul(target[1], geo.qconj(current[1]))
    dr = geo.quat_to_rotvec(dq)
    return np.array([dp[0], dp[1], dp[2], dr[0], dr[1], dr[2]])


def _ik_python(chain: SerialChain, target: Pose, q0: Sequence[float],
               opts: IKOptions) -> IKResult:
    q = np.array([float(v) for v in q0])
    if opts.clamp_limits:
        q = chain.clamp(q)
    lam2 = opts.damping * opts.damping
    eye6 = np.eye(6)

    target_tuple = (target.position, target.orientation)
    best_q = q.copy()
    best_res = math.inf
    best_pos = math.inf
    best_ori = math.inf
    stalled = 0
    for it in range(opts.max_iter + 1):
        t, axes, origins = _sweep(chain, q)
        e = _twist_error(target_tuple, t)
        pos_res = float(np.linalg.norm(e[0:3]))
        ori_res = float(np.linalg.norm(e[3:6]))
        combined = pos_res + 0.1 * ori_res
        if combined < best_res - 1e-12:
            best_res = combined
            best_q = q.copy()
            best_pos, best_ori = pos_res, ori_res
            stalled = 0
        else:
            stalled += 1
        if pos_res <= opts.pos_tol and ori_res <= opts.ori_tol:
            return IKResult(q=q, converged=True, pos_residual=pos_res,
                            ori_residual=ori_res, iterations=it)
        if it == opts.max_iter or stalled >= 5:
            break
        J = _jacobian_from_sweep(chain, t, axes, origins)
        dq = J.T @ np.linalg.solve(J @ J.T + lam2 * eye6, e)
        q = q + dq
        if opts.clamp_limits:
            q = chain.clamp(q)
    return IKResult(q=best_q, converged=False, pos_residual=best_pos,
                    ori_residual=best_ori, iterations=opts.max_iter)


def ik(chain: SerialChain, target: Pose, q0: Sequence[float],
       opts: IKOptions = IKOptions()) -> IKResult:
    """Damped-least-squares IK toward a TCP target in the robot-base frame.

    Deterministic for fixed inputs: dq = J^T (J J^T + lambda^2 I)^-1 e per
    iteration, clamped to the joint limits. On non-convergence the
    best-effort configuration and its residuals are returned.
    """
    _check_dims(chain, q0)
    if _ik_jit is not None:
        arrays = _chain_arrays(chain)
        q, converged, pos_res, ori_res, iterations = _ik_jit(
            *arrays,
            np.array([float(v) for v in q0]),
            np.array(target.position), np.array(target.orientation),
            opts.max_iter, opts.pos_tol, opts.ori_tol,
            opts.damping * opts.damping, opts.clamp_limits)
        return IKResult(q=q, converged=bool(converged),
                        pos_residual=float(pos_res),
                        ori_residual=float(ori_res), iterations=int(iterations))
    return _ik_python(chain, target, q0, opts)


@lru_cache(maxsize=128)
def _chain_arrays(chain: SerialChain):
    types = np.array([0 if j.type is JointType.Revolute else 1
                      for j in chain.joints], dtype=np.int64)
    axes = np.array([j.axis for j in chain.joints])
    origin_pos = np.array([j.origin.position for j in chain.joints])
    origin_quat = np.array([j.origin.orientation for j in chain.joints])
    return (types, axes, origin_pos, origin_quat,
            np.array(chain.base.position), np.array(chain.base.orientation),
            np.array(chain.tcp.position), np.array(chain.tcp.orientation),
            chain.limits_low(), chain.limits_high())


def _build_ik_jit():
    try:
        from numba import njit
    except ImportError:
        return None

    @njit(cache=True)
    def ik_loop(types, axes, origin_pos, origin_quat, base_pos, base_quat,
                tcp_pos, tcp_quat, lo, hi, q0, tgt_p, tgt_q,
                max_iter, pos_tol, ori_tol, lam2, clamp):
        n = q0.shape[0]
        q = q0.copy()
        if clamp:
            for i in range(n):
                q[i] = min(max(q[i], lo[i]), hi[i])
        best_q = q.copy()
        best_res = 1e300
        best_pos = 1e300
        best_ori = 1e300
        stalled = 0
        eye6 = np.eye(6)
        J = np.zeros((6, n))
        world_axes = np.zeros((n, 3))
        world_org = np.zeros((n, 3))
        for it in range(max_iter + 1):
            # forward sweep: pose composition down the chain
            px, py, pz = base_pos[0], base_pos[1], base_pos[2]
            qw, qx, qy, qz = base_quat[0], base_quat[1], base_quat[2], base_quat[3]
            for i in range(n):
                # compose fixed origin transform
                ox, oy, oz = origin_pos[i, 0], origin_pos[i, 1], origin_pos[i, 2]
                tx = 2.0 * (qy * oz - qz * oy)
                ty = 2.0 * (qz * ox - qx * oz)
                tz = 2.0 * (qx * oy - qy * ox)
                px += ox + qw * tx + (qy * tz - qz * ty)
                py += oy + qw * ty + (qz * tx - qx * tz)
                pz += oz + qw * tz + (qx * ty - qy * tx)
                ow, ox2, oy2, oz2 = (origin_quat[i, 0], origin_quat[i, 1],
                                     origin_quat[i, 2], origin_quat[i, 3])
                nw = qw * ow - qx * ox2 - qy * oy2 - qz * oz2
                nx = qw * ox2 + qx * ow + qy * oz2 - qz * oy2
                ny = qw * oy2 - qx * oz2 + qy * ow + qz * ox2
                nz = qw * oz2 + qx * oy2 - qy * ox2 + qz * ow
                qw, qx, qy, qz = nw, nx, ny, nz
                # world axis and joint origin before motion
                ax, ay, az = axes[i, 0], axes[i, 1], axes[i, 2]
                tx = 2.0 * (qy * az - qz * ay)
                ty = 2.0 * (qz * ax - qx * az)
                tz = 2.0 * (qx * ay - qy * ax)
                wx = ax + qw * tx + (qy * tz - qz * ty)
                wy = ay + qw * ty + (qz * tx - qx * tz)
                wz = az + qw * tz + (qx * ty - qy * tx)
                world_axes[i, 0] = wx
                world_axes[i, 1] = wy
                world_axes[i, 2] = wz
                world_org[i, 0] = px
                world_org[i, 1] = py
                world_org[i, 2] = pz
                if types[i] == 0:
                    # revolute: rotate about the (unit) local axis
                    h = 0.5 * q[i]
                    s = math.sin(h)
                    rw, rx, ry, rz = math.cos(h), ax * s, ay * s, az * s
                    nw = qw * rw - qx * rx - qy * ry - qz * rz
                    nx = qw * rx + qx * rw + qy * rz - qz * ry
                    ny = qw * ry - qx * rz + qy * rw + qz * rx
                    nz = qw * rz + qx * ry - qy * rx + qz * rw
                    qw, qx, qy, qz = nw, nx, ny, nz
                else:
                    px += wx * q[i]
                    py += wy * q[i]
                    pz += wz * q[i]
            # tcp transform
            ox, oy, oz = tcp_pos[0], tcp_pos[1], tcp_pos[2]
            tx = 2.0 * (qy * oz - qz * oy)
            ty = 2.0 * (qz * ox - qx * oz)
            tz = 2.0 * (qx * oy - qy * ox)
            px += ox + qw * tx + (qy * tz - qz * ty)
            py += oy + qw * ty + (qz * tx - qx * tz)
            pz += oz + qw * tz + (qx * ty - qy * tx)
            ow, ox2, oy2, oz2 = tcp_quat[0], tcp_quat[1], tcp_quat[2], tcp_quat[3]
            nw = qw * ow - qx * ox2 - qy * oy2 - qz * oz2
            nx = qw * ox2 + qx * ow + qy * oz2 - qz * oy2
            ny = qw * oy2 - qx * oz2 + qy * ow + qz * ox2
            nz = qw * oz2 + qx * oy2 - qy * ox2 + qz * ow
            qw, qx, qy, qz = nw, nx, ny, nz

            # twist error toward target
            ex = tgt_p[0] - px
            ey = tgt_p[1] - py
            ez = tgt_p[2] - pz
            # dq = tgt_q * conj(current)
            dw = tgt_q[0] * qw + tgt_q[1] * qx + tgt_q[2] * qy + tgt_q[3] * qz
            dx = -tgt_q[0] * qx + tgt_q[1] * qw - tgt_q[2] * qz + tgt_q[3] * qy
            dy = -tgt_q[0] * qy + tgt_q[1] * qz + tgt_q[2] * qw - tgt_q[3] * qx
            dz = -tgt_q[0] * qz - tgt_q[1] * qy + tgt_q[2] * qx + tgt_q[3] * qw
            if dw < 0.0:
                dw, dx, dy, dz = -dw, -dx, -dy, -dz
            sin_half = math.sqrt(dx * dx + dy * dy + dz * dz)
            if sin_half < 1e-12:
                rx_, ry_, rz_ = 2.0 * dx, 2.0 * dy, 2.0 * dz
            else:
                angle = 2.0 * math.atan2(sin_half, dw)
                k = angle / sin_half
                rx_, ry_, rz_ = dx * k, dy * k, dz * k
            pos_res = math.sqrt(ex * ex + ey * ey + ez * ez)
            ori_res = math.sqrt(rx_ * rx_ + ry_ * ry_ + rz_ * rz_)
            combined = pos_res + 0.1 * ori_res
            if combined < best_res - 1e-12:
                best_res = combined
                best_q[:] = q
                best_pos = pos_res
                best_ori = ori_res
                stalled = 0
            else:
                stalled += 1
            if pos_res <= pos_tol and ori_res <= ori_tol:
                return q, True, pos_res, ori_res, it
            if it == max_iter or stalled >= 5:
                break
            # geometric jacobian at the TCP
            for i in range(n):
                if types[i] == 0:
                    rxp = px - world_org[i, 0]
                    ryp = py - world_org[i, 1]
                    rzp = pz - world_org[i, 2]
                    J[0, i] = world_axes[i, 1] * rzp - world_axes[i, 2] * ryp
                    J[1, i] = world_axes[i, 2] * rxp - world_axes[i, 0] * rzp
                    J[2, i] = world_axes[i, 0] * ryp - world_axes[i, 1] * rxp
                    J[3, i] = world_axes[i, 0]
                    J[4, i] = world_axes[i, 1]
                    J[5, i] = world_axes[i, 2]
                else:
                    J[0, i] = world_axes[i, 0]
                    J[1, i] = world_axes[i, 1]
                    J[2, i] = world_axes[i, 2]
                    J[3, i] = 0.0
                    J[4, i] = 0.0
                    J[5, i] = 0.0
            e = np.array([ex, ey, ez, rx_, ry_, rz_])
            dq_vec = J.T @ np.linalg.solve(J @ J.T + lam2 * eye6, e)
            for i in range(n):
                q[i] += dq_vec[i]
                if clamp:
                    q[i] = min(max(q[i], lo[i]), hi[i])
        return best_q, False, best_pos, best_ori, max_iter

    return ik_loop


_ik_jit = _build_ik_jit()


@lru_cache(maxsize=64)
def empirical_reach(chain: SerialChain, samples: int = 512) -> float:
    """Deterministic estimate of the chain's maximum radial reach from its
    base transform (sampled; slightly inflated to stay an upper bound)."""
    rng = np.random.default_rng(12345)
    lo = chain.limits_low()
    hi = chain.limits_high()
    best = 0.0
    base = chain.base.position
    for q in rng.uniform(lo, hi, size=(samples, chain.dof)):
        p = fk(chain, q).position
        best = max(best, geo.vnorm(geo.vsub(p, base)))
    return 1.05 * best


def seed_configurations(chain: SerialChain,
                        home: Optional[Sequence[float]] = None
                        ) -> Tuple[Tuple[float, ...], ...]:
    """Deterministic IK restart seeds: home posture, limit midpoints, and
    two flexed variants covering the elbow-up/elbow-down basins."""
    mid = chain.midpoints()
    half = 0.5 * (chain.limits_high() - chain.limits_low())
    seeds = []
    if home is not None:
        seeds.append(tuple(float(v) for v in home))
    seeds.append(tuple(float(v) for v in mid))
    seeds.append(tuple(float(v) for v in mid + 0.4 * half))
    seeds.append(tuple(float(v) for v in mid - 0.4 * half))
    return tuple(seeds)


def ik_seeds(chain: SerialChain, target: Pose, seeds: Sequence[Sequence[float]],
             opts: IKOptions = IKOptions()) -> IKResult:
    """Run IK from each seed in order; first converged result wins, else the
    best-effort result with the smallest residual. Deterministic."""
    best: Optional[IKResult] = None
    for seed in seeds:
        res = ik(chain, target, seed, opts)
        if res.converged:
            return res
        if best is None or (res.pos_residual + 0.1 * res.ori_residual
                            < best.pos_residual + 0.1 * best.ori_residual):
            best = res
    assert best is not None, "ik_seeds needs at least one seed"
    return best


def joint_limit_cost(chain: SerialChain, q: Sequence[float],
                     margin: float = 0.8) -> float:
    """Zero inside the central ``margin`` share of each range, quadratic
    beyond it: sum_i max(0, |q_i - mid_i| / (range_i / 2) - margin)^2."""
    _check_dims(chain, q)
    total = 0.0
    for joint, value in zip(chain.joints, q):
        lo, hi = joint.limits
        mid = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        excess = abs(float(value) - mid) / half - margin
        if excess > 0.0:
            total += excess * excess
    return total
