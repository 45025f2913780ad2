from __future__ import annotations

import math

import numpy as np
import pytest

from manipflow import geometry as geo
from manipflow.idf import Pose
from manipflow.kinematics import (DimensionMismatch, IKOptions, Joint,
                                  JointType, SerialChain, _ik_python, fk, ik,
                                  jacobian, joint_limit_cost, manipulability)

import support


def fd_jacobian(chain, q, eps=1e-6):
    q = np.asarray(q, dtype=float)
    J = np.zeros((6, len(q)))
    for i in range(len(q)):
        qp, qm = q.copy(), q.copy()
        qp[i] += eps
        qm[i] -= eps
        fp, fm = fk(chain, qp), fk(chain, qm)
        J[0:3, i] = (np.array(fp.position) - np.array(fm.position)) / (2 * eps)
        dq = geo.qmul(fp.orientation, geo.qconj(fm.orientation))
        J[3:6, i] = np.array(geo.quat_to_rotvec(dq)) / (2 * eps)
    return J


def test_fk_zero_config_is_fixed_transform_product():
    rng = np.random.default_rng(0)
    chain = support.random_chain(rng, dof=5)
    expected = (chain.base.position, chain.base.orientation)
    for joint in chain.joints:
        expected = geo.compose(expected, (joint.origin.position,
                                          joint.origin.orientation))
    expected = geo.compose(expected, (chain.tcp.position, chain.tcp.orientation))
    got = fk(chain, [0.0] * chain.dof)
    assert np.allclose(got.position, expected[0], atol=1e-12)
    assert geo.quat_angle(got.orientation, expected[1]) < 1e-12


def test_fk_planar_hand_values():
    chain = support.planar_two_link()
    p = fk(chain, [0.0, math.pi / 2]).position
    assert np.allclose(p, (0.5, 0.5, 0.0), atol=1e-12)
    p = fk(chain, [math.pi, 0.0]).position
    assert np.allclose(p, (-1.0, 0.0, 0.0), atol=1e-12)


def test_fk_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        fk(support.planar_two_link(), [0.0])


def test_jacobian_matches_central_differences():
    rng = np.random.default_rng(42)
    for _ in range(60):
        chain = support.random_chain(rng)
        q = rng.uniform(chain.limits_low(), chain.limits_high())
        assert np.abs(jacobian(chain, q) - fd_jacobian(chain, q)).max() < 1e-6


def test_prismatic_column_has_zero_angular_part():
    chain = SerialChain("p", joints=(
        Joint("slide", JointType.Prismatic, Pose(), (0, 0, 1), (-1, 1)),
        Joint("rot", JointType.Revolute, Pose(position=(0.3, 0, 0)),
              (0, 1, 0), (-2, 2))))
    J = jacobian(chain, [0.2, 0.4])
    assert np.allclose(J[3:6, 0], 0.0)


def test_jacobian_planar_first_column():
    chain = support.planar_two_link()
    J = jacobian(chain, [0.0, math.pi / 2])
    assert np.allclose(J[0:3, 0], (-0.5, 0.5, 0.0), atol=1e-12)


def test_manipulability_planar_formula():
    chain = support.planar_two_link()
    for theta2 in np.linspace(-3.0, 3.0, 25):
        J = jacobian(chain, [0.4, theta2])
        w = manipulability(J, "position")
        assert abs(w - 0.25 * abs(math.sin(theta2))) < 1e-9


def test_manipulability_zero_when_stretched():
    chain = support.planar_two_link()
    assert manipulability(jacobian(chain, [0.3, 0.0]), "position") == 0.0


def test_manipulability_column_permutation_invariant():
    rng = np.random.default_rng(5)
    for _ in range(20):
        chain = support.random_chain(rng, dof=6)
        q = rng.uniform(chain.limits_low(), chain.limits_high())
        J = jacobian(chain, q)
        perm = rng.permutation(6)
        assert abs(manipulability(J) - manipulability(J[:, perm])) < 1e-12


def test_ik_fixed_point_converges_in_zero_iterations():
    chain = support.planar_two_link()
    q_star = [0.4, 0.9]
    res = ik(chain, fk(chain, q_star), q_star)
    assert res.converged and res.iterations == 0
    assert np.allclose(res.q, q_star)


def test_ik_round_trip_on_random_reachable_targets():
    rng = np.random.default_rng(7)
    ok = 0
    total = 100
    for _ in range(total):
        chain = support.random_chain(rng, dof=int(rng.integers(6, 9)))
        q_star = rng.uniform(chain.limits_low(), chain.limits_high())
        target = fk(chain, q_star)
        q0 = np.clip(q_star + rng.normal(0, 0.1, chain.dof),
                     chain.limits_low(), chain.limits_high())
        res = ik(chain, target, q0)
        if res.converged:
            check = fk(chain, res.q)
            assert np.linalg.norm(np.subtract(check.position, target.position)) <= 2e-4
            assert all(chain.limits_low() - 1e-12 <= res.q)
            assert all(res.q <= chain.limits_high() + 1e-12)
            ok += 1
    assert ok >= 99


def test_ik_out_of_workspace_reports_distance():
    chain = support.planar_two_link()
    target = Pose(position=(3.0, 0.0, 0.0))
    res = ik(chain, target, [0.1, 0.1])
    assert not res.converged
    assert res.pos_residual >= (3.0 - 1.0) - 1e-4


def test_ik_jit_agrees_with_python():
    rng = np.random.default_rng(9)
    for _ in range(20):
        chain = support.random_chain(rng, dof=5)
        q_star = rng.uniform(chain.limits_low(), chain.limits_high())
        target = fk(chain, q_star)
        q0 = rng.uniform(chain.limits_low(), chain.limits_high())
        a = ik(chain, target, q0)
        b = _ik_python(chain, target, q0, IKOptions())
        assert a.converged == b.converged
        assert abs(a.pos_residual - b.pos_residual) < 1e-9


def test_joint_limit_cost_center_and_limit():
    chain = support.planar_two_link()
    assert joint_limit_cost(chain, chain.midpoints()) == 0.0
    at_limit = [chain.joints[0].limits[1], 0.0]
    assert abs(joint_limit_cost(chain, at_limit) - 0.04) < 1e-12


def test_joint_limit_cost_monotone_toward_limit():
    rng = np.random.default_rng(3)
    for _ in range(20):
        chain = support.random_chain(rng, dof=4)
        mid = chain.midpoints()
        j = int(rng.integers(0, 4))
        costs = []
        for t in np.linspace(0.0, 1.0, 30):
            q = mid.copy()
            q[j] = mid[j] + t * (chain.limits_high()[j] - mid[j])
            costs.append(joint_limit_cost(chain, q))
        assert all(b >= a - 1e-15 for a, b in zip(costs, costs[1:]))
