"""Jacobian matrix, kinesthetic feedback torque (tau = J^T F) and the
spring-law contact force of the slave-side force synthesis."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from tactilesim.kinematics import (
    DEFAULT_GEOMETRY,
    Backend,
    CartesianPosition,
    DeviceGeometry,
    Hybrid,
    JointAngles,
    ORACLE,
    _geometry_f32,
)
from tactilesim.numerics import tfb_sincos

__all__ = [
    "ForceVector",
    "TorqueVector",
    "JacobianMatrix",
    "Elasticity",
    "jacobian",
    "kinesthetic_feedback",
    "feedback_force",
]


@dataclass(frozen=True)
class ForceVector:
    fx: float
    fy: float
    fz: float

    def __post_init__(self) -> None:
        for name in ("fx", "fy", "fz"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.fx, self.fy, self.fz)


@dataclass(frozen=True)
class TorqueVector:
    tau1: float
    tau2: float
    tau3: float

    def __post_init__(self) -> None:
        for name in ("tau1", "tau2", "tau3"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.tau1, self.tau2, self.tau3)


@dataclass(frozen=True)
class JacobianMatrix:
    """Partial derivatives of the tool position w.r.t. the joint angles; row =
    Cartesian coordinate, column = joint.  J21 is identically zero (the y
    coordinate does not depend on the base rotation)."""

    j11: float
    j12: float
    j13: float
    j21: float
    j22: float
    j23: float
    j31: float
    j32: float
    j33: float

    def __post_init__(self) -> None:
        if self.j21 != 0.0:
            raise ValueError("J21 must be identically zero")

    def as_array(self) -> np.ndarray:
        return np.array(
            [
                [self.j11, self.j12, self.j13],
                [self.j21, self.j22, self.j23],
                [self.j31, self.j32, self.j33],
            ]
        )


@dataclass(frozen=True)
class Elasticity:
    """Per-axis spring constants of the contact model, in N/m."""

    hx: float
    hy: float
    hz: float

    def __post_init__(self) -> None:
        for name in ("hx", "hy", "hz"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.hx, self.hy, self.hz)


def jacobian(
    q: JointAngles,
    g: DeviceGeometry = DEFAULT_GEOMETRY,
    backend: Backend = ORACLE,
) -> JacobianMatrix:
    """Jacobian of the forward kinematics at ``q``.

    J21 is emitted as constant zero with no computation, as in the hardware.
    """
    if isinstance(backend, Hybrid):
        return _jacobian_hybrid(q, g, backend.cordic)
    s1, c1 = math.sin(q.theta1), math.cos(q.theta1)
    s2, c2 = math.sin(q.theta2), math.cos(q.theta2)
    s3, c3 = math.sin(q.theta3), math.cos(q.theta3)
    l1, l2 = g.l1, g.l2
    return JacobianMatrix(
        j11=-c1 * (l2 * s3 + l1 * c2),
        j12=l1 * s1 * s2,
        j13=-l2 * s1 * c3,
        j21=0.0,
        j22=l1 * c2,
        j23=l2 * s3,
        j31=-(l1 * c2 * s1 + l2 * s3 * s1),
        j32=-l1 * s2 * c1,
        j33=l2 * c3 * c1,
    )


def _jacobian_hybrid(q: JointAngles, g: DeviceGeometry, cfg) -> JacobianMatrix:
    l1, l2, _l3, _l4 = _geometry_f32(g)
    s1, c1 = tfb_sincos(q.theta1, cfg)
    s2, c2 = tfb_sincos(q.theta2, cfg)
    s3, c3 = tfb_sincos(q.theta3, cfg)
    # One circuit per entry; products associate length-constant first, then the
    # remaining trig factors left to right.
    j11 = -(c1 * (l2 * s3 + l1 * c2))
    j12 = l1 * (s1 * s2)
    j13 = -(l2 * (s1 * c3))
    j22 = l1 * c2
    j23 = l2 * s3
    j31 = -(((l1 * c2) * s1) + ((l2 * s3) * s1))
    j32 = -(l1 * (s2 * c1))
    j33 = l2 * (c3 * c1)
    return JacobianMatrix(
        j11=float(j11),
        j12=float(j12),
        j13=float(j13),
        j21=0.0,
        j22=float(j22),
        j23=float(j23),
        j31=float(j31),
        j32=float(j32),
        j33=float(j33),
    )


def kinesthetic_feedback(
    q: JointAngles,
    f: ForceVector,
    g: DeviceGeometry = DEFAULT_GEOMETRY,
    backend: Backend = ORACLE,
) -> TorqueVector:
    """Joint torques tau = J^T F rendering the remote contact force.

    The J21 product is skipped (no circuit exists for it); the remaining
    products accumulate in a fixed order so results are bit-reproducible.
    """
    jm = jacobian(q, g, backend)
    if isinstance(backend, Hybrid):
        fx, fy, fz = np.float32(f.fx), np.float32(f.fy), np.float32(f.fz)
        j = {k: np.float32(v) for k, v in vars(jm).items()}
        tau1 = (j["j11"] * fx) + (j["j31"] * fz)
        tau2 = ((j["j12"] * fx) + (j["j22"] * fy)) + (j["j32"] * fz)
        tau3 = ((j["j13"] * fx) + (j["j23"] * fy)) + (j["j33"] * fz)
        return TorqueVector(float(tau1), float(tau2), float(tau3))
    tau1 = jm.j11 * f.fx + jm.j31 * f.fz
    tau2 = (jm.j12 * f.fx + jm.j22 * f.fy) + jm.j32 * f.fz
    tau3 = (jm.j13 * f.fx + jm.j23 * f.fy) + jm.j33 * f.fz
    return TorqueVector(tau1, tau2, tau3)


def feedback_force(
    obj: CartesianPosition,
    env: CartesianPosition,
    h: Elasticity,
    backend: Backend = ORACLE,
) -> ForceVector:
    """Spring-law contact force, per axis: h_i * (obj_i - env_i)."""
    if isinstance(backend, Hybrid):
        hx, hy, hz = np.float32(h.hx), np.float32(h.hy), np.float32(h.hz)
        fx = hx * (np.float32(obj.x) - np.float32(env.x))
        fy = hy * (np.float32(obj.y) - np.float32(env.y))
        fz = hz * (np.float32(obj.z) - np.float32(env.z))
        return ForceVector(float(fx), float(fy), float(fz))
    return ForceVector(
        h.hx * (obj.x - env.x),
        h.hy * (obj.y - env.y),
        h.hz * (obj.z - env.z),
    )
