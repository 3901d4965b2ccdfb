"""Closed-form forward and inverse kinematics of a 3-DoF pen-style haptic arm
(two equal arm segments on a rotating base).

Every operation runs on one of two interchangeable backends:

* ``Oracle``  - full double precision, the reference model.
* ``Hybrid``  - float32 arithmetic with fixed-point CORDIC trigonometry,
  matching the structure of the hardware circuits (TFB per trig term,
  float32 multipliers/adders, float32 geometry constants).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from tactilesim.numerics import (
    DEFAULT_CORDIC,
    CordicConfig,
    sqrt32,
    tfb_acos,
    tfb_atan2,
    tfb_sincos,
)

__all__ = [
    "Unreachable",
    "DeviceGeometry",
    "JointAngles",
    "CartesianPosition",
    "IkIntermediates",
    "Backend",
    "Oracle",
    "Hybrid",
    "ORACLE",
    "HYBRID",
    "DEFAULT_GEOMETRY",
    "EPS_REACH",
    "forward_kinematics",
    "inverse_kinematics",
    "ik_intermediates",
]

# Tolerance on the acos operands: |arg| <= 1 + EPS_REACH clamps to the domain
# edge, anything beyond is reported as unreachable.
EPS_REACH = 1e-6


class Unreachable(ValueError):
    """Requested tool position lies outside the device workspace."""

    def __init__(self, message: str, sample_index: int | None = None):
        super().__init__(message)
        self.sample_index = sample_index


@dataclass(frozen=True)
class DeviceGeometry:
    """Link lengths in meters. L4 is the vertical offset of the tool frame
    (first link plus base height)."""

    l1: float = 0.135
    l2: float = 0.135
    l3: float = 0.025
    l4: float = 0.170

    def __post_init__(self) -> None:
        for name in ("l1", "l2", "l3", "l4"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


DEFAULT_GEOMETRY = DeviceGeometry()


@lru_cache(maxsize=8)
def _geometry_f32(g: DeviceGeometry) -> tuple[np.float32, np.float32, np.float32, np.float32]:
    # The hybrid datapath stores the link constants as 32-bit floats.
    return (np.float32(g.l1), np.float32(g.l2), np.float32(g.l3), np.float32(g.l4))


@dataclass(frozen=True)
class JointAngles:
    theta1: float
    theta2: float
    theta3: float

    def __post_init__(self) -> None:
        for name in ("theta1", "theta2", "theta3"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.theta1, self.theta2, self.theta3)


@dataclass(frozen=True)
class CartesianPosition:
    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        for name in ("x", "y", "z"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)


@dataclass(frozen=True)
class IkIntermediates:
    """Intermediate quantities of the inverse solution: the horizontal reach R,
    the full reach r and the construction angles gamma, beta, alpha."""

    big_r: float
    r: float
    gamma: float
    beta: float
    alpha: float


class Backend:
    """Marker base for the numeric backend selection."""


@dataclass(frozen=True)
class Oracle(Backend):
    """Double-precision reference backend."""


@dataclass(frozen=True)
class Hybrid(Backend):
    """Float32 datapath with fixed-point CORDIC trigonometry."""

    cordic: CordicConfig = DEFAULT_CORDIC


ORACLE = Oracle()
HYBRID = Hybrid()


def forward_kinematics(
    q: JointAngles,
    g: DeviceGeometry = DEFAULT_GEOMETRY,
    backend: Backend = ORACLE,
) -> CartesianPosition:
    """Tool position for the given joint angles.

    x = -sin(t1) (L2 sin(t3) + L1 cos(t2))
    y = -L2 cos(t3) + L1 sin(t2) + L3
    z =  L2 cos(t1) sin(t3) + L1 cos(t1) cos(t2) - L4
    """
    if isinstance(backend, Hybrid):
        return _fk_hybrid(q, g, backend.cordic)
    s1, c1 = math.sin(q.theta1), math.cos(q.theta1)
    s2, c2 = math.sin(q.theta2), math.cos(q.theta2)
    s3, c3 = math.sin(q.theta3), math.cos(q.theta3)
    x = -s1 * (g.l2 * s3 + g.l1 * c2)
    y = -g.l2 * c3 + g.l1 * s2 + g.l3
    z = g.l2 * c1 * s3 + g.l1 * c1 * c2 - g.l4
    return CartesianPosition(x, y, z)


def _fk_hybrid(q: JointAngles, g: DeviceGeometry, cfg: CordicConfig) -> CartesianPosition:
    l1, l2, l3, l4 = _geometry_f32(g)
    s1, c1 = tfb_sincos(q.theta1, cfg)
    s2, c2 = tfb_sincos(q.theta2, cfg)
    s3, c3 = tfb_sincos(q.theta3, cfg)
    # Per-coordinate circuits; every product and sum is a float32 operation.
    x = -(s1 * (l2 * s3 + l1 * c2))
    y = (-(l2 * c3) + l1 * s2) + l3
    z = (l2 * (c1 * s3) + l1 * (c1 * c2)) + (-l4)
    return CartesianPosition(float(x), float(y), float(z))


def _acos_arg_check(arg: float, what: str, sample_index: int | None = None) -> float:
    if abs(arg) > 1.0 + EPS_REACH:
        raise Unreachable(
            f"{what} operand {arg!r} outside [-1, 1]: position not reachable",
            sample_index,
        )
    return min(max(arg, -1.0), 1.0)


def _ik_oracle(p: CartesianPosition, g: DeviceGeometry) -> tuple[float, IkIntermediates]:
    zz = p.z + g.l4
    theta1 = -math.atan2(p.x, zz)
    big_r = math.sqrt(p.x * p.x + zz * zz)
    yy = p.y - g.l3
    r_sq = p.x * p.x + zz * zz + yy * yy
    r = math.sqrt(r_sq)
    if r == 0.0:
        raise Unreachable("tool position coincides with the shoulder center (r = 0)")
    g_arg = _acos_arg_check((g.l1 * g.l1 - g.l2 * g.l2 + r_sq) / (2.0 * g.l1 * r), "gamma")
    a_arg = _acos_arg_check((g.l1 * g.l1 + g.l2 * g.l2 - r_sq) / (2.0 * g.l1 * g.l2), "alpha")
    gamma = math.acos(g_arg)
    beta = math.atan2(yy, big_r)
    alpha = math.acos(a_arg)
    return theta1, IkIntermediates(big_r, r, gamma, beta, alpha)


def _ik_hybrid(
    p: CartesianPosition, g: DeviceGeometry, cfg: CordicConfig
) -> tuple[float, IkIntermediates]:
    l1, l2, l3, l4 = _geometry_f32(g)
    x = np.float32(p.x)
    y = np.float32(p.y)
    z = np.float32(p.z)

    # First stage: theta1, R and r in parallel.
    zz = z + l4
    theta1 = -tfb_atan2(x, zz, cfg)
    sum_xz = x * x + zz * zz
    big_r = sqrt32(sum_xz)
    yy = y - l3
    r = sqrt32(sum_xz + yy * yy)
    if r == 0.0:
        raise Unreachable("tool position coincides with the shoulder center (r = 0)")

    # Second stage: gamma, beta and alpha in parallel.
    r_sq = r * r
    g_arg = ((l1 * l1 - l2 * l2) + r_sq) / (np.float32(2.0) * (l1 * r))
    a_arg = ((l1 * l1 + l2 * l2) - r_sq) / (np.float32(2.0) * (l1 * l2))
    g_arg = _acos_arg_check(float(g_arg), "gamma")
    a_arg = _acos_arg_check(float(a_arg), "alpha")
    gamma = tfb_acos(g_arg, cfg)
    beta = tfb_atan2(yy, big_r, cfg)
    alpha = tfb_acos(a_arg, cfg)
    return float(theta1), IkIntermediates(
        float(big_r), float(r), float(gamma), float(beta), float(alpha)
    )


def ik_intermediates(
    p: CartesianPosition,
    g: DeviceGeometry = DEFAULT_GEOMETRY,
    backend: Backend = ORACLE,
) -> IkIntermediates:
    """R, r, gamma, beta, alpha of the inverse solution for ``p``."""
    if isinstance(backend, Hybrid):
        return _ik_hybrid(p, g, backend.cordic)[1]
    return _ik_oracle(p, g)[1]


def inverse_kinematics(
    p: CartesianPosition,
    g: DeviceGeometry = DEFAULT_GEOMETRY,
    backend: Backend = ORACLE,
) -> JointAngles:
    """Joint angles that place the tool at ``p``.

    theta1 = -atan2(x, z + L4); theta2 = gamma + beta;
    theta3 = theta2 + alpha - pi/2.  Raises ``Unreachable`` when the acos
    operands leave [-1, 1] by more than ``EPS_REACH``.
    """
    if isinstance(backend, Hybrid):
        theta1, inter = _ik_hybrid(p, g, backend.cordic)
        g32 = np.float32(inter.gamma)
        b32 = np.float32(inter.beta)
        a32 = np.float32(inter.alpha)
        theta2 = g32 + b32
        theta3 = (theta2 + a32) + np.float32(-math.pi / 2.0)
        return JointAngles(theta1, float(theta2), float(theta3))
    theta1, inter = _ik_oracle(p, g)
    theta2 = inter.gamma + inter.beta
    theta3 = theta2 + inter.alpha - math.pi / 2.0
    return JointAngles(theta1, theta2, theta3)
