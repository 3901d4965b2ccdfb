"""The full discrete teleoperation loop: trajectory generation, master-side
forward kinematics, forward channel, slave-side inverse kinematics, slave
tracking, contact force synthesis, backwards channel and master torque
rendering, plus trace recording, MSE evaluation and the latency budget
arithmetic.

Validation methodology: when a shadow backend is requested, the driving
backend computes the signal chain and the shadow backend is evaluated on the
same per-module inputs each sample.  The resulting per-module output pairs
differ only by the datapath arithmetic, which is what the hardware-vs-golden
comparison measures; a cascaded comparison would re-measure upstream error at
every stage and say nothing about the module under test.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from tactilesim.channel import ChannelConfig, ChannelState, channel_step
from tactilesim.force import Elasticity, ForceVector, feedback_force, kinesthetic_feedback
from tactilesim.kinematics import (
    Backend,
    CartesianPosition,
    DEFAULT_GEOMETRY,
    DeviceGeometry,
    Hybrid,
    JointAngles,
    ORACLE,
    Unreachable,
    forward_kinematics,
    inverse_kinematics,
)

__all__ = [
    "SeriesLengthMismatch",
    "TrajectorySegment",
    "TrajectorySpec",
    "Scene",
    "LatencyBudget",
    "SimulationTrace",
    "MODULE_SIGNALS",
    "generate_trajectory",
    "run_pipeline",
    "compute_mse",
    "mse_table",
    "hardware_time_limit",
    "speedup_report",
    "write_trace_csv",
    "read_trace_csv",
]


class SeriesLengthMismatch(ValueError):
    """MSE requested for series of different lengths."""


@dataclass(frozen=True)
class TrajectorySegment:
    """Linear ramp of one joint from ``start`` to ``end`` over ``samples``
    samples (both endpoints included); the other joints hold."""

    joint: int
    start: float
    end: float
    samples: int

    def __post_init__(self) -> None:
        if self.joint not in (0, 1, 2):
            raise ValueError(f"joint must be 0, 1 or 2, got {self.joint}")
        if self.samples < 1:
            raise ValueError("segment needs at least one sample")


@dataclass(frozen=True)
class TrajectorySpec:
    """Sequential piecewise-linear joint ramps sampled every ``sample_period``
    seconds."""

    segments: tuple[TrajectorySegment, ...]
    sample_period: float = 0.01
    total_samples: int | None = None

    def __post_init__(self) -> None:
        if not self.segments:
            raise ValueError("trajectory needs at least one segment")
        if self.sample_period <= 0:
            raise ValueError("sample_period must be positive")
        total = sum(s.samples for s in self.segments)
        if self.total_samples is None:
            object.__setattr__(self, "total_samples", total)
        elif self.total_samples != total:
            raise ValueError(
                f"total_samples is {self.total_samples} but segments sum to {total}"
            )

    @property
    def q(self) -> int:
        return int(self.total_samples)

    @classmethod
    def default(cls) -> "TrajectorySpec":
        """The validation trajectory: joint 1 to pi/2, then joint 2 to pi/4,
        then joint 3 to pi/4; 400 samples each, 10 ms sample period."""
        return cls(
            segments=(
                TrajectorySegment(0, 0.0, math.pi / 2, 400),
                TrajectorySegment(1, 0.0, math.pi / 4, 400),
                TrajectorySegment(2, 0.0, math.pi / 4, 400),
            ),
            sample_period=0.01,
        )


def generate_trajectory(spec: TrajectorySpec) -> list[JointAngles]:
    """Sampled joint-space trajectory, one JointAngles per sample."""
    current = [0.0, 0.0, 0.0]
    # Joints start at the first value their first segment gives them; joints
    # that never move stay at zero.
    first_seen: set[int] = set()
    for seg in spec.segments:
        if seg.joint not in first_seen:
            current[seg.joint] = seg.start
            first_seen.add(seg.joint)
    out: list[JointAngles] = []
    for seg in spec.segments:
        for k in range(seg.samples):
            if seg.samples == 1:
                current[seg.joint] = seg.end
            else:
                current[seg.joint] = seg.start + (seg.end - seg.start) * (
                    k / (seg.samples - 1)
                )
            out.append(JointAngles(*current))
    return out


SurfaceFn = Callable[[int, CartesianPosition], CartesianPosition]


@dataclass(frozen=True)
class Scene:
    """Environment model: the elasticity of the touched object and a surface
    function giving the nearest object point for a sample index and tool
    position (equal to the tool position when nothing is touched, which makes
    the contact force vanish)."""

    elasticity: Elasticity
    surface: SurfaceFn

    def object_position(self, n: int, tool: CartesianPosition) -> CartesianPosition:
        return self.surface(n, tool)

    @classmethod
    def free_space(cls, elasticity: Elasticity | None = None) -> "Scene":
        """No object anywhere: zero contact force for the whole run."""
        h = elasticity if elasticity is not None else Elasticity(0.0, 0.0, 0.0)
        return cls(elasticity=h, surface=lambda n, tool: tool)

    @classmethod
    def contact_plane(
        cls,
        normal: Sequence[float],
        offset: float,
        elasticity: Elasticity,
    ) -> "Scene":
        """A fixed plane {p : n.p = offset}; when the tool passes beyond it,
        the nearest surface point is the projection of the tool back onto the
        plane, so the spring force is proportional to the penetration depth."""
        nvec = np.asarray(normal, dtype=float)
        norm = float(np.linalg.norm(nvec))
        if norm == 0:
            raise ValueError("plane normal must be nonzero")
        nvec = nvec / norm

        def surface(n: int, tool: CartesianPosition) -> CartesianPosition:
            p = np.array(tool.as_tuple())
            depth = float(nvec @ p) - offset
            if depth <= 0:
                return tool
            proj = p - depth * nvec
            return CartesianPosition(*proj)

        return cls(elasticity=elasticity, surface=surface)

    @classmethod
    def from_table(cls, table: np.ndarray, elasticity: Elasticity) -> "Scene":
        """Object positions given per sample as an (Q, 3) array."""
        arr = np.asarray(table, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise ValueError("table must have shape (Q, 3)")

        def surface(n: int, tool: CartesianPosition) -> CartesianPosition:
            return CartesianPosition(*arr[n])

        return cls(elasticity=elasticity, surface=surface)

    @classmethod
    def default(cls) -> "Scene":
        """Default validation scene: a tilted plane the tool reaches during
        the final trajectory segment, with moderate elasticity."""
        return cls.contact_plane(
            normal=(-2.0 / 3.0, 2.0 / 3.0, 1.0 / 3.0),
            offset=0.03,
            elasticity=Elasticity(80.0, 80.0, 80.0),
        )


@dataclass(frozen=True)
class LatencyBudget:
    """Round-trip latency budget and its per-stage components (seconds)."""

    t_latency: float
    t_md: float = 0.0
    t_hmd: float = 0.0
    t_nw: float = 0.0
    t_hsd: float = 0.0
    t_sd: float = 0.0

    def __post_init__(self) -> None:
        for f in ("t_latency", "t_md", "t_hmd", "t_nw", "t_hsd", "t_sd"):
            if getattr(self, f) < 0:
                raise ValueError(f"{f} must be nonnegative")

    @classmethod
    def from_components(
        cls, t_md: float, t_hmd: float, t_nw: float, t_hsd: float, t_sd: float
    ) -> "LatencyBudget":
        total = 2.0 * (t_md + t_hmd + t_nw + t_hsd + t_sd)
        return cls(total, t_md, t_hmd, t_nw, t_hsd, t_sd)

    def hardware_limit(self) -> float:
        return hardware_time_limit(self.t_latency)


def hardware_time_limit(t_latency: float) -> float:
    """Per-device compute budget: 30% of the round trip is device time, split
    over two devices and two directions each: 0.3 * t_latency / 8."""
    if t_latency < 0:
        raise ValueError("t_latency must be nonnegative")
    return 0.3 * t_latency / 8.0


def speedup_report(t_hardware: float, limits: Sequence[float]) -> list[tuple[float, int]]:
    """Speedup of the hardware against each latency limit's compute budget,
    with the fractional part truncated (reported as whole multiples)."""
    if not t_hardware > 0:
        raise ValueError("t_hardware must be positive")
    return [(lim, int(hardware_time_limit(lim) / t_hardware)) for lim in limits]


# Trace column layout.  Chain signals are shared between backends in a
# dual-backend run; module output signals exist once per backend.
CHAIN_SIGNALS = (
    "b1",
    "b2",
    "b3",
    "v_x",
    "v_y",
    "v_z",
    "theta_sd_1",
    "theta_sd_2",
    "theta_sd_3",
    "s_obj_x",
    "s_obj_y",
    "s_obj_z",
    "q_x",
    "q_y",
    "q_z",
)
MODULE_OUTPUT_SIGNALS = (
    "c_x",
    "c_y",
    "c_z",
    "theta_hsd_1",
    "theta_hsd_2",
    "theta_hsd_3",
    "l_x",
    "l_y",
    "l_z",
    "h_x",
    "h_y",
    "h_z",
    "p_1",
    "p_2",
    "p_3",
)
COLUMN_ORDER = (
    "n",
    "b1",
    "b2",
    "b3",
    "c_x",
    "c_y",
    "c_z",
    "v_x",
    "v_y",
    "v_z",
    "theta_hsd_1",
    "theta_hsd_2",
    "theta_hsd_3",
    "theta_sd_1",
    "theta_sd_2",
    "theta_sd_3",
    "l_x",
    "l_y",
    "l_z",
    "s_obj_x",
    "s_obj_y",
    "s_obj_z",
    "h_x",
    "h_y",
    "h_z",
    "q_x",
    "q_y",
    "q_z",
    "p_1",
    "p_2",
    "p_3",
)

# Hardware module -> the trace signals it produces; the row set of the
# validation MSE report.
MODULE_SIGNALS = {
    "FK-HMD": ("c_x", "c_y", "c_z"),
    "KFF-HMD": ("p_1", "p_2", "p_3"),
    "FK-HSD": ("l_x", "l_y", "l_z"),
    "IK-HSD": ("theta_hsd_1", "theta_hsd_2", "theta_hsd_3"),
    "FBF-HSD": ("h_x", "h_y", "h_z"),
}


@dataclass
class SimulationTrace:
    """Per-sample record of every loop signal.

    ``signals`` holds the chain signals and the driving backend's module
    outputs; ``shadow_signals`` holds the other backend's module outputs,
    evaluated on the same chain inputs (present only for dual-backend runs).
    """

    q: int
    sample_period: float
    driver: str
    shadow: str | None
    signals: dict[str, np.ndarray]
    shadow_signals: dict[str, np.ndarray] = field(default_factory=dict)

    def view(self, backend: str) -> dict[str, np.ndarray]:
        """Full column set for one backend: chain signals plus that backend's
        module outputs."""
        if backend == self.driver:
            return {name: self.signals[name] for name in COLUMN_ORDER}
        if backend == self.shadow:
            out = {}
            for name in COLUMN_ORDER:
                if name in MODULE_OUTPUT_SIGNALS:
                    out[name] = self.shadow_signals[name]
                else:
                    out[name] = self.signals[name]
            return out
        raise KeyError(f"trace holds backends {self.driver!r}/{self.shadow!r}, not {backend!r}")

    @property
    def backends(self) -> tuple[str, ...]:
        return (self.driver,) if self.shadow is None else (self.driver, self.shadow)


def _backend_label(b: Backend) -> str:
    return "hybrid" if isinstance(b, Hybrid) else "oracle"


# Prediction/detection hook: sample index and 3-vector in, 3-vector out.
PredictorFn = Callable[[int, np.ndarray], np.ndarray]


def run_pipeline(
    spec: TrajectorySpec,
    scene: Scene,
    fc: ChannelConfig,
    bc: ChannelConfig,
    backend: Backend = ORACLE,
    *,
    geometry: DeviceGeometry = DEFAULT_GEOMETRY,
    shadow: Backend | None = None,
    fcs_pole: float = 0.0,
    cartesian_predictor: PredictorFn | None = None,
    joint_predictor: PredictorFn | None = None,
    force_predictor: PredictorFn | None = None,
) -> SimulationTrace:
    """Simulate the loop for every sample of the trajectory.

    Per sample: b = trajectory angles; c = FK(b); v = forward channel(c);
    theta_hsd = IK(v); theta_sd = tracking(theta_hsd); l = FK(theta_sd);
    h = spring force(s_obj, l); q = backwards channel(h); p = J^T(b) q.

    The slave tracking is ideal by default; ``fcs_pole`` in (0, 1) enables a
    first-order lag for sensitivity studies.  The predictor hooks slot
    latency/noise compensation into the dataflow and default to identity
    pass-throughs: ``cartesian_predictor`` filters v before the inverse
    kinematics, ``joint_predictor`` filters theta_hsd behind it, and
    ``force_predictor`` filters q before the torque synthesis.  With
    ``shadow`` set, the shadow backend's modules are evaluated on the driving
    chain's inputs sample by sample and recorded alongside.
    """
    if not 0.0 <= fcs_pole < 1.0:
        raise ValueError("fcs_pole must lie in [0, 1)")
    traj = generate_trajectory(spec)
    q_len = spec.q
    fc_state = ChannelState(fc)
    bc_state = ChannelState(bc)

    cols = {name: np.empty(q_len) for name in COLUMN_ORDER}
    shadow_cols = (
        {name: np.empty(q_len) for name in MODULE_OUTPUT_SIGNALS} if shadow is not None else {}
    )

    theta_sd_prev: tuple[float, float, float] | None = None
    for n in range(q_len):
        b = traj[n]
        c = forward_kinematics(b, geometry, backend)
        v = channel_step(fc_state, fc, c.as_tuple(), n)
        v_in = v
        if cartesian_predictor is not None:
            v_in = np.asarray(cartesian_predictor(n, v), dtype=float)
        v_pos = CartesianPosition(*v_in)
        try:
            theta_hsd = inverse_kinematics(v_pos, geometry, backend)
        except Unreachable as exc:
            raise Unreachable(f"sample {n}: {exc}", sample_index=n) from exc
        if joint_predictor is not None:
            theta_hsd = JointAngles(
                *np.asarray(joint_predictor(n, np.array(theta_hsd.as_tuple())), dtype=float)
            )

        if fcs_pole == 0.0 or theta_sd_prev is None:
            theta_sd = theta_hsd.as_tuple()
        else:
            theta_sd = tuple(
                fcs_pole * prev + (1.0 - fcs_pole) * cur
                for prev, cur in zip(theta_sd_prev, theta_hsd.as_tuple())
            )
        theta_sd_prev = theta_sd
        theta_sd_q = JointAngles(*theta_sd)

        l_pos = forward_kinematics(theta_sd_q, geometry, backend)
        s_obj = scene.object_position(n, l_pos)
        h = feedback_force(s_obj, l_pos, scene.elasticity, backend)
        qv = channel_step(bc_state, bc, h.as_tuple(), n)
        q_in = qv
        if force_predictor is not None:
            q_in = np.asarray(force_predictor(n, qv), dtype=float)
        p = kinesthetic_feedback(b, ForceVector(*q_in), geometry, backend)

        cols["n"][n] = n
        _store3(cols, "b1", "b2", "b3", n, b.as_tuple())
        _store3(cols, "c_x", "c_y", "c_z", n, c.as_tuple())
        _store3(cols, "v_x", "v_y", "v_z", n, v)
        _store3(cols, "theta_hsd_1", "theta_hsd_2", "theta_hsd_3", n, theta_hsd.as_tuple())
        _store3(cols, "theta_sd_1", "theta_sd_2", "theta_sd_3", n, theta_sd)
        _store3(cols, "l_x", "l_y", "l_z", n, l_pos.as_tuple())
        _store3(cols, "s_obj_x", "s_obj_y", "s_obj_z", n, s_obj.as_tuple())
        _store3(cols, "h_x", "h_y", "h_z", n, h.as_tuple())
        _store3(cols, "q_x", "q_y", "q_z", n, qv)
        _store3(cols, "p_1", "p_2", "p_3", n, p.as_tuple())

        if shadow is not None:
            c_s = forward_kinematics(b, geometry, shadow)
            try:
                theta_s = inverse_kinematics(v_pos, geometry, shadow)
            except Unreachable as exc:
                raise Unreachable(f"sample {n}: {exc}", sample_index=n) from exc
            l_s = forward_kinematics(theta_sd_q, geometry, shadow)
            h_s = feedback_force(s_obj, l_pos, scene.elasticity, shadow)
            p_s = kinesthetic_feedback(b, ForceVector(*q_in), geometry, shadow)
            _store3(shadow_cols, "c_x", "c_y", "c_z", n, c_s.as_tuple())
            _store3(
                shadow_cols, "theta_hsd_1", "theta_hsd_2", "theta_hsd_3", n, theta_s.as_tuple()
            )
            _store3(shadow_cols, "l_x", "l_y", "l_z", n, l_s.as_tuple())
            _store3(shadow_cols, "h_x", "h_y", "h_z", n, h_s.as_tuple())
            _store3(shadow_cols, "p_1", "p_2", "p_3", n, p_s.as_tuple())

    return SimulationTrace(
        q=q_len,
        sample_period=spec.sample_period,
        driver=_backend_label(backend),
        shadow=None if shadow is None else _backend_label(shadow),
        signals=cols,
        shadow_signals=shadow_cols,
    )


def _store3(cols: dict[str, np.ndarray], k1: str, k2: str, k3: str, n: int, values) -> None:
    cols[k1][n] = values[0]
    cols[k2][n] = values[1]
    cols[k3][n] = values[2]


def compute_mse(a: Sequence[float] | np.ndarray, b: Sequence[float] | np.ndarray) -> float:
    """Mean squared error (1/Q) sum (a_n - b_n)^2."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise SeriesLengthMismatch(f"series shapes differ: {a.shape} vs {b.shape}")
    if a.size == 0:
        raise SeriesLengthMismatch("series must contain at least one sample")
    diff = a - b
    return float(np.mean(diff * diff))


def mse_table(trace: SimulationTrace) -> list[dict]:
    """Per-module, per-component MSE between the two backends of a
    dual-backend trace (15 rows: 5 modules x 3 components)."""
    if trace.shadow is None:
        raise ValueError("MSE table needs a dual-backend trace")
    hybrid = trace.view("hybrid")
    oracle = trace.view("oracle")
    rows = []
    for module, signals in MODULE_SIGNALS.items():
        for sig in signals:
            rows.append(
                {
                    "module": module,
                    "signal": sig,
                    "mse": compute_mse(hybrid[sig], oracle[sig]),
                }
            )
    return rows


def write_trace_csv(trace: SimulationTrace, path, backend: str) -> None:
    """One row per sample, one column per signal component; values rendered
    with full round-trip precision."""
    view = trace.view(backend)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COLUMN_ORDER)
        for n in range(trace.q):
            writer.writerow([repr(float(view[name][n])) for name in COLUMN_ORDER])


def read_trace_csv(path) -> tuple[list[str], np.ndarray]:
    """Read a trace written by ``write_trace_csv``; returns (header, data)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty trace file") from None
        rows = [[float(v) for v in row] for row in reader]
    return header, np.array(rows, dtype=float)


def summary_report(
    trace: SimulationTrace,
    budget_limits: Sequence[float] = (1e-3, 10e-3),
    t_hardware: float = 403e-9,
) -> dict:
    """JSON-ready run summary: the MSE table (for dual-backend runs) and the
    latency budget numbers."""
    report: dict = {
        "q": trace.q,
        "sample_period": trace.sample_period,
        "backends": list(trace.backends),
        "mse": mse_table(trace) if trace.shadow is not None else None,
        "budget": {
            "t_hardware": t_hardware,
            "limits": [
                {
                    "t_latency": lim,
                    "hardware_time_limit": hardware_time_limit(lim),
                    "speedup": speedup,
                }
                for lim, speedup in speedup_report(t_hardware, budget_limits)
            ],
        },
    }
    return report


def summary_to_json(report: dict) -> str:
    return json.dumps(report, indent=2)
