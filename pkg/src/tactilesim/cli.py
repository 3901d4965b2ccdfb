"""Command-line front end: run a scenario, calibrate the latency model,
compare trace files.

Exit codes: 0 success, 1 configuration or validation error, 2 runtime error
(e.g. an unreachable sample during simulation).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import yaml

from tactilesim.channel import ChannelConfig, ConstantDelay, OutOfOrderSample, RandomWalkDelay
from tactilesim.force import Elasticity
from tactilesim.kinematics import (
    Backend,
    DeviceGeometry,
    Hybrid,
    Oracle,
    Unreachable,
)
from tactilesim.latency_model import (
    CalibrationDegenerate,
    DEFAULT_TARGETS_NS,
    calibrate,
    hardware_time,
)
from tactilesim.numerics import CordicConfig, QFormat
from tactilesim.pipeline import (
    Scene,
    SeriesLengthMismatch,
    TrajectorySegment,
    TrajectorySpec,
    compute_mse,
    hardware_time_limit,
    read_trace_csv,
    run_pipeline,
    speedup_report,
    summary_report,
    summary_to_json,
    write_trace_csv,
)

__all__ = ["Scenario", "ScenarioError", "load_scenario", "default_scenario", "main"]

OUTDIR_ENV = "TACTILESIM_OUTDIR"
SCHEMA_VERSION = 1

# The shipped validation scenario uses a coarser trig grade than the library
# default; it reproduces the error magnitudes of the reference hardware.
SCENARIO_CORDIC_ITERATIONS = 10


class ScenarioError(ValueError):
    """Scenario file failed to parse or validate; message names the field."""


@dataclass(frozen=True)
class Scenario:
    """Everything one run needs: trajectory, geometry, scene, channels,
    backend selection, trig configuration, seed and output naming."""

    trajectory: TrajectorySpec
    geometry: DeviceGeometry
    scene: Scene
    fc: ChannelConfig
    bc: ChannelConfig
    backends: tuple[str, ...]
    cordic: CordicConfig
    fcs_pole: float
    seed: int
    output_dir: str
    output_prefix: str
    budget_limits: tuple[float, ...]
    budget_t_hardware: float

    def backend_objects(self) -> tuple[Backend, Backend | None]:
        """(driver, shadow): with both backends selected the oracle drives the
        chain and the hybrid is evaluated on the same module inputs."""
        hybrid = Hybrid(self.cordic)
        if set(self.backends) == {"oracle", "hybrid"}:
            return Oracle(), hybrid
        if self.backends == ("hybrid",):
            return hybrid, None
        return Oracle(), None


def default_scenario(seed: int = 2024) -> Scenario:
    """The validation scenario: default trajectory, default contact scene,
    transparent channels, both backends."""
    return Scenario(
        trajectory=TrajectorySpec.default(),
        geometry=DeviceGeometry(),
        scene=Scene.default(),
        fc=ChannelConfig(seed=2 * seed),
        bc=ChannelConfig(seed=2 * seed + 1),
        backends=("oracle", "hybrid"),
        cordic=CordicConfig(iterations=SCENARIO_CORDIC_ITERATIONS),
        fcs_pole=0.0,
        seed=seed,
        output_dir="out",
        output_prefix="trace",
        budget_limits=(1e-3, 10e-3),
        budget_t_hardware=403e-9,
    )


def _field(data: dict, key: str, kind, where: str, default=None, required: bool = False):
    if key not in data:
        if required:
            raise ScenarioError(f"missing required field '{where}{key}'")
        return default
    value = data[key]
    if kind is float and isinstance(value, int):
        value = float(value)
    if not isinstance(value, kind):
        raise ScenarioError(
            f"field '{where}{key}' must be {getattr(kind, '__name__', kind)}, got {type(value).__name__}"
        )
    return value


def _parse_trajectory(data: dict) -> TrajectorySpec:
    where = "trajectory."
    sample_period = _field(data, "sample_period", float, where, default=0.01)
    segments_raw = _field(data, "segments", list, where, required=True)
    segments = []
    for i, seg in enumerate(segments_raw):
        if not isinstance(seg, dict):
            raise ScenarioError(f"field 'trajectory.segments[{i}]' must be a mapping")
        sw = f"trajectory.segments[{i}]."
        joint = _field(seg, "joint", int, sw, required=True)
        if joint not in (1, 2, 3):
            raise ScenarioError(f"field '{sw}joint' must be 1, 2 or 3")
        segments.append(
            TrajectorySegment(
                joint=joint - 1,
                start=_field(seg, "start", float, sw, required=True),
                end=_field(seg, "end", float, sw, required=True),
                samples=_field(seg, "samples", int, sw, required=True),
            )
        )
    total = _field(data, "total_samples", int, where)
    try:
        return TrajectorySpec(
            segments=tuple(segments), sample_period=sample_period, total_samples=total
        )
    except ValueError as exc:
        raise ScenarioError(f"field 'trajectory.total_samples': {exc}") from exc


def _parse_channel(data: dict, name: str, seed: int) -> ChannelConfig:
    where = f"{name}."
    sigma2 = data.get("sigma2", 0.0)
    if isinstance(sigma2, (int, float)):
        sigma2 = (float(sigma2),) * 3
    elif isinstance(sigma2, list) and len(sigma2) == 3:
        sigma2 = tuple(float(v) for v in sigma2)
    else:
        raise ScenarioError(f"field '{where}sigma2' must be a number or a 3-list")
    delay_raw = data.get("delay", 0)
    if isinstance(delay_raw, int):
        delay = ConstantDelay(delay_raw)
    elif isinstance(delay_raw, dict):
        delay = RandomWalkDelay(
            d_min=_field(delay_raw, "min", int, where + "delay.", required=True),
            d_max=_field(delay_raw, "max", int, where + "delay.", required=True),
        )
    else:
        raise ScenarioError(f"field '{where}delay' must be an integer or {{min, max}}")
    hold = data.get("initial_hold")
    if hold is not None:
        if not (isinstance(hold, list) and len(hold) == 3):
            raise ScenarioError(f"field '{where}initial_hold' must be a 3-list")
        hold = tuple(float(v) for v in hold)
    try:
        return ChannelConfig(noise_variance=sigma2, delay=delay, seed=seed, initial_hold=hold)
    except ValueError as exc:
        raise ScenarioError(f"field '{where}': {exc}") from exc


def _parse_scene(data: dict) -> Scene:
    where = "scene."
    kind = _field(data, "type", str, where, default="plane")
    el_raw = _field(data, "elasticity", dict, where, required=True)
    elasticity = Elasticity(
        hx=_field(el_raw, "hx", float, where + "elasticity.", required=True),
        hy=_field(el_raw, "hy", float, where + "elasticity.", required=True),
        hz=_field(el_raw, "hz", float, where + "elasticity.", required=True),
    )
    if kind == "free":
        return Scene.free_space(elasticity)
    if kind == "plane":
        normal = _field(data, "normal", list, where, required=True)
        if len(normal) != 3:
            raise ScenarioError("field 'scene.normal' must be a 3-list")
        offset = _field(data, "offset", float, where, required=True)
        return Scene.contact_plane(normal, offset, elasticity)
    raise ScenarioError(f"field 'scene.type' must be 'plane' or 'free', got {kind!r}")


def parse_scenario(data: dict, source: str = "<scenario>") -> Scenario:
    if not isinstance(data, dict):
        raise ScenarioError(f"{source}: scenario must be a mapping")
    version = _field(data, "version", int, "", required=True)
    if version != SCHEMA_VERSION:
        raise ScenarioError(f"field 'version': unsupported schema version {version}")
    seed = _field(data, "seed", int, "", required=True)

    geo_raw = data.get("geometry", {})
    try:
        geometry = DeviceGeometry(
            l1=_field(geo_raw, "l1", float, "geometry.", default=0.135),
            l2=_field(geo_raw, "l2", float, "geometry.", default=0.135),
            l3=_field(geo_raw, "l3", float, "geometry.", default=0.025),
            l4=_field(geo_raw, "l4", float, "geometry.", default=0.170),
        )
    except ValueError as exc:
        raise ScenarioError(f"field 'geometry': {exc}") from exc

    cordic_raw = data.get("cordic", {})
    fmt_text = _field(cordic_raw, "format", str, "cordic.", default="s16.13")
    try:
        fmt = QFormat.from_string(fmt_text)
    except ValueError as exc:
        raise ScenarioError(f"field 'cordic.format': {exc}") from exc
    iterations = _field(
        cordic_raw, "iterations", int, "cordic.", default=SCENARIO_CORDIC_ITERATIONS
    )
    try:
        cordic = CordicConfig(iterations=iterations, fmt=fmt)
    except ValueError as exc:
        raise ScenarioError(f"field 'cordic': {exc}") from exc

    backends_raw = data.get("backends", ["oracle", "hybrid"])
    if not isinstance(backends_raw, list) or not backends_raw:
        raise ScenarioError("field 'backends' must be a non-empty list")
    for b in backends_raw:
        if b not in ("oracle", "hybrid"):
            raise ScenarioError(f"field 'backends': unknown backend {b!r}")
    backends = tuple(dict.fromkeys(backends_raw))

    if "trajectory" not in data:
        raise ScenarioError("missing required field 'trajectory'")
    trajectory = _parse_trajectory(data["trajectory"])
    if "scene" not in data:
        raise ScenarioError("missing required field 'scene'")
    scene = _parse_scene(data["scene"])

    fc = _parse_channel(data.get("fc", {}), "fc", seed=2 * seed)
    bc = _parse_channel(data.get("bc", {}), "bc", seed=2 * seed + 1)

    fcs_raw = data.get("fcs", {})
    fcs_pole = _field(fcs_raw, "pole", float, "fcs.", default=0.0)
    if not 0.0 <= fcs_pole < 1.0:
        raise ScenarioError("field 'fcs.pole' must lie in [0, 1)")

    budget_raw = data.get("budget", {})
    limits = budget_raw.get("t_latency_limits", [1e-3, 10e-3])
    if not isinstance(limits, list) or not all(isinstance(v, (int, float)) for v in limits):
        raise ScenarioError("field 'budget.t_latency_limits' must be a list of numbers")
    t_hw = _field(budget_raw, "t_hardware", float, "budget.", default=403e-9)

    out_raw = data.get("output", {})
    return Scenario(
        trajectory=trajectory,
        geometry=geometry,
        scene=scene,
        fc=fc,
        bc=bc,
        backends=backends,
        cordic=cordic,
        fcs_pole=fcs_pole,
        seed=seed,
        output_dir=_field(out_raw, "dir", str, "output.", default="out"),
        output_prefix=_field(out_raw, "prefix", str, "output.", default="trace"),
        budget_limits=tuple(float(v) for v in limits),
        budget_t_hardware=t_hw,
    )


def load_scenario(path) -> Scenario:
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ScenarioError(f"cannot parse scenario {path}: {exc}") from exc
    return parse_scenario(data, source=str(path))


def cmd_run(args) -> int:
    try:
        scenario = load_scenario(args.scenario)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    out_dir = args.out_dir or os.environ.get(OUTDIR_ENV) or scenario.output_dir
    driver, shadow = scenario.backend_objects()
    try:
        trace = run_pipeline(
            scenario.trajectory,
            scenario.scene,
            scenario.fc,
            scenario.bc,
            driver,
            geometry=scenario.geometry,
            shadow=shadow,
            fcs_pole=scenario.fcs_pole,
        )
    except (Unreachable, OutOfOrderSample) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for backend in trace.backends:
        path = out / f"{scenario.output_prefix}_{backend}.csv"
        write_trace_csv(trace, path, backend)
        written.append(path)
    report = summary_report(
        trace,
        budget_limits=scenario.budget_limits,
        t_hardware=scenario.budget_t_hardware,
    )
    report["traces"] = [p.name for p in written]
    summary_path = out / f"{scenario.output_prefix}_summary.json"
    summary_path.write_text(summary_to_json(report) + "\n")
    print(f"wrote {', '.join(str(p) for p in written)} and {summary_path}")
    return 0


def cmd_latency(args) -> int:
    if args.targets is None:
        targets = dict(DEFAULT_TARGETS_NS)
    else:
        try:
            with open(args.targets) as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            print(f"error: cannot read targets: {exc}", file=sys.stderr)
            return 1
        if not isinstance(raw, dict) or not raw:
            print("error: targets must be a non-empty JSON object", file=sys.stderr)
            return 1
        targets = {str(k): float(v) for k, v in raw.items()}
    try:
        result = calibrate(targets)
    except CalibrationDegenerate as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    report = result.to_dict()
    # Speedups are quoted against the measured module times; the fitted
    # critical paths are the model's attribution of them.
    measured = hardware_time(targets)
    report["t_hardware_measured_ns"] = measured
    report["speedups"] = {
        f"{lim:g}s": speedup
        for lim, speedup in speedup_report(measured * 1e-9, args.limits)
    }
    report["hardware_time_limits"] = {
        f"{lim:g}s": hardware_time_limit(lim) for lim in args.limits
    }
    text = json.dumps(report, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return 0


def cmd_mse(args) -> int:
    try:
        header_a, data_a = read_trace_csv(args.trace_a)
        header_b, data_b = read_trace_csv(args.trace_b)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if header_a != header_b:
        print("error: trace schemas differ", file=sys.stderr)
        return 1
    if data_a.shape != data_b.shape:
        print(
            f"error: trace lengths differ: {data_a.shape[0]} rows vs {data_b.shape[0]} rows",
            file=sys.stderr,
        )
        return 1
    try:
        table = {
            name: compute_mse(data_a[:, i], data_b[:, i]) for i, name in enumerate(header_a)
        }
    except SeriesLengthMismatch as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    text = json.dumps(table, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tactilesim",
        description="Deterministic teleoperation-pipeline simulator and latency model.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario file, emit trace CSVs and a summary")
    p_run.add_argument("scenario", help="path to the scenario YAML file")
    p_run.add_argument(
        "--out-dir",
        help=f"output directory (overrides ${OUTDIR_ENV} and the scenario setting)",
    )
    p_run.set_defaults(func=cmd_run)

    p_lat = sub.add_parser("latency", help="calibrate the latency model and report")
    p_lat.add_argument(
        "--targets",
        help="JSON file mapping module name (FK, IK, KFF, FBF) to target ns; "
        "defaults to the published module timings",
    )
    p_lat.add_argument(
        "--limits",
        type=float,
        nargs="+",
        default=[1e-3, 10e-3],
        help="round-trip latency limits in seconds for the speedup report",
    )
    p_lat.add_argument("--out", help="also write the report JSON to this path")
    p_lat.set_defaults(func=cmd_latency)

    p_mse = sub.add_parser("mse", help="per-column MSE between two trace CSVs")
    p_mse.add_argument("trace_a")
    p_mse.add_argument("trace_b")
    p_mse.add_argument("--out", help="also write the MSE JSON to this path")
    p_mse.set_defaults(func=cmd_mse)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
