"""Dataflow-graph latency estimation for the hardware modules.

Each module (FK, IK, KFF, FBF) is described as a DAG of primitive operators
(adders, multipliers, dividers, trig blocks, square root, format converters).
The module latency is the longest latency-weighted input-to-output path; the
per-operator latencies come from a table that can be calibrated against
measured module sample periods.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, fields

import numpy as np
from scipy.optimize import linprog

__all__ = [
    "CyclicGraph",
    "CalibrationDegenerate",
    "OP_KINDS",
    "OpLatencyTable",
    "DataflowGraph",
    "CalibrationResult",
    "critical_path",
    "critical_path_nodes",
    "builtin_graphs",
    "calibrate",
    "hardware_time",
    "DEFAULT_TARGETS_NS",
]

OP_KINDS = (
    "add",
    "mul",
    "div",
    "tfb_sincos",
    "tfb_atan2",
    "tfb_acos",
    "sqrt",
    "f2fp",
    "fp2f",
    "negate",
)

# Measured per-module sample periods of the reference FPGA implementation,
# in nanoseconds; the default calibration targets.
DEFAULT_TARGETS_NS = {"FK": 47.0, "KFF": 70.0, "IK": 218.0, "FBF": 21.0}


class CyclicGraph(ValueError):
    """The dataflow graph contains a cycle."""


class CalibrationDegenerate(ValueError):
    """Calibration is impossible (no targets, or graphs with no operators)."""


@dataclass(frozen=True)
class OpLatencyTable:
    """Latency in nanoseconds per operator kind."""

    add: float = 0.0
    mul: float = 0.0
    div: float = 0.0
    tfb_sincos: float = 0.0
    tfb_atan2: float = 0.0
    tfb_acos: float = 0.0
    sqrt: float = 0.0
    f2fp: float = 0.0
    fp2f: float = 0.0
    negate: float = 0.0

    def __post_init__(self) -> None:
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise ValueError(f"latency of {f.name} must be nonnegative")

    def get(self, kind: str) -> float:
        if kind not in OP_KINDS:
            raise ValueError(f"unknown operator kind {kind!r}")
        return getattr(self, kind)

    def to_dict(self) -> dict[str, float]:
        return {k: getattr(self, k) for k in OP_KINDS}

    @classmethod
    def from_dict(cls, d: dict[str, float]) -> "OpLatencyTable":
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


@dataclass(frozen=True)
class DataflowGraph:
    """Operator DAG with designated input terminals and output nodes.

    ``nodes`` maps node id to operator kind; ``edges`` are (producer,
    consumer) pairs where producers may be input terminal names or node ids;
    ``outputs`` name the nodes whose results leave the module.
    """

    name: str
    nodes: dict[str, str]
    edges: tuple[tuple[str, str], ...]
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]

    def __post_init__(self) -> None:
        for nid, kind in self.nodes.items():
            if kind not in OP_KINDS:
                raise ValueError(f"node {nid!r} has unknown kind {kind!r}")
        ids = set(self.nodes)
        ins = set(self.inputs)
        if ids & ins:
            raise ValueError("input terminal names collide with node ids")
        for src, dst in self.edges:
            if dst not in ids:
                raise ValueError(f"edge target {dst!r} is not a node")
            if src not in ids and src not in ins:
                raise ValueError(f"edge source {src!r} is neither node nor input")
        for out in self.outputs:
            if out not in ids:
                raise ValueError(f"output {out!r} is not a node")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "nodes": dict(self.nodes),
            "edges": [list(e) for e in self.edges],
            "inputs": list(self.inputs),
            "outputs": list(self.outputs),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "DataflowGraph":
        return cls(
            name=d["name"],
            nodes=dict(d["nodes"]),
            edges=tuple((s, t) for s, t in d["edges"]),
            inputs=tuple(d["inputs"]),
            outputs=tuple(d["outputs"]),
        )


def _longest_paths(g: DataflowGraph, t: OpLatencyTable) -> dict[str, tuple[float, str | None]]:
    """Topological longest-path sweep; returns per node (arrival latency
    including the node itself, predecessor on the longest path)."""
    preds: dict[str, list[str]] = {nid: [] for nid in g.nodes}
    succs: dict[str, list[str]] = {nid: [] for nid in g.nodes}
    indeg = {nid: 0 for nid in g.nodes}
    for src, dst in g.edges:
        preds[dst].append(src)
        if src in g.nodes:
            succs[src].append(dst)
            indeg[dst] += 1

    ready = [nid for nid, d in indeg.items() if d == 0]
    best: dict[str, tuple[float, str | None]] = {}
    seen = 0
    while ready:
        nid = ready.pop()
        seen += 1
        arrival = 0.0
        via: str | None = None
        for p in preds[nid]:
            if p in g.nodes:
                a = best[p][0]
                if a > arrival:
                    arrival, via = a, p
        best[nid] = (arrival + t.get(g.nodes[nid]), via)
        for s in succs[nid]:
            indeg[s] -= 1
            if indeg[s] == 0:
                ready.append(s)
    if seen != len(g.nodes):
        raise CyclicGraph(f"graph {g.name!r} contains a cycle")
    return best


def critical_path(g: DataflowGraph, t: OpLatencyTable) -> float:
    """Longest weighted input-to-output path latency, in nanoseconds."""
    best = _longest_paths(g, t)
    if not g.outputs:
        return 0.0
    return max(best[o][0] for o in g.outputs)


def critical_path_nodes(g: DataflowGraph, t: OpLatencyTable) -> list[str]:
    """Node ids along the critical path, input side first."""
    best = _longest_paths(g, t)
    if not g.outputs:
        return []
    end = max(g.outputs, key=lambda o: best[o][0])
    path = []
    cur: str | None = end
    while cur is not None:
        path.append(cur)
        cur = best[cur][1]
    path.reverse()
    return path


class _GraphBuilder:
    def __init__(self, name: str, inputs: tuple[str, ...]):
        self.name = name
        self.inputs = inputs
        self.nodes: dict[str, str] = {}
        self.edges: list[tuple[str, str]] = []
        self.outputs: list[str] = []

    def node(self, nid: str, kind: str, *srcs: str) -> str:
        self.nodes[nid] = kind
        for s in srcs:
            self.edges.append((s, nid))
        return nid

    def tfb(self, prefix: str, kind: str, *srcs: str) -> str:
        """F2FP conversion per operand, the trig core, FP2F on the result."""
        conv = [self.node(f"{prefix}_f2fp{i}", "f2fp", s) for i, s in enumerate(srcs)]
        core = self.node(f"{prefix}_core", kind, *conv)
        return self.node(f"{prefix}_fp2f", "fp2f", core)

    def output(self, nid: str) -> None:
        self.outputs.append(nid)

    def build(self) -> DataflowGraph:
        return DataflowGraph(
            name=self.name,
            nodes=self.nodes,
            edges=tuple(self.edges),
            inputs=self.inputs,
            outputs=tuple(self.outputs),
        )


def _fk_graph() -> DataflowGraph:
    b = _GraphBuilder("FK", ("th1", "th2", "th3"))
    # x = -(sin t1 (L2 sin t3 + L1 cos t2)); one TFB per trig term.
    s1 = b.tfb("x_s1", "tfb_sincos", "th1")
    s3 = b.tfb("x_s3", "tfb_sincos", "th3")
    c2 = b.tfb("x_c2", "tfb_sincos", "th2")
    m1 = b.node("x_mul_l2s3", "mul", s3)
    m2 = b.node("x_mul_l1c2", "mul", c2)
    a1 = b.node("x_add", "add", m1, m2)
    m3 = b.node("x_mul_s1", "mul", s1, a1)
    b.output(b.node("x_neg", "negate", m3))
    # y = -(L2 cos t3) + L1 sin t2 + L3
    c3 = b.tfb("y_c3", "tfb_sincos", "th3")
    s2 = b.tfb("y_s2", "tfb_sincos", "th2")
    m4 = b.node("y_mul_l2c3", "mul", c3)
    n1 = b.node("y_neg", "negate", m4)
    m5 = b.node("y_mul_l1s2", "mul", s2)
    a2 = b.node("y_add1", "add", n1, m5)
    b.output(b.node("y_add_l3", "add", a2))
    # z = L2 cos t1 sin t3 + L1 cos t1 cos t2 - L4
    c1 = b.tfb("z_c1", "tfb_sincos", "th1")
    zs3 = b.tfb("z_s3", "tfb_sincos", "th3")
    zc2 = b.tfb("z_c2", "tfb_sincos", "th2")
    m6 = b.node("z_mul_c1s3", "mul", c1, zs3)
    m7 = b.node("z_mul_l2", "mul", m6)
    m8 = b.node("z_mul_c1c2", "mul", c1, zc2)
    m9 = b.node("z_mul_l1", "mul", m8)
    a3 = b.node("z_add1", "add", m7, m9)
    n2 = b.node("z_neg_l4", "negate")
    b.output(b.node("z_add_l4", "add", a3, n2))
    return b.build()


def _ik_graph() -> DataflowGraph:
    b = _GraphBuilder("IK", ("x", "y", "z"))
    # Stage 1: theta1, R and r in parallel.
    a_zl4 = b.node("t1_add_zl4", "add", "z")
    t1 = b.tfb("t1_atan", "tfb_atan2", "x", a_zl4)
    b.output(b.node("t1_neg", "negate", t1))

    r_xsq = b.node("R_mul_xsq", "mul", "x")
    r_zl4 = b.node("R_add_zl4", "add", "z")
    r_zsq = b.node("R_mul_zsq", "mul", r_zl4)
    r_sum = b.node("R_add", "add", r_xsq, r_zsq)
    big_r = b.node("R_sqrt", "sqrt", r_sum)

    s_xsq = b.node("r_mul_xsq", "mul", "x")
    s_zl4 = b.node("r_add_zl4", "add", "z")
    s_zsq = b.node("r_mul_zsq", "mul", s_zl4)
    s_nl3 = b.node("r_neg_l3", "negate")
    s_yl3 = b.node("r_add_yl3", "add", "y", s_nl3)
    s_ysq = b.node("r_mul_ysq", "mul", s_yl3)
    s_a1 = b.node("r_add1", "add", s_xsq, s_zsq)
    s_a2 = b.node("r_add2", "add", s_a1, s_ysq)
    lr = b.node("r_sqrt", "sqrt", s_a2)

    # Stage 2: gamma, beta, alpha in parallel.
    g_l1sq = b.node("g_mul_l1sq", "mul")
    g_l2sq = b.node("g_mul_l2sq", "mul")
    g_c = b.node("g_add_const", "add", g_l1sq, g_l2sq)
    g_rsq = b.node("g_mul_rsq", "mul", lr)
    g_num = b.node("g_add_num", "add", g_c, g_rsq)
    g_d1 = b.node("g_mul_l1r", "mul", lr)
    g_d2 = b.node("g_mul_2", "mul", g_d1)
    g_div = b.node("g_div", "div", g_num, g_d2)
    gamma = b.tfb("g_acos", "tfb_acos", g_div)

    b_nl3 = b.node("b_neg_l3", "negate")
    b_y = b.node("b_add_yl3", "add", "y", b_nl3)
    beta = b.tfb("b_atan", "tfb_atan2", b_y, big_r)

    a_l1sq = b.node("a_mul_l1sq", "mul")
    a_l2sq = b.node("a_mul_l2sq", "mul")
    a_c = b.node("a_add_const", "add", a_l1sq, a_l2sq)
    a_rsq = b.node("a_mul_rsq", "mul", lr)
    a_neg = b.node("a_neg_rsq", "negate", a_rsq)
    a_num = b.node("a_add_num", "add", a_c, a_neg)
    a_d1 = b.node("a_mul_l1l2", "mul")
    a_d2 = b.node("a_mul_2", "mul", a_d1)
    a_div = b.node("a_div", "div", a_num, a_d2)
    alpha = b.tfb("a_acos", "tfb_acos", a_div)

    # Stage 3: theta2 and theta3.
    t2 = b.node("t2_add", "add", gamma, beta)
    b.output(t2)
    t3a = b.node("t3_add1", "add", t2, alpha)
    b.output(b.node("t3_add2", "add", t3a))
    return b.build()


def _kff_graph() -> DataflowGraph:
    b = _GraphBuilder("KFF", ("th1", "th2", "th3", "fx", "fy", "fz"))

    def entry_tfb(entry: str, theta: str) -> str:
        return b.tfb(f"{entry}_{theta}", "tfb_sincos", theta)

    # JM sub-circuits, one per nonzero entry (J21 has no circuit).
    c1 = entry_tfb("j11", "th1")
    s3 = entry_tfb("j11b", "th3")
    c2 = entry_tfb("j11c", "th2")
    m1 = b.node("j11_mul_l2s3", "mul", s3)
    m2 = b.node("j11_mul_l1c2", "mul", c2)
    a1 = b.node("j11_add", "add", m1, m2)
    m3 = b.node("j11_mul_c1", "mul", c1, a1)
    j11 = b.node("j11_neg", "negate", m3)

    s1 = entry_tfb("j31", "th1")
    s3b = entry_tfb("j31b", "th3")
    c2b = entry_tfb("j31c", "th2")
    m4 = b.node("j31_mul_l1c2", "mul", c2b)
    m5 = b.node("j31_mul_s1a", "mul", m4, s1)
    m6 = b.node("j31_mul_l2s3", "mul", s3b)
    m7 = b.node("j31_mul_s1b", "mul", m6, s1)
    a2 = b.node("j31_add", "add", m5, m7)
    j31 = b.node("j31_neg", "negate", a2)

    s1c = entry_tfb("j12", "th1")
    s2 = entry_tfb("j12b", "th2")
    m8 = b.node("j12_mul_s1s2", "mul", s1c, s2)
    j12 = b.node("j12_mul_l1", "mul", m8)

    c2c = entry_tfb("j22", "th2")
    j22 = b.node("j22_mul_l1", "mul", c2c)

    s2b = entry_tfb("j32", "th2")
    c1b = entry_tfb("j32b", "th1")
    m9 = b.node("j32_mul_s2c1", "mul", s2b, c1b)
    m10 = b.node("j32_mul_l1", "mul", m9)
    j32 = b.node("j32_neg", "negate", m10)

    s1d = entry_tfb("j13", "th1")
    c3 = entry_tfb("j13b", "th3")
    m11 = b.node("j13_mul_s1c3", "mul", s1d, c3)
    m12 = b.node("j13_mul_l2", "mul", m11)
    j13 = b.node("j13_neg", "negate", m12)

    s3c = entry_tfb("j23", "th3")
    j23 = b.node("j23_mul_l2", "mul", s3c)

    c3b = entry_tfb("j33", "th3")
    c1c = entry_tfb("j33b", "th1")
    m13 = b.node("j33_mul_c3c1", "mul", c3b, c1c)
    j33 = b.node("j33_mul_l2", "mul", m13)

    # Torque stage: tau1 skips the zero J21 product.
    t1a = b.node("tau1_mul_a", "mul", j11, "fx")
    t1b = b.node("tau1_mul_b", "mul", j31, "fz")
    b.output(b.node("tau1_add", "add", t1a, t1b))

    t2a = b.node("tau2_mul_a", "mul", j12, "fx")
    t2b = b.node("tau2_mul_b", "mul", j22, "fy")
    t2c = b.node("tau2_mul_c", "mul", j32, "fz")
    t2s = b.node("tau2_add1", "add", t2a, t2b)
    b.output(b.node("tau2_add2", "add", t2s, t2c))

    t3a = b.node("tau3_mul_a", "mul", j13, "fx")
    t3b = b.node("tau3_mul_b", "mul", j23, "fy")
    t3c = b.node("tau3_mul_c", "mul", j33, "fz")
    t3s = b.node("tau3_add1", "add", t3a, t3b)
    b.output(b.node("tau3_add2", "add", t3s, t3c))
    return b.build()


def _fbf_graph() -> DataflowGraph:
    b = _GraphBuilder("FBF", ("obj_x", "obj_y", "obj_z", "env_x", "env_y", "env_z"))
    for axis in ("x", "y", "z"):
        sub = b.node(f"f{axis}_sub", "add", f"obj_{axis}", f"env_{axis}")
        b.output(b.node(f"f{axis}_mul_h", "mul", sub))
    return b.build()


def builtin_graphs() -> dict[str, DataflowGraph]:
    """Dataflow graphs of the four hardware modules, transcribed from the
    circuit structure at named-sub-circuit granularity."""
    return {
        "FK": _fk_graph(),
        "IK": _ik_graph(),
        "KFF": _kff_graph(),
        "FBF": _fbf_graph(),
    }


def hardware_time(critical_paths: dict[str, float]) -> float:
    """Total per-loop hardware latency: the FK module is instantiated twice
    (master and slave side), the others once."""
    total = 0.0
    for name, cp in critical_paths.items():
        total += 2.0 * cp if name == "FK" else cp
    return total


@dataclass(frozen=True)
class CalibrationResult:
    table: OpLatencyTable
    critical_paths: dict[str, float]
    residuals: dict[str, float]
    t_hardware: float

    def to_dict(self) -> dict:
        return {
            "op_latency_ns": self.table.to_dict(),
            "critical_path_ns": dict(self.critical_paths),
            "residual_ns": dict(self.residuals),
            "t_hardware_ns": self.t_hardware,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _all_path_signatures(g: DataflowGraph) -> list[np.ndarray]:
    """Distinct operator-count vectors over all input-to-output paths."""
    preds: dict[str, list[str]] = {nid: [] for nid in g.nodes}
    for src, dst in g.edges:
        if src in g.nodes:
            preds[dst].append(src)

    memo: dict[str, set[tuple[int, ...]]] = {}

    def vectors(nid: str) -> set[tuple[int, ...]]:
        cached = memo.get(nid)
        if cached is not None:
            return cached
        idx = OP_KINDS.index(g.nodes[nid])
        out: set[tuple[int, ...]] = set()
        if not preds[nid]:
            base = [0] * len(OP_KINDS)
            base[idx] += 1
            out.add(tuple(base))
        else:
            for p in preds[nid]:
                for vec in vectors(p):
                    ext = list(vec)
                    ext[idx] += 1
                    out.add(tuple(ext))
        memo[nid] = out
        return out

    result: set[tuple[int, ...]] = set()
    for o in g.outputs:
        result |= vectors(o)
    return [np.array(v, dtype=float) for v in sorted(result)]


def calibrate(
    targets: dict[str, float],
    graphs: dict[str, DataflowGraph] | None = None,
    max_rounds: int = 20,
) -> CalibrationResult:
    """Fit nonnegative per-operator latencies so that each module's critical
    path matches its target as closely as possible (least squares residual).

    The critical path is the max over all paths, so the fit keeps every path
    at or below its module's target while pushing one selected path per module
    up against it; the selection is refined until it coincides with the
    dominant path under the fitted table.
    """
    if graphs is None:
        graphs = builtin_graphs()
    if not targets:
        raise CalibrationDegenerate("no calibration targets given")
    unknown = set(targets) - set(graphs)
    if unknown:
        raise CalibrationDegenerate(f"targets for unknown modules: {sorted(unknown)}")
    for name, value in targets.items():
        if not (value > 0 and math.isfinite(value)):
            raise CalibrationDegenerate(f"target for {name} must be positive, got {value}")
    names = sorted(targets)

    signatures = {name: _all_path_signatures(graphs[name]) for name in names}
    if all(not sigs for sigs in signatures.values()):
        raise CalibrationDegenerate("all target graphs are empty")

    a_ub = np.vstack([sig for name in names for sig in signatures[name]])
    b_ub = np.concatenate(
        [np.full(len(signatures[name]), targets[name]) for name in names]
    )

    # Start from the longest path by node count, then re-select the dominant
    # path under the fitted table until the selection is stable.
    selected = {
        name: max(signatures[name], key=lambda v: v.sum()) for name in names if signatures[name]
    }
    best: tuple[float, OpLatencyTable] | None = None
    for _ in range(max_rounds):
        objective = -np.sum([selected[name] for name in selected], axis=0)
        sol = linprog(objective, A_ub=a_ub, b_ub=b_ub, bounds=(0, None), method="highs")
        if not sol.success:
            raise CalibrationDegenerate(f"latency fit failed: {sol.message}")
        table = OpLatencyTable(**{k: float(sol.x[i]) for i, k in enumerate(OP_KINDS)})
        cps = {name: critical_path(graphs[name], table) for name in names}
        sq_err = sum((cps[name] - targets[name]) ** 2 for name in names)
        if best is None or sq_err < best[0]:
            best = (sq_err, table)
        if sq_err == 0.0:
            break
        previous = {name: tuple(vec) for name, vec in selected.items()}
        selected = {
            name: max(signatures[name], key=lambda v: float(v @ sol.x))
            for name in names
            if signatures[name]
        }
        if {name: tuple(vec) for name, vec in selected.items()} == previous:
            break

    table = best[1]
    cps = {name: critical_path(graphs[name], table) for name in names}
    residuals = {name: cps[name] - targets[name] for name in names}
    return CalibrationResult(
        table=table,
        critical_paths=cps,
        residuals=residuals,
        t_hardware=hardware_time(cps),
    )
