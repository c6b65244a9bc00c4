"""Time-slotted simulator of the device / edge-server split.

Each slot: ingest the slot's keyframes, build the local map for the newest
keyframe, uplink a capacity-limited subset of pending keyframes to the
server map, then refresh the device's (possibly delayed) copy of it.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Iterable

from .baselines import Baseline, BaselineKind, baseline_select
from .graph import DEFAULT_IMU_WEIGHT, GraphError, KeyframeRecord, PoseGraph, ingest, read_stream
from .oracle import brute_force_local_map, brute_force_select
from .selection import (
    SelectionBudget,
    TopHConfig,
    construct_local_map,
    select_global_keyframes,
    with_capacity,
)
from .uncertainty import local_uncertainty, set_uncertainty

STRATEGIES = ("adaptslam", "random", "dropoldest", "orbbuf", "bruteforce")

REPORT_COLUMNS = (
    "slot",
    "new_keyframes",
    "pending",
    "uplinked",
    "capacity_bits",
    "uplinked_bits",
    "local_size",
    "fixed_size",
    "local_uncertainty",
    "global_size",
    "global_uncertainty",
    "evaluations",
)


class SimError(RuntimeError):
    pass


# -- bandwidth traces -------------------------------------------------------


@dataclass(frozen=True)
class BandwidthTrace:
    slots: tuple[int, ...]
    capacities: tuple[float, ...]

    def __post_init__(self):
        if len(self.slots) != len(self.capacities):
            raise ValueError("slots and capacities differ in length")
        if any(b <= a for a, b in zip(self.slots, self.slots[1:])):
            raise ValueError("trace slots must be strictly increasing")
        if any(c < 0 for c in self.capacities):
            raise ValueError("capacities must be non-negative")

    def capacity_at(self, slot: int) -> float:
        """Piecewise constant: the latest entry at or before ``slot`` (0 before the first)."""
        cap = 0.0
        for s, c in zip(self.slots, self.capacities):
            if s > slot:
                break
            cap = c
        return cap

    @classmethod
    def constant(cls, bits_per_slot: float, n_slots: int) -> "BandwidthTrace":
        return cls(tuple(range(n_slots)), (float(bits_per_slot),) * n_slots)

    @classmethod
    def from_mbps(cls, mbps: float, slot_seconds: float, n_slots: int) -> "BandwidthTrace":
        return cls.constant(mbps * 1e6 * slot_seconds, n_slots)


def load_trace(path) -> BandwidthTrace:
    """Read a ``slot,bits_per_slot`` CSV. Errors name the offending line/column."""
    text = Path(path).read_text()
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise SimError(f"{path}: empty trace file")
    header = [h.strip() for h in lines[0].split(",")]
    if header != ["slot", "bits_per_slot"]:
        raise SimError(f"{path}: line 1: expected header 'slot,bits_per_slot', got {lines[0]!r}")
    slots, caps = [], []
    for lineno, line in enumerate(lines[1:], 2):
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) != 2:
            raise SimError(f"{path}: line {lineno}: expected 2 columns, got {len(cells)}")
        try:
            slot = int(cells[0])
        except ValueError:
            raise SimError(f"{path}: line {lineno}, column 1: bad slot {cells[0]!r}") from None
        try:
            cap = float(cells[1])
        except ValueError:
            raise SimError(f"{path}: line {lineno}, column 2: bad capacity {cells[1]!r}") from None
        if not math.isfinite(cap) or cap < 0:
            raise SimError(f"{path}: line {lineno}, column 2: capacity must be finite and >= 0")
        if slots and slot <= slots[-1]:
            raise SimError(f"{path}: line {lineno}, column 1: slots must strictly increase")
        slots.append(slot)
        caps.append(cap)
    if not slots:
        raise SimError(f"{path}: trace has no rows")
    return BandwidthTrace(tuple(slots), tuple(caps))


def write_trace(trace: BandwidthTrace, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("slot,bits_per_slot\n")
        for s, c in zip(trace.slots, trace.capacities):
            fh.write(f"{s},{c:.17g}\n")


# -- configuration ----------------------------------------------------------


@dataclass(frozen=True)
class SimConfig:
    slot_seconds: float = 1.0
    budget: SelectionBudget = field(default_factory=SelectionBudget)
    topk: TopHConfig = field(default_factory=TopHConfig)
    imu_weight: float = DEFAULT_IMU_WEIGHT
    downlink_delay_slots: int = 0
    strategy: str = "adaptslam"
    seed: int = 0

    def __post_init__(self):
        if not self.slot_seconds > 0:
            raise ValueError("slot_seconds must be > 0")
        if not self.imu_weight >= 1:
            raise ValueError("imu_weight must be >= 1")
        if self.downlink_delay_slots < 0:
            raise ValueError("downlink_delay_slots must be >= 0")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}; choose from {STRATEGIES}")

    @classmethod
    def from_dict(cls, raw: dict) -> "SimConfig":
        raw = dict(raw)
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "budget" in raw:
            raw["budget"] = SelectionBudget(**raw["budget"])
        if "topk" in raw:
            raw["topk"] = TopHConfig(**raw["topk"])
        return cls(**raw)

    def to_dict(self) -> dict:
        return asdict(self)


def load_config(path) -> SimConfig:
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SimError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    try:
        return SimConfig.from_dict(raw)
    except (TypeError, ValueError) as exc:
        raise SimError(f"{path}: {exc}") from None


# -- strategy dispatch ------------------------------------------------------


def _baseline(strategy: str, seed: int) -> Baseline:
    return Baseline(BaselineKind(strategy), seed)


def choose_local(
    graph: PoseGraph,
    candidates: Iterable[int],
    k: int,
    k_g_user: Iterable[int],
    budget: SelectionBudget,
    cfg: TopHConfig,
    strategy: str,
    seed: int = 0,
) -> tuple[tuple[int, ...], tuple[int, ...], float, int]:
    """Local map under ``strategy``: ``(local, fixed, uncertainty, evaluations)``."""
    candidates = sorted(set(candidates) - {k})
    fixed_pool = sorted(set(k_g_user))
    if strategy == "adaptslam":
        loc, fx = construct_local_map(graph, candidates, k, fixed_pool, budget, cfg)
        return loc.chosen, fx.chosen, fx.uncertainty, loc.evaluations + fx.evaluations
    if strategy == "bruteforce":
        loc, fx, u = brute_force_local_map(graph, candidates, k, fixed_pool, budget.l_loc, budget.l_f)
        return loc, fx, u, 0
    b = _baseline(strategy, seed)
    loc = baseline_select(graph, candidates, min(budget.l_loc, len(candidates)), b)
    fx = baseline_select(graph, fixed_pool, min(budget.l_f, len(fixed_pool)), b)
    return loc, fx, local_uncertainty(graph, loc, fx, k), 0


def choose_global(
    graph: PoseGraph,
    k_g_edge: Iterable[int],
    pending: Iterable[int],
    budget: SelectionBudget,
    cfg: TopHConfig,
    strategy: str,
    seed: int = 0,
) -> tuple[tuple[int, ...], int]:
    """Uplink choice under ``strategy``: ``(chosen, evaluations)``."""
    k_g_edge = set(k_g_edge)
    pending = sorted(set(pending) - k_g_edge)
    s = min(budget.max_uplink, len(pending))
    if strategy == "adaptslam":
        res = select_global_keyframes(graph, k_g_edge, pending, budget, cfg)
        return res.chosen, res.evaluations
    if strategy == "bruteforce":
        res = brute_force_select(graph, pending, k_g_edge, s, mode="global")
        return res.chosen, res.evaluations
    return baseline_select(graph, pending, s, _baseline(strategy, seed)), 0


# -- simulation -------------------------------------------------------------


@dataclass
class SimState:
    graph: PoseGraph = field(default_factory=PoseGraph)
    k_g_edge: set = field(default_factory=set)
    k_g_user: set = field(default_factory=set)
    # k_g_edge at the end of each finished slot
    history: list = field(default_factory=list)
    current_slot: int = 0

    @property
    def pending(self) -> set:
        return set(self.graph.nodes) - self.k_g_edge


@dataclass
class SlotRecord:
    slot: int
    new_keyframes: int
    pending: int
    uplinked: int
    capacity_bits: float
    uplinked_bits: float
    local_size: int
    fixed_size: int
    local_uncertainty: float
    global_size: int
    global_uncertainty: float
    evaluations: int
    wall_time: float = 0.0


def step(state: SimState, config: SimConfig, slot_keyframes: list[KeyframeRecord], capacity_bits: float) -> SlotRecord:
    """Advance one slot in place and return its record."""
    t0 = time.perf_counter()
    slot = state.current_slot
    for rec in slot_keyframes:
        ingest(state.graph, rec, config.imu_weight)
    seed = config.seed * 1_000_003 + slot
    evals = 0

    loc, fx, u_loc = (), (), math.nan
    if slot_keyframes:
        k = state.graph.nodes[-1]
        cands = set(state.graph.nodes) - state.k_g_user - {k}
        loc, fx, u_loc, e = choose_local(
            state.graph, cands, k, state.k_g_user, config.budget, config.topk, config.strategy, seed
        )
        evals += e

    budget = with_capacity(config.budget, capacity_bits)
    up, e = choose_global(
        state.graph, state.k_g_edge, state.pending, budget, config.topk, config.strategy, seed
    )
    evals += e
    if len(up) * budget.keyframe_bits > capacity_bits:
        raise SimError(f"slot {slot}: uplink of {len(up)} keyframes exceeds capacity")
    state.k_g_edge |= set(up)
    state.history.append(frozenset(state.k_g_edge))
    lag = slot - config.downlink_delay_slots
    state.k_g_user = set(state.history[lag]) if lag >= 0 else set()
    state.current_slot = slot + 1

    return SlotRecord(
        slot=slot,
        new_keyframes=len(slot_keyframes),
        pending=len(state.pending),
        uplinked=len(up),
        capacity_bits=float(capacity_bits),
        uplinked_bits=len(up) * budget.keyframe_bits,
        local_size=len(loc),
        fixed_size=len(fx),
        local_uncertainty=u_loc,
        global_size=len(state.k_g_edge),
        global_uncertainty=set_uncertainty(state.graph, state.k_g_edge),
        evaluations=evals,
        wall_time=time.perf_counter() - t0,
    )


def _fmt(x) -> str:
    if isinstance(x, float):
        if math.isnan(x):
            return ""
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return format(x + 0.0, ".12g")
    return str(x)


@dataclass
class SimReport:
    records: list[SlotRecord] = field(default_factory=list)
    strategy: str = "adaptslam"

    def summary(self) -> dict:
        glob = [r.global_uncertainty for r in self.records]
        loc = [r.local_uncertainty for r in self.records if not math.isnan(r.local_uncertainty)]
        return {
            "strategy": self.strategy,
            "slots": len(self.records),
            "mean_global_uncertainty": sum(glob) / len(glob) if glob else math.nan,
            "mean_local_uncertainty": sum(loc) / len(loc) if loc else math.nan,
            "uplinked": sum(r.uplinked for r in self.records),
            "evaluations": sum(r.evaluations for r in self.records),
        }

    def to_csv(self, timing: bool = False) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        cols = REPORT_COLUMNS + (("wall_time_s",) if timing else ())
        w.writerow(cols)
        for r in self.records:
            row = [_fmt(getattr(r, c)) for c in REPORT_COLUMNS]
            if timing:
                row.append(format(r.wall_time, ".6f"))
            w.writerow(row)
        return buf.getvalue()

    def write_csv(self, path, timing: bool = False) -> None:
        Path(path).write_text(self.to_csv(timing))


def slot_of(rec: KeyframeRecord, slot_seconds: float) -> int:
    return int(math.floor(rec.timestamp_s / slot_seconds + 1e-9))


def simulate(config: SimConfig, records: list[KeyframeRecord], trace: BandwidthTrace) -> SimReport:
    report = SimReport(strategy=config.strategy)
    if not records:
        return report
    by_slot: dict[int, list[KeyframeRecord]] = {}
    for rec in records:
        by_slot.setdefault(slot_of(rec, config.slot_seconds), []).append(rec)
    if min(by_slot) < 0:
        raise SimError("negative timestamps are not supported")
    state = SimState()
    for slot in range(max(by_slot) + 1):
        try:
            report.records.append(step(state, config, by_slot.get(slot, []), trace.capacity_at(slot)))
        except (GraphError, ValueError, ArithmeticError) as exc:
            raise SimError(f"slot {slot}: {exc}") from exc
    return report


def run(config: SimConfig, stream_path, trace_path) -> SimReport:
    try:
        records = read_stream(stream_path)
    except GraphError as exc:
        raise SimError(f"{stream_path}: {exc}") from None
    return simulate(config, records, load_trace(trace_path))
