"""Pose-graph multigraph and weighted Laplacian construction.

Nodes are integer keyframe ids (monotone in creation order). Each unordered
pair may carry at most one IMU edge and one covisibility edge; the Laplacian
only ever sees the total weight of a pair.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

DEFAULT_IMU_WEIGHT = 500.0


class GraphError(ValueError):
    """Raised for malformed graphs or invalid node references."""


class EdgeCategory(enum.Enum):
    IMU = "imu"
    COVIS = "vis"


@dataclass(frozen=True)
class Edge:
    head: int
    tail: int
    category: EdgeCategory
    weight: float

    def __post_init__(self):
        if self.head == self.tail:
            raise GraphError(f"self-loop on keyframe {self.head}")
        if not self.weight >= 1.0:
            raise GraphError(
                f"edge ({self.head},{self.tail}) weight {self.weight} < 1"
            )

    @property
    def pair(self) -> tuple[int, int]:
        return (min(self.head, self.tail), max(self.head, self.tail))


@dataclass
class PoseGraph:
    """Undirected weighted multigraph over keyframe ids.

    Mutation (``add_keyframe`` / ``add_edge``) is meant to happen between
    selection runs only; selection code treats the graph as read-only.
    """

    nodes: list[int] = field(default_factory=list)
    _edges: dict[tuple[tuple[int, int], EdgeCategory], Edge] = field(
        default_factory=dict, repr=False
    )
    _adj: dict[int, dict[int, float]] = field(default_factory=dict, repr=False)

    @classmethod
    def from_edges(cls, nodes: Iterable[int], edges: Iterable[tuple]) -> "PoseGraph":
        """Build from ``(head, tail, weight)`` or ``(head, tail, category, weight)``."""
        g = cls()
        for n in sorted(set(nodes)):
            g.add_keyframe(n)
        for e in edges:
            if len(e) == 3:
                g.add_edge(e[0], e[1], EdgeCategory.COVIS, e[2])
            else:
                cat = e[2] if isinstance(e[2], EdgeCategory) else EdgeCategory(e[2])
                g.add_edge(e[0], e[1], cat, e[3])
        return g

    def __contains__(self, n) -> bool:
        return n in self._adj

    def __len__(self) -> int:
        return len(self.nodes)

    def add_keyframe(self, n: int) -> None:
        n = int(n)
        if n < 0:
            raise GraphError(f"keyframe id must be non-negative, got {n}")
        if n in self._adj:
            raise GraphError(f"duplicate keyframe id {n}")
        if self.nodes and n < self.nodes[-1]:
            # keep ``nodes`` sorted; ids need not arrive in order in tests
            self.nodes.append(n)
            self.nodes.sort()
        else:
            self.nodes.append(n)
        self._adj[n] = {}

    def add_edge(self, head: int, tail: int, category: EdgeCategory, weight: float) -> Edge:
        head, tail = int(head), int(tail)
        for n in (head, tail):
            if n not in self._adj:
                raise GraphError(f"unknown keyframe id {n}")
        edge = Edge(head, tail, category, float(weight))
        key = (edge.pair, category)
        if key in self._edges:
            raise GraphError(
                f"duplicate {category.value} edge between {edge.pair[0]} and {edge.pair[1]}"
            )
        if category is EdgeCategory.IMU:
            lo, hi = edge.pair
            i = self.nodes.index(lo)
            if i + 1 >= len(self.nodes) or self.nodes[i + 1] != hi:
                raise GraphError(f"IMU edge {edge.pair} joins non-consecutive keyframes")
        self._edges[key] = edge
        self._adj[head][tail] = self._adj[head].get(tail, 0.0) + edge.weight
        self._adj[tail][head] = self._adj[tail].get(head, 0.0) + edge.weight
        return edge

    @property
    def edges(self) -> list[Edge]:
        return list(self._edges.values())

    def neighbors(self, n: int) -> dict[int, float]:
        """Map neighbor id -> total edge weight. Do not mutate."""
        try:
            return self._adj[n]
        except KeyError:
            raise GraphError(f"unknown keyframe id {n}") from None


def total_edge_weight(graph: PoseGraph, n: int, m: int) -> float:
    if n not in graph or m not in graph:
        raise GraphError(f"unknown keyframe id in ({n}, {m})")
    return graph.neighbors(n).get(m, 0.0)


def weight_matrix(graph: PoseGraph, node_order: Sequence[int]) -> np.ndarray:
    """Symmetric matrix of total pair weights restricted to ``node_order``."""
    pos = _positions(graph, node_order)
    W = np.zeros((len(pos), len(pos)))
    for n, i in pos.items():
        for m, w in graph.neighbors(n).items():
            j = pos.get(m)
            if j is not None:
                W[i, j] = w
    return W


def build_laplacian(graph: PoseGraph, node_order: Sequence[int]) -> np.ndarray:
    """Weighted Laplacian of the subgraph induced by ``node_order``.

    Rows follow ``node_order``. Edges leaving the subset are ignored.
    """
    W = weight_matrix(graph, node_order)
    return np.diag(W.sum(axis=1)) - W


def reduce(laplacian: np.ndarray, removed: Iterable[int]) -> np.ndarray:
    """Principal submatrix with the ``removed`` positions deleted."""
    removed = set(int(r) for r in removed)
    n = laplacian.shape[0]
    if not removed:
        raise GraphError("reduce() needs at least one anchor position")
    if any(r < 0 or r >= n for r in removed):
        raise GraphError(f"anchor positions {sorted(removed)} out of range for size {n}")
    keep = [i for i in range(n) if i not in removed]
    if not keep:
        raise GraphError("cannot remove every node")
    return laplacian[np.ix_(keep, keep)]


def _positions(graph: PoseGraph, node_order: Sequence[int]) -> dict[int, int]:
    pos: dict[int, int] = {}
    for i, n in enumerate(node_order):
        if n not in graph:
            raise GraphError(f"unknown keyframe id {n}")
        if n in pos:
            raise GraphError(f"duplicate keyframe {n} in node order")
        pos[n] = i
    return pos


# -- stream files -----------------------------------------------------------


@dataclass(frozen=True)
class KeyframeRecord:
    id: int
    timestamp_s: float
    imu_to_prev: bool = False
    covis: tuple[tuple[int, float], ...] = ()
    in_global: bool = False


def parse_record(line: str, lineno: int = 0) -> KeyframeRecord:
    try:
        raw = json.loads(line)
    except json.JSONDecodeError as exc:
        raise GraphError(f"line {lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise GraphError(f"line {lineno}: expected a JSON object")
    try:
        kid = raw["id"]
        ts = float(raw.get("timestamp_s", 0.0))
        covis = tuple((int(o), float(w)) for o, w in raw.get("covis", []))
    except (KeyError, TypeError, ValueError) as exc:
        raise GraphError(f"line {lineno}: bad keyframe record ({exc!r})") from None
    if not isinstance(kid, int) or isinstance(kid, bool) or kid < 0:
        raise GraphError(f"line {lineno}: id must be a non-negative integer")
    return KeyframeRecord(
        id=kid,
        timestamp_s=ts,
        imu_to_prev=bool(raw.get("imu_to_prev", False)),
        covis=covis,
        in_global=bool(raw.get("global", False)),
    )


def read_stream(path) -> list[KeyframeRecord]:
    """Read a JSON-lines keyframe stream. Blank lines are skipped."""
    records = []
    seen = set()
    last_ts = float("-inf")
    with open(Path(path)) as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            rec = parse_record(line, lineno)
            if rec.id in seen:
                raise GraphError(f"line {lineno}: duplicate keyframe id {rec.id}")
            if rec.timestamp_s < last_ts:
                raise GraphError(f"line {lineno}: timestamps must be non-decreasing")
            seen.add(rec.id)
            last_ts = rec.timestamp_s
            records.append(rec)
    return records


def ingest(graph: PoseGraph, rec: KeyframeRecord, imu_weight: float = DEFAULT_IMU_WEIGHT) -> None:
    """Add one keyframe record (node, IMU edge, covisibility edges) to ``graph``."""
    prev = graph.nodes[-1] if graph.nodes else None
    if prev is not None and rec.id <= prev:
        raise GraphError(f"keyframe {rec.id} arrives after {prev}; ids must increase")
    graph.add_keyframe(rec.id)
    if rec.imu_to_prev:
        if prev is None:
            raise GraphError(f"keyframe {rec.id} has imu_to_prev but no predecessor")
        graph.add_edge(prev, rec.id, EdgeCategory.IMU, imu_weight)
    for other, w in rec.covis:
        if w == 0:
            continue
        if other not in graph:
            raise GraphError(f"keyframe {rec.id} references unknown keyframe {other}")
        graph.add_edge(other, rec.id, EdgeCategory.COVIS, w)


def load_graph(path, imu_weight: float = DEFAULT_IMU_WEIGHT) -> tuple[PoseGraph, list[KeyframeRecord]]:
    records = read_stream(path)
    graph = PoseGraph()
    for rec in records:
        ingest(graph, rec, imu_weight)
    return graph, records
