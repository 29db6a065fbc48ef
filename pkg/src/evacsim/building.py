"""Multi-floor building graph: loading, serialization and shortest paths.

Building files are line oriented::

    building <name>
    node <id> <x> <y> <z> <floor> <capacity> [exit]
    edge <id1> <id2> <length_cm>

Comments start with ``#``. Node ids must be dense ``0..N-1``.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable, Iterable, Optional, Sequence

Path = tuple[int, ...]
WeightFn = Callable[[int, int, float], float]

# relative slack when comparing float path costs for the tie-break rule
_TIE_EPS = 1e-9


class BuildingError(ValueError):
    """Raised for malformed or invalid building descriptions."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class BuildingNode:
    id: int
    position: tuple[float, float, float]
    floor: int
    capacity: int
    is_exit: bool = False


@dataclass(frozen=True)
class Edge:
    u: int
    v: int
    length: float

    @property
    def endpoints(self) -> tuple[int, int]:
        return (self.u, self.v)


@dataclass(frozen=True)
class BuildingGraph:
    name: str
    nodes: tuple[BuildingNode, ...]
    edges: tuple[Edge, ...]
    adjacency: tuple[tuple[int, ...], ...] = field(repr=False)
    _lengths: dict = field(repr=False, compare=False)

    @classmethod
    def build(cls, name: str, nodes: Sequence[BuildingNode], edges: Sequence[Edge]) -> "BuildingGraph":
        nbrs: list[set[int]] = [set() for _ in nodes]
        lengths: dict[tuple[int, int], float] = {}
        for e in edges:
            nbrs[e.u].add(e.v)
            nbrs[e.v].add(e.u)
            lengths[(e.u, e.v)] = e.length
            lengths[(e.v, e.u)] = e.length
        adjacency = tuple(tuple(sorted(s)) for s in nbrs)
        return cls(name, tuple(nodes), tuple(edges), adjacency, lengths)

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def exits(self) -> tuple[int, ...]:
        return tuple(n.id for n in self.nodes if n.is_exit)

    def is_exit(self, n: int) -> bool:
        return self.nodes[n].is_exit

    def neighbors(self, n: int) -> tuple[int, ...]:
        return self.adjacency[n]

    def length(self, u: int, v: int) -> float:
        try:
            return self._lengths[(u, v)]
        except KeyError:
            raise BuildingError(f"no edge between {u} and {v}") from None

    def has_edge(self, u: int, v: int) -> bool:
        return (u, v) in self._lengths

    def average_edge_length(self) -> float:
        return sum(e.length for e in self.edges) / len(self.edges)

    def max_edge_length(self) -> float:
        return max(e.length for e in self.edges)


def _parse_float(tok: str, what: str, line: int) -> float:
    try:
        val = float(tok)
    except ValueError:
        raise BuildingError(f"bad {what} {tok!r}", line) from None
    if not math.isfinite(val):
        raise BuildingError(f"non-finite {what} {tok!r}", line)
    return val


def _parse_int(tok: str, what: str, line: int) -> int:
    try:
        return int(tok)
    except ValueError:
        raise BuildingError(f"bad {what} {tok!r}", line) from None


def load_building(text: str) -> BuildingGraph:
    """Parse and validate building-file content."""
    name = None
    nodes: dict[int, BuildingNode] = {}
    raw_edges: list[tuple[int, int, float, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        kind = toks[0]
        if kind == "building":
            if name is not None:
                raise BuildingError("duplicate building header", lineno)
            if len(toks) != 2:
                raise BuildingError("expected 'building <name>'", lineno)
            name = toks[1]
        elif kind == "node":
            if len(toks) not in (7, 8) or (len(toks) == 8 and toks[7] != "exit"):
                raise BuildingError("expected 'node <id> <x> <y> <z> <floor> <capacity> [exit]'", lineno)
            nid = _parse_int(toks[1], "node id", lineno)
            pos = tuple(_parse_float(t, "coordinate", lineno) for t in toks[2:5])
            floor = _parse_int(toks[5], "floor", lineno)
            cap = _parse_int(toks[6], "capacity", lineno)
            if nid < 0:
                raise BuildingError(f"negative node id {nid}", lineno)
            if nid in nodes:
                raise BuildingError(f"duplicate node {nid}", lineno)
            if floor < 1:
                raise BuildingError(f"floor must be >= 1, got {floor}", lineno)
            if cap < 1:
                raise BuildingError(f"capacity must be >= 1, got {cap}", lineno)
            nodes[nid] = BuildingNode(nid, pos, floor, cap, len(toks) == 8)
        elif kind == "edge":
            if len(toks) != 4:
                raise BuildingError("expected 'edge <id1> <id2> <length_cm>'", lineno)
            u = _parse_int(toks[1], "node id", lineno)
            v = _parse_int(toks[2], "node id", lineno)
            length = _parse_float(toks[3], "length", lineno)
            raw_edges.append((u, v, length, lineno))
        else:
            raise BuildingError(f"unknown record {kind!r}", lineno)

    if name is None:
        raise BuildingError("missing 'building <name>' header")
    if not nodes:
        raise BuildingError("building has no nodes")
    n = len(nodes)
    if sorted(nodes) != list(range(n)):
        raise BuildingError("node ids must be dense 0..N-1")

    seen: set[frozenset] = set()
    edges = []
    for u, v, length, lineno in raw_edges:
        if u not in nodes or v not in nodes:
            raise BuildingError(f"edge references unknown node ({u}, {v})", lineno)
        if u == v:
            raise BuildingError(f"self-edge at node {u}", lineno)
        if length <= 0:
            raise BuildingError(f"edge length must be > 0, got {length}", lineno)
        key = frozenset((u, v))
        if key in seen:
            raise BuildingError(f"duplicate edge ({u}, {v})", lineno)
        seen.add(key)
        edges.append(Edge(u, v, length))

    graph = BuildingGraph.build(name, [nodes[i] for i in range(n)], edges)
    validate_building(graph)
    return graph


def validate_building(graph: BuildingGraph) -> None:
    if not graph.exits:
        raise BuildingError("building has no exit")
    dist = distances_to(graph, graph.exits)
    for node in graph.nodes:
        if math.isinf(dist[node.id]):
            raise BuildingError(f"exit unreachable from {node.id}")


def _fmt(x: float) -> str:
    return repr(float(x)) if not float(x).is_integer() else str(int(x))


def dump_building(graph: BuildingGraph) -> str:
    lines = [f"building {graph.name}"]
    for nd in graph.nodes:
        x, y, z = nd.position
        tail = " exit" if nd.is_exit else ""
        lines.append(f"node {nd.id} {_fmt(x)} {_fmt(y)} {_fmt(z)} {nd.floor} {nd.capacity}{tail}")
    for e in graph.edges:
        lines.append(f"edge {e.u} {e.v} {_fmt(e.length)}")
    return "\n".join(lines) + "\n"


def load_default_building() -> BuildingGraph:
    text = resources.files("evacsim.data").joinpath("default_building.txt").read_text("utf-8")
    return load_building(text)


def _length_weight(u: int, v: int, length: float) -> float:
    return length


def distances_to(
    graph: BuildingGraph, targets: Iterable[int], weight: Optional[WeightFn] = None
) -> list[float]:
    """Multi-source Dijkstra: cost from every node to the nearest target.

    Edges are undirected, but ``weight(u, v, length)`` is queried for the
    direction of travel ``u -> v`` (towards the targets).
    """
    weight = weight or _length_weight
    dist = [math.inf] * len(graph.nodes)
    heap = []
    for t in targets:
        dist[t] = 0.0
        heap.append((0.0, t))
    heapq.heapify(heap)
    adj = graph.adjacency
    lengths = graph._lengths
    while heap:
        d, v = heapq.heappop(heap)
        if d > dist[v]:
            continue
        for u in adj[v]:
            w = weight(u, v, lengths[(u, v)])
            if w < 0:
                raise ValueError("negative edge weight")
            nd = d + w
            if nd < dist[u]:
                dist[u] = nd
                heapq.heappush(heap, (nd, u))
    return dist


@dataclass(frozen=True)
class ExitTree:
    """Shortest-path tree towards the exits (virtual super-sink)."""

    dist: tuple[float, ...]
    next_hop: tuple[Optional[int], ...]

    def path_from(self, source: int) -> Optional[Path]:
        if math.isinf(self.dist[source]):
            return None
        path = [source]
        n = source
        while self.next_hop[n] is not None:
            n = self.next_hop[n]
            path.append(n)
        return tuple(path)


def exit_tree(graph: BuildingGraph, weight: Optional[WeightFn] = None) -> ExitTree:
    weight = weight or _length_weight
    dist = distances_to(graph, graph.exits, weight)
    nxt: list[Optional[int]] = [None] * len(graph.nodes)
    lengths = graph._lengths
    for u in range(len(graph.nodes)):
        if graph.nodes[u].is_exit or math.isinf(dist[u]):
            continue
        costs = [(weight(u, v, lengths[(u, v)]) + dist[v], v) for v in graph.adjacency[u]]
        best = min(c for c, _ in costs)
        tol = _TIE_EPS * max(1.0, best)
        # adjacency is sorted, so the first candidate within tolerance has the smallest id
        nxt[u] = next(v for c, v in costs if c <= best + tol)
    return ExitTree(tuple(dist), tuple(nxt))


@dataclass(frozen=True)
class Trapped:
    """No exit is reachable from ``source``."""

    source: int


@dataclass(frozen=True)
class ShortestPath:
    path: Path
    cost: float


def dijkstra(
    graph: BuildingGraph, source: int, weight: Optional[WeightFn] = None
) -> ShortestPath | Trapped:
    """Minimum-cost path from ``source`` to the cheapest-to-reach exit."""
    if not 0 <= source < len(graph.nodes):
        raise BuildingError(f"unknown node {source}")
    tree = exit_tree(graph, weight)
    path = tree.path_from(source)
    if path is None:
        return Trapped(source)
    return ShortestPath(path, tree.dist[source])


def path_length(graph: BuildingGraph, p: Sequence[int]) -> float:
    if len(p) == 0:
        raise BuildingError("empty path")
    return sum(graph.length(a, b) for a, b in zip(p, p[1:]))
