"""Capacitated undirected multigraphs and their end-to-end capacities.

Single-path capacity is the widest (max-bottleneck) path; flooding capacity is
the max-flow value, witnessed by a minimum cut.
"""

from __future__ import annotations

import heapq
import json
from collections import deque
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Any, Hashable, Iterable, Mapping, Optional, Sequence

import numpy as np

from .capacity import BoundKind, _merge_kind
from .errors import ChannelError, ConfigError, DomainError, NodeNotFound, QnetcapError, TooLarge

EPS = 1e-12
BRUTE_FORCE_LIMIT = 20


@dataclass(frozen=True)
class NodeLabel:
    community: Optional[Hashable] = None
    backbone: bool = False


@dataclass(frozen=True)
class Edge:
    u: Hashable
    v: Hashable
    capacity: float = 0.0
    kind: BoundKind = BoundKind.EXACT
    channel: Any = field(default=None, compare=False, hash=False)

    def other(self, x):
        return self.v if x == self.u else self.u

    def joins(self, a, b) -> bool:
        return {self.u, self.v} == {a, b}


class Network:
    """Immutable undirected multigraph.

    Node order is insertion order and defines every deterministic tie-break.
    """

    def __init__(self, nodes: Iterable = (), edges: Iterable = ()):
        labels: dict = {}
        for n in nodes:
            if isinstance(n, tuple) and len(n) == 2 and isinstance(n[1], NodeLabel):
                labels[n[0]] = n[1]
            else:
                labels.setdefault(n, NodeLabel())
        elist = []
        for e in edges:
            if not isinstance(e, Edge):
                e = Edge(*e)
            if e.u == e.v:
                raise DomainError(f"self-loop on node {e.u!r}")
            for x in (e.u, e.v):
                if x not in labels:
                    labels[x] = NodeLabel()
            cap = float(e.capacity)
            if not (cap >= 0.0 and np.isfinite(cap)):
                raise DomainError(f"edge {e.u!r}-{e.v!r} capacity must be finite and >= 0, got {e.capacity}")
            elist.append(Edge(e.u, e.v, cap, BoundKind(e.kind), e.channel))
        self._labels = MappingProxyType(labels)
        self._nodes = tuple(labels)
        self._index = MappingProxyType({n: i for i, n in enumerate(self._nodes)})
        self._edges = tuple(elist)
        adj = {n: [] for n in self._nodes}
        for i, e in enumerate(self._edges):
            adj[e.u].append(i)
            adj[e.v].append(i)
        self._adj = MappingProxyType({n: tuple(v) for n, v in adj.items()})

    # -- basic access
    @property
    def nodes(self) -> tuple:
        return self._nodes

    @property
    def edges(self) -> tuple:
        return self._edges

    @property
    def labels(self) -> Mapping:
        return self._labels

    def index(self, node) -> int:
        try:
            return self._index[node]
        except KeyError:
            raise NodeNotFound(node) from None

    def __contains__(self, node) -> bool:
        return node in self._index

    def __len__(self) -> int:
        return len(self._nodes)

    def incident(self, node) -> tuple:
        """Indices of edges touching ``node``."""
        self.index(node)
        return self._adj[node]

    def neighbors(self, node) -> list:
        return [self._edges[i].other(node) for i in self.incident(node)]

    def degree(self, node, within: Optional[set] = None) -> int:
        if within is None:
            return len(self.incident(node))
        return sum(1 for x in self.neighbors(node) if x in within)

    @property
    def kind(self) -> BoundKind:
        return _merge_kind(*(e.kind for e in self._edges)) if self._edges else BoundKind.EXACT

    # -- derived networks
    def subgraph(self, nodes: Iterable) -> "Network":
        keep = set(nodes)
        return Network(
            [(n, self._labels[n]) for n in self._nodes if n in keep],
            [e for e in self._edges if e.u in keep and e.v in keep],
        )

    def with_capacities(self, caps: Sequence[float], kinds: Optional[Sequence] = None) -> "Network":
        if len(caps) != len(self._edges):
            raise DomainError("capacity list length does not match edge count")
        kinds = kinds or [e.kind for e in self._edges]
        return Network(
            [(n, self._labels[n]) for n in self._nodes],
            [Edge(e.u, e.v, c, k, e.channel) for e, c, k in zip(self._edges, caps, kinds)],
        )

    def scaled(self, factor: float) -> "Network":
        return self.with_capacities([e.capacity * factor for e in self._edges])

    # -- serialisation
    def to_dict(self) -> dict:
        nodes = []
        for n in self._nodes:
            lab = self._labels[n]
            d = {"id": n}
            if lab.community is not None:
                d["community"] = lab.community
            if lab.backbone:
                d["backbone"] = True
            nodes.append(d)
        edges = []
        for e in self._edges:
            d = {"u": e.u, "v": e.v}
            if isinstance(e.channel, dict):
                d["channel"] = e.channel
            else:
                d["capacity"] = e.capacity
            if e.kind is not BoundKind.EXACT:
                d["kind"] = e.kind.value
            edges.append(d)
        return {"nodes": nodes, "edges": edges}

    @classmethod
    def from_dict(cls, data: Mapping) -> "Network":
        if not isinstance(data, Mapping):
            raise ConfigError("network JSON must be an object")
        unknown = set(data) - {"nodes", "edges"}
        if unknown:
            raise ConfigError(f"unknown network keys: {sorted(unknown)}")
        nodes = []
        for nd in data.get("nodes", []):
            if not isinstance(nd, Mapping) or "id" not in nd:
                raise ConfigError(f"malformed node entry: {nd!r}")
            bad = set(nd) - {"id", "community", "backbone"}
            if bad:
                raise ConfigError(f"unknown node keys: {sorted(bad)}")
            nodes.append((_hashable(nd["id"]), NodeLabel(_hashable(nd.get("community")), bool(nd.get("backbone", False)))))
        edges = []
        for ed in data.get("edges", []):
            if not isinstance(ed, Mapping) or "u" not in ed or "v" not in ed:
                raise ConfigError(f"malformed edge entry: {ed!r}")
            bad = set(ed) - {"u", "v", "capacity", "channel", "kind"}
            if bad:
                raise ConfigError(f"unknown edge keys: {sorted(bad)}")
            if ("capacity" in ed) == ("channel" in ed):
                raise ConfigError(f"edge {ed['u']!r}-{ed['v']!r} needs exactly one of capacity/channel")
            try:
                kind = BoundKind(ed.get("kind", BoundKind.EXACT.value))
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
            cap = ed.get("capacity", 0.0)
            if isinstance(cap, bool) or not isinstance(cap, (int, float)):
                raise ConfigError(f"edge capacity must be a number, got {cap!r}")
            edges.append(Edge(_hashable(ed["u"]), _hashable(ed["v"]), float(cap), kind, ed.get("channel")))
        try:
            return cls(nodes, edges)
        except DomainError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def load(cls, path) -> "Network":
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read network {path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        return cls.from_dict(data)

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)


def _hashable(x):
    return tuple(x) if isinstance(x, list) else x


@dataclass(frozen=True)
class Cut:
    A: frozenset
    B: frozenset
    cut_set: tuple
    multi_edge_capacity: float

    @property
    def single_edge_capacity(self) -> float:
        return max((e.capacity for e in self.cut_set), default=0.0)

    def check(self, net: Network, alpha, beta) -> None:
        """Raise AssertionError unless this is a valid alpha/beta cut of ``net``."""
        assert self.A | self.B == set(net.nodes)
        assert not (self.A & self.B)
        assert alpha in self.A and beta in self.B
        expect = {i for i, e in enumerate(net.edges) if (e.u in self.A) != (e.v in self.A)}
        got = {i for i, e in enumerate(net.edges) if any(e is c for c in self.cut_set)}
        assert expect == got
        assert abs(sum(e.capacity for e in self.cut_set) - self.multi_edge_capacity) <= 1e-12 * max(1.0, self.multi_edge_capacity)


def make_cut(net: Network, side_a: Iterable) -> Cut:
    A = frozenset(side_a)
    B = frozenset(net.nodes) - A
    cs = tuple(e for e in net.edges if (e.u in A) != (e.v in A))
    return Cut(A, B, cs, float(sum(e.capacity for e in cs)))


def _check_pair(net: Network, alpha, beta):
    ia, ib = net.index(alpha), net.index(beta)
    if ia == ib:
        raise DomainError("end-users must be distinct")
    return ia, ib


@dataclass(frozen=True)
class PathResult:
    value: float
    route: tuple
    kind: BoundKind = BoundKind.EXACT


@dataclass(frozen=True)
class FlowResult:
    value: float
    min_cut: Cut
    kind: BoundKind = BoundKind.EXACT


def single_path_capacity(net: Network, alpha, beta) -> PathResult:
    """Widest path between alpha and beta; zero-capacity edges are not traversed."""
    _check_pair(net, alpha, beta)
    width = {alpha: float("inf")}
    parent = {alpha: None}
    done = set()
    heap = [(-float("inf"), net.index(alpha), alpha)]
    while heap:
        negw, _, x = heapq.heappop(heap)
        if x in done:
            continue
        done.add(x)
        if x == beta:
            break
        for i in net.incident(x):
            e = net.edges[i]
            if e.capacity <= 0.0:
                continue
            y = e.other(x)
            if y in done:
                continue
            w = min(-negw, e.capacity)
            if w > width.get(y, 0.0):
                width[y] = w
                parent[y] = x
                heapq.heappush(heap, (-w, net.index(y), y))
    if beta not in done:
        return PathResult(0.0, (), net.kind)
    route = [beta]
    while parent[route[-1]] is not None:
        route.append(parent[route[-1]])
    return PathResult(width[beta], tuple(reversed(route)), net.kind)


class _Dinic:
    def __init__(self, n: int):
        self.n = n
        self.head = [[] for _ in range(n)]
        self.to: list = []
        self.cap: list = []

    def add_undirected(self, a: int, b: int, c: float):
        self.head[a].append(len(self.to))
        self.to.append(b)
        self.cap.append(c)
        self.head[b].append(len(self.to))
        self.to.append(a)
        self.cap.append(c)

    def add_directed(self, a: int, b: int, c: float):
        self.head[a].append(len(self.to))
        self.to.append(b)
        self.cap.append(c)
        self.head[b].append(len(self.to))
        self.to.append(a)
        self.cap.append(0.0)

    def _levels(self, s, t):
        level = [-1] * self.n
        level[s] = 0
        q = deque([s])
        while q:
            x = q.popleft()
            for a in self.head[x]:
                y = self.to[a]
                if level[y] < 0 and self.cap[a] > EPS:
                    level[y] = level[x] + 1
                    q.append(y)
        return level

    def maxflow(self, s: int, t: int) -> float:
        total = 0.0
        while True:
            level = self._levels(s, t)
            if level[t] < 0:
                return total
            it = [0] * self.n
            while True:
                pushed = self._augment(s, t, level, it)
                if pushed <= EPS:
                    break
                total += pushed

    def _augment(self, s, t, level, it) -> float:
        # Iterative DFS for one blocking-flow path.
        stack = [s]
        arcs = []
        while stack:
            x = stack[-1]
            if x == t:
                f = min(self.cap[a] for a in arcs)
                for a in arcs:
                    self.cap[a] -= f
                    self.cap[a ^ 1] += f
                return f
            advanced = False
            while it[x] < len(self.head[x]):
                a = self.head[x][it[x]]
                y = self.to[a]
                if self.cap[a] > EPS and level[y] == level[x] + 1:
                    stack.append(y)
                    arcs.append(a)
                    advanced = True
                    break
                it[x] += 1
            if not advanced:
                stack.pop()
                if arcs:
                    arcs.pop()
                    it[stack[-1]] += 1
        return 0.0

    def reachable(self, s: int) -> list:
        seen = [False] * self.n
        seen[s] = True
        q = deque([s])
        while q:
            x = q.popleft()
            for a in self.head[x]:
                y = self.to[a]
                if not seen[y] and self.cap[a] > EPS:
                    seen[y] = True
                    q.append(y)
        return seen


def flooding_capacity(net: Network, alpha, beta) -> FlowResult:
    """Max-flow value with the source-side-minimal minimum cut as witness."""
    ia, ib = _check_pair(net, alpha, beta)
    g = _Dinic(len(net))
    for e in net.edges:
        if e.capacity > 0.0:
            g.add_undirected(net.index(e.u), net.index(e.v), e.capacity)
    value = g.maxflow(ia, ib)
    seen = g.reachable(ia)
    cut = make_cut(net, [n for n in net.nodes if seen[net.index(n)]])
    return FlowResult(value, cut, net.kind)


def min_cut_between_sets(net: Network, sources: Iterable, sinks: Iterable, unit: bool = False) -> Cut:
    """Minimum cut separating two disjoint node sets (super-source/super-sink)."""
    src, snk = set(sources), set(sinks)
    if not src or not snk or src & snk:
        raise DomainError("source and sink sets must be nonempty and disjoint")
    n = len(net)
    g = _Dinic(n + 2)
    S, T = n, n + 1
    for e in net.edges:
        c = 1.0 if unit else e.capacity
        if c > 0.0:
            g.add_undirected(net.index(e.u), net.index(e.v), c)
    big = float(sum(1.0 if unit else e.capacity for e in net.edges)) + 1.0
    for x in src:
        g.add_directed(S, net.index(x), big)
    for x in snk:
        g.add_directed(net.index(x), T, big)
    g.maxflow(S, T)
    seen = g.reachable(S)
    return make_cut(net, [x for x in net.nodes if seen[net.index(x)]])


def brute_force_min_cut(net: Network, alpha, beta, mode: str = "multi") -> Cut:
    """Exhaustive minimum over all 2^(|P|-2) bipartitions.

    ``mode='multi'`` minimises the summed cut-set capacity, ``mode='single'``
    the largest single edge in the cut-set.  Ties go to the lexicographically
    smallest A-side in node order.
    """
    ia, ib = _check_pair(net, alpha, beta)
    if len(net) > BRUTE_FORCE_LIMIT:
        raise TooLarge(f"{len(net)} nodes exceeds the enumeration guard of {BRUTE_FORCE_LIMIT}")
    if mode not in ("multi", "single"):
        raise DomainError(f"mode must be 'multi' or 'single', got {mode!r}")
    free = [i for i in range(len(net)) if i not in (ia, ib)]
    masks = np.arange(1 << len(free), dtype=np.int64)
    side = np.zeros((len(net), masks.size), dtype=bool)
    side[ia] = True
    for bit, i in enumerate(free):
        side[i] = (masks >> bit) & 1
    score = np.zeros(masks.size)
    for e in net.edges:
        crosses = side[net.index(e.u)] != side[net.index(e.v)]
        if mode == "multi":
            score += np.where(crosses, e.capacity, 0.0)
        else:
            score = np.maximum(score, np.where(crosses, e.capacity, 0.0))
    best = score.min()
    ties = np.flatnonzero(score <= best)
    key = min(ties, key=lambda m: tuple(np.flatnonzero(side[:, m])))
    A = [net.nodes[i] for i in np.flatnonzero(side[:, key])]
    return make_cut(net, A)


def capacities_from_channels(net: Network, resolver=None) -> Network:
    """Stamp each channel-bearing edge with the capacity of its channel.

    Edges may carry a :class:`~qnetcap.optics.ChannelModel` or a JSON channel
    spec (resolved through ``resolver``, default :func:`qnetcap.config.channel_from_spec`).
    """
    if resolver is None:
        from .config import channel_from_spec as resolver
    caps, kinds = [], []
    for i, e in enumerate(net.edges):
        if e.channel is None:
            caps.append(e.capacity)
            kinds.append(e.kind)
            continue
        try:
            ch = resolver(e.channel) if isinstance(e.channel, Mapping) else e.channel
            cb = ch.capacity()
            val = float(cb)
        except ChannelError:
            raise
        except QnetcapError as exc:
            raise ChannelError(f"edge {i} ({e.u!r}-{e.v!r}): {exc}", edge=i) from exc
        caps.append(val)
        kinds.append(cb.kind)
    return net.with_capacities(caps, kinds)
