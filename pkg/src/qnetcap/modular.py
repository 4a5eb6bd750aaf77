"""Modular networks: disjoint user communities hung off a regular backbone.

Covers the quotient star, the three cut classes (global-community,
local-community, backbone), collective node isolation and the threshold
capacities that make community isolation the minimum cut.
"""

from __future__ import annotations

import itertools
import logging
import random
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping, Optional, Sequence

from .errors import DomainError, NodeNotFound, NotRegular, SameCommunity, SpecMismatch, TooLarge
from .network import (
    BRUTE_FORCE_LIMIT,
    Cut,
    Network,
    NodeLabel,
    _Dinic,
    flooding_capacity,
    make_cut,
    min_cut_between_sets,
)

log = logging.getLogger(__name__)

BACKBONE = "backbone"


class ModularNetwork:
    """A network partitioned into communities and one backbone.

    Built from node labels by default; ``communities`` and ``backbone`` can be
    passed explicitly to override them.
    """

    def __init__(self, base: Network, communities: Optional[Mapping[Hashable, Iterable]] = None,
                 backbone: Optional[Iterable] = None):
        self.base = base
        if communities is None:
            comm: dict = {}
            for n, lab in base.labels.items():
                if lab.community is not None and not lab.backbone:
                    comm.setdefault(lab.community, set()).add(n)
            communities = comm
        if backbone is None:
            backbone = [n for n, lab in base.labels.items() if lab.backbone]
        self.communities = {c: frozenset(v) for c, v in communities.items()}
        self.backbone = frozenset(backbone)
        self._member = {}
        for c, members in self.communities.items():
            for n in members:
                base.index(n)
                if n in self._member:
                    raise DomainError(f"node {n!r} belongs to two communities")
                if n in self.backbone:
                    raise DomainError(f"node {n!r} is both community and backbone")
                self._member[n] = c
        for n in self.backbone:
            base.index(n)
        missing = [n for n in base.nodes if n not in self._member and n not in self.backbone]
        if missing:
            raise DomainError(f"nodes with neither community nor backbone role: {missing[:5]!r}")
        if not self.backbone:
            raise DomainError("modular network needs a nonempty backbone")
        for e in base.edges:
            cu, cv = self._member.get(e.u), self._member.get(e.v)
            if cu is not None and cv is not None and cu != cv:
                raise DomainError(f"edge {e.u!r}-{e.v!r} links two communities directly")

    def community_of(self, node):
        self.base.index(node)
        if node not in self._member:
            raise DomainError(f"node {node!r} is on the backbone, not in a community")
        return self._member[node]

    def intercommunity_edges(self, c) -> tuple:
        members = self.communities[c]
        return tuple(e for e in self.base.edges
                     if (e.u in members and e.v in self.backbone) or (e.v in members and e.u in self.backbone))

    def community_attachments(self, c) -> frozenset:
        """Community nodes with a direct backbone link."""
        members = self.communities[c]
        return frozenset(x for e in self.intercommunity_edges(c) for x in (e.u, e.v) if x in members)

    def backbone_attachments(self, c) -> frozenset:
        """Backbone nodes with a direct link into community ``c``."""
        return frozenset(x for e in self.intercommunity_edges(c) for x in (e.u, e.v) if x in self.backbone)

    def backbone_graph(self) -> Network:
        return self.base.subgraph(self.backbone)

    def community_graph(self, c) -> Network:
        return self.base.subgraph(self.communities[c])


def quotient_graph(mod: ModularNetwork) -> Network:
    """Star with one leaf per community around a single backbone node."""
    nodes = [(BACKBONE, NodeLabel(None, True))] + [(c, NodeLabel(c, False)) for c in mod.communities]
    edges = []
    for c in mod.communities:
        es = mod.intercommunity_edges(c)
        if es:
            edges.append((c, BACKBONE, sum(e.capacity for e in es)))
    return Network(nodes, edges)


def _end_user_communities(mod: ModularNetwork, alpha, beta):
    ca, cb = mod.community_of(alpha), mod.community_of(beta)
    if ca == cb:
        raise SameCommunity(f"{alpha!r} and {beta!r} are both in community {ca!r}")
    return ca, cb


def global_community_capacity(mod: ModularNetwork, alpha, beta) -> float:
    ca, cb = _end_user_communities(mod, alpha, beta)
    return min(sum(e.capacity for e in mod.intercommunity_edges(c)) for c in (ca, cb))


def community_isolation_cuts(mod: ModularNetwork, alpha, beta) -> list:
    """Both isolation cuts, cheapest first (both are reported on a tie)."""
    ca, cb = _end_user_communities(mod, alpha, beta)
    cuts = [make_cut(mod.base, mod.communities[ca]),
            make_cut(mod.base, set(mod.base.nodes) - mod.communities[cb])]
    return sorted(cuts, key=lambda c: c.multi_edge_capacity)


def local_community_capacity(mod: ModularNetwork, j) -> float:
    """Cheapest cut made of community edges (plus j's own backbone links) isolating j.

    The outside world is collapsed into one sink that every other attachment
    node reaches for free.
    """
    c = mod.community_of(j)
    members = sorted(mod.communities[c], key=mod.base.index)
    idx = {n: i for i, n in enumerate(members)}
    sink = len(members)
    g = _Dinic(sink + 1)
    for e in mod.base.edges:
        if e.u in idx and e.v in idx:
            g.add_undirected(idx[e.u], idx[e.v], e.capacity)
    inf = float(sum(e.capacity for e in mod.base.edges)) + 1.0
    for e in mod.intercommunity_edges(c):
        x = e.u if e.u in idx else e.v
        g.add_undirected(idx[x], sink, e.capacity if x == j else inf)
    return g.maxflow(idx[j], sink)


def intra_community_bounds(mod: ModularNetwork, i, i2) -> tuple:
    """(lower, upper) sandwich on the full-network flooding capacity of two same-community users."""
    c = mod.community_of(i)
    if mod.community_of(i2) != c:
        raise DomainError("users must share a community")
    inner = flooding_capacity(mod.community_graph(c), i, i2).value
    outer = sum(e.capacity for e in mod.intercommunity_edges(c))
    return inner, inner + outer


# -- collective node isolation

def _check_regular(net: Network, k: int) -> None:
    bad = [n for n in net.nodes if net.degree(n) != k]
    if bad:
        raise NotRegular(f"{len(bad)} node(s) lack degree {k}, e.g. {bad[0]!r} has {net.degree(bad[0])}")


def _targets(net: Network, targets: Iterable) -> frozenset:
    I = frozenset(targets)
    if not I:
        raise DomainError("target set must be nonempty")
    for x in I:
        net.index(x)
    return I


def neighbour_share(net: Network, targets: Iterable) -> dict:
    """F_I(x): number of targets adjacent to each non-target neighbour x."""
    I = _targets(net, targets)
    out: dict = {}
    for i in sorted(I, key=net.index):
        for x in net.neighbors(i):
            if x not in I:
                out[x] = out.get(x, 0) + 1
    return out


def h_min_formula(k: int, targets: Iterable, net: Network) -> int:
    """k|I| minus shared-edge copies minus neighbour absorption savings."""
    I = _targets(net, targets)
    _check_regular(net, k)
    s_e = sum(1 for i in I for x in net.neighbors(i) if x in I)
    s_n = sum(max(0, 2 * f - k) for f in neighbour_share(net, I).values())
    return k * len(I) - s_e - s_n


def isolation_oracle(net: Network, targets: Iterable) -> Optional[int]:
    """Fewest edges whose removal isolates I together with any subset of its neighbours.

    Unit-capacity max-flow from I to every node at distance two or more.
    Returns None when no such node exists (the question is then vacuous).
    """
    I = _targets(net, targets)
    near = set(I) | {x for i in I for x in net.neighbors(i)}
    far = [x for x in net.nodes if x not in near]
    if not far:
        return None
    return len(min_cut_between_sets(net, I, far, unit=True).cut_set)


def h_min(k: int, targets: Iterable, net: Network) -> int:
    """Collective node isolation number.

    The closed form is cross-checked against the max-flow oracle; when they
    disagree (typically dense target layouts whose absorbed neighbours are
    themselves adjacent) the oracle wins and the mismatch is logged.
    """
    value = h_min_formula(k, targets, net)
    oracle = isolation_oracle(net, targets)
    if oracle is not None and oracle != value:
        log.warning("h_min closed form %d disagrees with isolation oracle %d for %d targets; using oracle",
                    value, oracle, len(frozenset(targets)))
        return oracle
    return value


def backbone_min_cut(mod: ModularNetwork, ca, cb) -> int:
    """Fewest backbone edges separating the two communities' attachment sets."""
    A, B = mod.backbone_attachments(ca), mod.backbone_attachments(cb)
    if A & B:
        return 0
    bb = mod.backbone_graph()
    return len(min_cut_between_sets(bb, A, B, unit=True).cut_set)


# -- ideal modular networks and link-capacity thresholds

@dataclass(frozen=True)
class IdealModularSpec:
    k_b: int
    k_c: Mapping[Hashable, int]
    k_cb: Mapping[Hashable, int] = field(default_factory=dict)


def edge_connectivity(net: Network) -> int:
    """Smallest unit cut over all node pairs (all-pairs max-flow; fine for small graphs)."""
    nodes = net.nodes
    if len(nodes) < 2:
        return 0
    best = None
    s = nodes[0]
    # global edge connectivity = min over t of local connectivity(s, t)
    for t in nodes[1:]:
        v = len(min_cut_between_sets(net, [s], [t], unit=True).cut_set)
        best = v if best is None else min(best, v)
    return best


def edge_connectivity_bruteforce(net: Network) -> int:
    n = len(net)
    if n > BRUTE_FORCE_LIMIT:
        raise TooLarge(f"{n} nodes exceeds the enumeration guard of {BRUTE_FORCE_LIMIT}")
    if n < 2:
        return 0
    nodes = net.nodes
    best = None
    for r in range(1, n):
        for A in itertools.combinations(nodes[1:], r - 1):
            side = {nodes[0], *A}
            v = sum(1 for e in net.edges if (e.u in side) != (e.v in side))
            best = v if best is None else min(best, v)
    return best


@dataclass
class IdealReport:
    backbone_regular: bool
    backbone_degrees: dict
    k_c_true: dict
    k_cb_true: dict
    mismatches: list

    @property
    def ok(self) -> bool:
        return not self.mismatches


def verify_ideal(mod: ModularNetwork, spec: IdealModularSpec) -> IdealReport:
    bb = mod.backbone_graph()
    degs = {n: bb.degree(n) for n in bb.nodes}
    mism = []
    regular = all(d == spec.k_b for d in degs.values())
    if not regular:
        mism.append(f"backbone is not {spec.k_b}-regular")
    k_true, kcb_true = {}, {}
    for c in mod.communities:
        g = mod.community_graph(c)
        k_true[c] = edge_connectivity_bruteforce(g) if len(g) <= 12 else edge_connectivity(g)
        kcb_true[c] = len(mod.intercommunity_edges(c))
        if c in spec.k_c and spec.k_c[c] != k_true[c]:
            mism.append(f"community {c!r}: declared k_c={spec.k_c[c]}, found {k_true[c]}")
        if c in spec.k_cb and spec.k_cb[c] != kcb_true[c]:
            mism.append(f"community {c!r}: declared k_cb={spec.k_cb[c]}, found {kcb_true[c]}")
    return IdealReport(regular, degs, k_true, kcb_true, mism)


@dataclass(frozen=True)
class Thresholds:
    global_community: float
    c_min_community: dict
    c_min_backbone: float
    h_min_star: int
    community_ok: bool
    backbone_ok: bool

    @property
    def satisfied(self) -> bool:
        return self.community_ok and self.backbone_ok


def theorem1_thresholds(mod: ModularNetwork, spec: IdealModularSpec, alpha, beta) -> Thresholds:
    """Single-edge thresholds C/k_c per end-user community and C/H* on the backbone."""
    report = verify_ideal(mod, spec)
    ca, cb = _end_user_communities(mod, alpha, beta)
    for c in (ca, cb):
        if c not in spec.k_c:
            raise SpecMismatch(f"no k_c declared for community {c!r}")
    if not report.ok:
        raise SpecMismatch("; ".join(report.mismatches))
    C = global_community_capacity(mod, alpha, beta)
    bb = mod.backbone_graph()
    h_star = min(h_min(spec.k_b, mod.backbone_attachments(c), bb) for c in (ca, cb))
    c_comm = {c: C / spec.k_c[c] for c in (ca, cb)}
    c_bb = C / h_star
    tol = 1e-12 * max(1.0, C)
    comm_ok = all(e.capacity >= c_comm[c] - tol
                  for c in (ca, cb) for e in mod.base.edges
                  if e.u in mod.communities[c] and e.v in mod.communities[c])
    bb_ok = all(e.capacity >= c_bb - tol for e in bb.edges)
    return Thresholds(C, c_comm, c_bb, h_star, comm_ok, bb_ok)


# -- generators

def torus(rows: int, cols: int, capacity: float = 1.0, prefix: str = "b") -> Network:
    """Manhattan torus; 4-regular once both sides are at least 3."""
    if rows < 3 or cols < 3:
        raise DomainError("torus sides must be >= 3 to stay simple and 4-regular")
    name = lambda r, c: f"{prefix}{r}_{c}"
    nodes = [(name(r, c), NodeLabel(None, True)) for r in range(rows) for c in range(cols)]
    edges = []
    for r in range(rows):
        for c in range(cols):
            edges.append((name(r, c), name((r + 1) % rows, c), capacity))
            edges.append((name(r, c), name(r, (c + 1) % cols), capacity))
    return Network(nodes, edges)


def grid(rows: int, cols: int, capacity: float = 1.0, prefix: str = "b") -> Network:
    """Open Manhattan grid (boundary nodes have lower degree)."""
    name = lambda r, c: f"{prefix}{r}_{c}"
    nodes = [(name(r, c), NodeLabel(None, True)) for r in range(rows) for c in range(cols)]
    edges = []
    for r in range(rows):
        for c in range(cols):
            if r + 1 < rows:
                edges.append((name(r, c), name(r + 1, c), capacity))
            if c + 1 < cols:
                edges.append((name(r, c), name(r, c + 1), capacity))
    return Network(nodes, edges)


def complete_graph(n: int, capacity: float = 1.0, prefix: str = "k") -> Network:
    nodes = [f"{prefix}{i}" for i in range(n)]
    return Network(nodes, [(a, b, capacity) for a, b in itertools.combinations(nodes, 2)])


def star_graph(leaves: int, capacity: float = 1.0, prefix: str = "s") -> Network:
    hub = f"{prefix}0"
    return Network([hub] + [f"{prefix}{i}" for i in range(1, leaves + 1)],
                   [(hub, f"{prefix}{i}", capacity) for i in range(1, leaves + 1)])


def rook_graph(n: int = 3, prefix: str = "r") -> Network:
    """K_n x K_n; for n=3 it is 4-regular with every edge in exactly one triangle."""
    name = lambda r, c: f"{prefix}{r}_{c}"
    cells = [(r, c) for r in range(n) for c in range(n)]
    edges = [(name(*a), name(*b), 1.0) for a, b in itertools.combinations(cells, 2) if a[0] == b[0] or a[1] == b[1]]
    return Network([name(*x) for x in cells], edges)


def fig2_layout(which: str, size: int = 9) -> tuple:
    """(torus, targets) for the sparse, neighbour-sharing and single-node layouts."""
    net = torus(size, size)
    m = size // 2
    node = lambda r, c: f"b{r % size}_{c % size}"
    if which == "sparse":
        targets = [node(m - 2, m - 2), node(m - 2, m + 2), node(m + 2, m - 2), node(m + 2, m + 2)]
    elif which == "shared":
        targets = [node(m - 1, m), node(m + 1, m), node(m, m - 1), node(m, m + 1)]
    elif which == "single":
        targets = [node(m, m)]
    else:
        raise DomainError(f"unknown layout {which!r}; choose sparse, shared or single")
    return net, targets


@dataclass
class RandomIdeal:
    mod: ModularNetwork
    spec: IdealModularSpec
    alpha: Hashable
    beta: Hashable


def _random_community(rng: random.Random, n: int, name: str) -> tuple:
    """Connected random graph: a random spanning tree plus extra chords."""
    nodes = [f"{name}_{i}" for i in range(n)]
    order = nodes[:]
    rng.shuffle(order)
    edges = {tuple(sorted((order[i], order[rng.randrange(i)]))) for i in range(1, n)}
    extra = rng.randint(0, n * (n - 1) // 2 - len(edges))
    pool = [p for p in itertools.combinations(nodes, 2) if p not in edges]
    edges |= set(rng.sample(pool, min(extra, len(pool))))
    return nodes, sorted(edges)


def random_ideal_network(rng: random.Random, satisfy: bool = True, slack: float = 2.0) -> RandomIdeal:
    """Random ideal modular network on a torus backbone.

    Every community links to the backbone through distinct attachment nodes,
    each carrying the same intercommunity capacity.  With ``satisfy`` the
    community and backbone edges are drawn at or above their thresholds.
    """
    while True:
        rows, cols = rng.choice([(3, 3), (3, 4), (4, 4), (3, 5), (4, 5), (5, 5)])
        bb = torus(rows, cols)
        n_comm = rng.randint(2, 4)
        comms, cedges = {}, []
        for ci in range(n_comm):
            nodes, edges = _random_community(rng, rng.randint(4, 8), f"c{ci}")
            comms[f"c{ci}"] = nodes
            cedges.append(edges)
        bnodes = list(bb.nodes)
        rng.shuffle(bnodes)
        attach_b, inter = {}, []
        ok = True
        for ci, c in enumerate(comms):
            m = rng.randint(1, 3)
            if len(bnodes) < m:
                ok = False
                break
            bsel = [bnodes.pop() for _ in range(m)]
            csel = rng.sample(comms[c], m)
            per = rng.uniform(0.2, 1.0)
            attach_b[c] = bsel
            inter += [(x, y, per) for x, y in zip(csel, bsel)]
        if ok:
            break
    labels = [(n, NodeLabel(None, True)) for n in bb.nodes]
    for c, nodes in comms.items():
        labels += [(n, NodeLabel(c, False)) for n in nodes]
    skeleton_edges = [(e.u, e.v, 1.0) for e in bb.edges] + [(u, v, 1.0) for es in cedges for u, v in es] + inter
    mod0 = ModularNetwork(Network(labels, skeleton_edges))
    names = list(comms)
    ca, cb = rng.sample(names, 2)
    alpha, beta = rng.choice(comms[ca]), rng.choice(comms[cb])
    k_c = {c: edge_connectivity(mod0.community_graph(c)) for c in names}
    spec = IdealModularSpec(4, k_c, {c: len(mod0.intercommunity_edges(c)) for c in names})
    C = global_community_capacity(mod0, alpha, beta)
    bb0 = mod0.backbone_graph()
    h_star = min(h_min(4, mod0.backbone_attachments(c), bb0) for c in (ca, cb))
    thr_b = C / h_star
    edges = []
    for e in mod0.base.edges:
        cu = mod0._member.get(e.u)
        cv = mod0._member.get(e.v)
        if cu is None and cv is None:
            lo = thr_b if satisfy else 0.05 * thr_b
            edges.append((e.u, e.v, lo * rng.uniform(1.0, slack)))
        elif cu is not None and cv is not None:
            lo = C / k_c[cu] if cu in (ca, cb) else C
            edges.append((e.u, e.v, lo * rng.uniform(1.0, slack)))
        else:
            edges.append((e.u, e.v, e.capacity))
    return RandomIdeal(ModularNetwork(Network(labels, edges)), spec, alpha, beta)


def degrade_backbone_edge(mod: ModularNetwork, threshold: float, rng: random.Random, factor: float = 0.5) -> ModularNetwork:
    """Copy with one random backbone edge set to ``factor * threshold``."""
    idx = [i for i, e in enumerate(mod.base.edges) if e.u in mod.backbone and e.v in mod.backbone]
    pick = rng.choice(idx)
    caps = [factor * threshold if i == pick else e.capacity for i, e in enumerate(mod.base.edges)]
    return ModularNetwork(mod.base.with_capacities(caps), mod.communities, mod.backbone)
