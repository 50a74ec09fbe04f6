"""Finite directed acyclic graphs of events.

Nodes are opaque string ids carrying a finite outcome alphabet; edges are
identified by their own string ids, so parallel edges between the same pair
of nodes are allowed.  All operations are pure functions on immutable graph
values.  Wherever an ordering matters (topological ties, enumeration output,
generated edge ids) it is fixed lexicographically so results are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

from .errors import (
    CycleError,
    NodeMismatch,
    SchemaError,
    SizeLimitExceeded,
    UnknownNode,
)
from ._config import DEFAULT_MAX_PAIR_NODES


class Edge(NamedTuple):
    id: str
    src: str
    dst: str


@dataclass(frozen=True)
class CausalGraph:
    """A finite DAG of events with per-node outcome alphabet sizes.

    ``nodes`` and ``edges`` keep their declared order; ``outcomes`` maps each
    node id to the size of its outcome alphabet (>= 1).  Instances are treated
    as immutable values.
    """

    nodes: tuple[str, ...]
    edges: tuple[Edge, ...]
    outcomes: dict[str, int] = field(compare=True)

    @classmethod
    def build(cls, nodes: Iterable[tuple[str, int]], edges: Iterable[tuple[str, str, str]]) -> "CausalGraph":
        """Construct from ``(node_id, outcome_size)`` and ``(edge_id, src, dst)`` triples."""
        node_list = list(nodes)
        return cls(
            nodes=tuple(n for n, _ in node_list),
            edges=tuple(Edge(*e) for e in edges),
            outcomes={n: int(k) for n, k in node_list},
        )

    def in_edges(self, v: str) -> list[Edge]:
        return [e for e in self.edges if e.dst == v]

    def out_edges(self, v: str) -> list[Edge]:
        return [e for e in self.edges if e.src == v]

    def parents(self, v: str) -> set[str]:
        return {e.src for e in self.edges if e.dst == v}

    def children(self, v: str) -> set[str]:
        return {e.dst for e in self.edges if e.src == v}

    def edge(self, edge_id: str) -> Edge:
        for e in self.edges:
            if e.id == edge_id:
                return e
        raise UnknownNode(f"no edge with id {edge_id!r}")


def validate(graph: CausalGraph) -> list[str]:
    """Check all graph invariants; returns a list of violations (empty means ok).

    Violations are data, not faults: each entry names the offending node or
    edge.  Cycles are reported with one explicit witness path.
    """
    violations = []
    seen = set()
    for n in graph.nodes:
        if n in seen:
            violations.append(f"duplicate node id {n!r}")
        seen.add(n)
    node_set = set(graph.nodes)
    edge_ids = set()
    for e in graph.edges:
        if e.id in edge_ids:
            violations.append(f"duplicate edge id {e.id!r}")
        edge_ids.add(e.id)
        if e.src not in node_set:
            violations.append(f"edge {e.id!r}: unknown source node {e.src!r}")
        if e.dst not in node_set:
            violations.append(f"edge {e.id!r}: unknown target node {e.dst!r}")
    for n in graph.nodes:
        size = graph.outcomes.get(n)
        if size is None:
            violations.append(f"node {n!r}: missing outcome alphabet")
        elif size < 1:
            violations.append(f"node {n!r}: outcome alphabet size {size} < 1")
    cycle = _find_cycle(graph)
    if cycle is not None:
        violations.append("cycle: " + "->".join(cycle))
    return violations


def _adjacency(graph: CausalGraph) -> dict[str, list[str]]:
    adj: dict[str, list[str]] = {n: [] for n in graph.nodes}
    for e in graph.edges:
        if e.src in adj and e.dst in adj:
            adj[e.src].append(e.dst)
    return adj


def _find_cycle(graph: CausalGraph) -> list[str] | None:
    adj = _adjacency(graph)
    WHITE, GREY, BLACK = 0, 1, 2
    color = {n: WHITE for n in graph.nodes}
    stack_path: list[str] = []

    def dfs(start: str) -> list[str] | None:
        stack = [(start, iter(sorted(adj[start])))]
        color[start] = GREY
        stack_path.append(start)
        while stack:
            node, it = stack[-1]
            advanced = False
            for nxt in it:
                if color[nxt] == GREY:
                    i = stack_path.index(nxt)
                    return stack_path[i:] + [nxt]
                if color[nxt] == WHITE:
                    color[nxt] = GREY
                    stack_path.append(nxt)
                    stack.append((nxt, iter(sorted(adj[nxt]))))
                    advanced = True
                    break
            if not advanced:
                stack.pop()
                stack_path.pop()
                color[node] = BLACK
        return None

    for n in sorted(graph.nodes):
        if color[n] == WHITE:
            found = dfs(n)
            if found is not None:
                return found
    return None


def topological_order(graph: CausalGraph) -> list[str]:
    """Nodes ordered so every edge goes forward, layer by layer.

    Each layer holds the nodes whose remaining dependencies are exhausted and
    is emitted in lexicographic order, so sources come before everything they
    feed and the output is deterministic.
    """
    indeg = {n: 0 for n in graph.nodes}
    adj = _adjacency(graph)
    for e in graph.edges:
        indeg[e.dst] += 1
    layer = sorted(n for n in graph.nodes if indeg[n] == 0)
    order = []
    while layer:
        nxt = []
        for n in layer:
            order.append(n)
            for c in adj[n]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    nxt.append(c)
        layer = sorted(nxt)
    if len(order) != len(graph.nodes):
        raise CycleError("graph contains a directed cycle")
    return order


def all_topological_orders(graph: CausalGraph, limit: int = 100) -> list[list[str]]:
    """Up to ``limit`` distinct topological orders, in lexicographic order."""
    adj = _adjacency(graph)
    indeg = {n: 0 for n in graph.nodes}
    for e in graph.edges:
        indeg[e.dst] += 1
    out: list[list[str]] = []
    current: list[str] = []

    def rec():
        if len(out) >= limit:
            return
        if len(current) == len(graph.nodes):
            out.append(list(current))
            return
        for n in sorted(graph.nodes):
            if indeg[n] == 0 and n not in current:
                current.append(n)
                for c in adj[n]:
                    indeg[c] -= 1
                rec()
                for c in adj[n]:
                    indeg[c] += 1
                current.pop()
                if len(out) >= limit:
                    return

    rec()
    if not out:
        raise CycleError("graph contains a directed cycle")
    return out


def causal_past(graph: CausalGraph, seed: Iterable[str]) -> frozenset[str]:
    """Union of the seed nodes and everything with a directed path into them.

    Every node is a member of its own causal past; the result is ancestral,
    so the operation is idempotent and monotone in the seed.
    """
    node_set = set(graph.nodes)
    todo = list(seed)
    for n in todo:
        if n not in node_set:
            raise UnknownNode(f"unknown node {n!r}")
    preds: dict[str, set[str]] = {n: set() for n in graph.nodes}
    for e in graph.edges:
        preds[e.dst].add(e.src)
    result: set[str] = set()
    while todo:
        n = todo.pop()
        if n in result:
            continue
        result.add(n)
        todo.extend(preds[n])
    return frozenset(result)


def _past_masks(graph: CausalGraph) -> list[int]:
    """Bitmask of causal_past({v}) for each node, indexed by position in graph.nodes."""
    index = {n: i for i, n in enumerate(graph.nodes)}
    preds: dict[str, set[str]] = {n: set() for n in graph.nodes}
    for e in graph.edges:
        preds[e.dst].add(e.src)
    masks = [0] * len(graph.nodes)
    for n in topological_order(graph):
        m = 1 << index[n]
        for p in preds[n]:
            m |= masks[index[p]]
        masks[index[n]] = m
    return masks


def ancestral_sets(graph: CausalGraph) -> list[frozenset[str]]:
    """All node sets equal to their own causal past (including the empty set)."""
    n = len(graph.nodes)
    if n > 20:
        raise SizeLimitExceeded(f"{n} nodes is too many for ancestral-set enumeration")
    masks = _past_masks(graph)
    out = []
    for sub in range(1 << n):
        ok = True
        for i in range(n):
            if sub >> i & 1 and masks[i] & ~sub:
                ok = False
                break
        if ok:
            out.append(frozenset(graph.nodes[i] for i in range(n) if sub >> i & 1))
    return out


def maximal_disjoint_past_pairs(
    graph: CausalGraph, limit: int = DEFAULT_MAX_PAIR_NODES
) -> list[tuple[frozenset[str], frozenset[str]]]:
    """All maximal unordered pairs of nonempty node sets with disjoint causal pasts.

    Maximality means no node can be added to either side while keeping the
    pasts disjoint; it forces both sides to be ancestral.  Enumeration walks
    the ancestral sets, computes for each one the largest compatible partner
    ``{v : past(v) disjoint from U}``, and keeps the mutually-maximal pairs.
    Worst case is exponential in the node count, hence the hard guard.
    """
    n = len(graph.nodes)
    if n > limit:
        raise SizeLimitExceeded(f"{n} nodes exceeds the pair-enumeration limit {limit}")
    masks = _past_masks(graph)
    full = (1 << n) - 1

    def partner(mask: int) -> int:
        out = 0
        for i in range(n):
            if not masks[i] & mask:
                out |= 1 << i
        return out

    ancestral = []
    for sub in range(1, full + 1):
        ok = True
        for i in range(n):
            if sub >> i & 1 and masks[i] & ~sub:
                ok = False
                break
        if ok:
            ancestral.append(sub)

    pairs: set[tuple[int, int]] = set()
    for u in ancestral:
        w = partner(u)
        if w == 0:
            continue
        if partner(w) == u:
            pairs.add((min(u, w), max(u, w)))

    def unmask(mask: int) -> frozenset[str]:
        return frozenset(graph.nodes[i] for i in range(n) if mask >> i & 1)

    out = []
    for u, w in pairs:
        su, sw = unmask(u), unmask(w)
        if sorted(sw) < sorted(su):
            su, sw = sw, su
        out.append((su, sw))
    out.sort(key=lambda p: (sorted(p[0]), sorted(p[1])))
    return out


def transitive_closure(graph: CausalGraph) -> CausalGraph:
    """Graph with an added edge ``u->w#tc`` for every indirect-only causal link."""
    have = {(e.src, e.dst) for e in graph.edges}
    index = {v: i for i, v in enumerate(graph.nodes)}
    masks = _past_masks(graph)
    new_edges = list(graph.edges)
    for u in sorted(graph.nodes):
        for w in sorted(graph.nodes):
            if u == w or (u, w) in have:
                continue
            if masks[index[w]] >> index[u] & 1:
                new_edges.append(Edge(f"{u}->{w}#tc", u, w))
    return CausalGraph(nodes=graph.nodes, edges=tuple(new_edges), outcomes=dict(graph.outcomes))


def poset_equal(g1: CausalGraph, g2: CausalGraph) -> bool:
    """True iff the two graphs induce identical reachability relations."""
    if set(g1.nodes) != set(g2.nodes):
        raise NodeMismatch("graphs are over different node sets")

    def relation(g: CausalGraph) -> set[tuple[str, str]]:
        idx = {v: i for i, v in enumerate(g.nodes)}
        masks = _past_masks(g)
        rel = set()
        for w in g.nodes:
            m = masks[idx[w]]
            for i, u in enumerate(g.nodes):
                if m >> i & 1 and u != w:
                    rel.add((u, w))
        return rel

    return relation(g1) == relation(g2)


def graph_to_dict(graph: CausalGraph) -> dict:
    return {
        "nodes": [{"id": n, "outcomes": graph.outcomes[n]} for n in graph.nodes],
        "edges": [{"id": e.id, "src": e.src, "dst": e.dst} for e in graph.edges],
    }


def graph_from_dict(data: dict) -> CausalGraph:
    """Parse the graph JSON schema; unknown fields are rejected."""
    if not isinstance(data, dict) or set(data) != {"nodes", "edges"}:
        raise SchemaError(f"malformed graph JSON near {data!r}")
    nodes = []
    for item in data["nodes"]:
        if not isinstance(item, dict) or set(item) != {"id", "outcomes"}:
            raise SchemaError(f"malformed graph JSON near {item!r}")
        nodes.append((str(item["id"]), int(item["outcomes"])))
    edges = []
    for item in data["edges"]:
        if not isinstance(item, dict) or set(item) != {"id", "src", "dst"}:
            raise SchemaError(f"malformed graph JSON near {item!r}")
        edges.append((str(item["id"]), str(item["src"]), str(item["dst"])))
    return CausalGraph.build(nodes, edges)
