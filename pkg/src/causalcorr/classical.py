"""Edge hidden-variable models with stochastic gates at the nodes.

Every edge carries a finite hidden alphabet and every node a gate: a
conditional distribution of (outcome, outgoing hidden values) given the
incoming hidden values.  Gate tensors are laid out incoming-values-major,
then the outcome axis, then outgoing values, with edges always ordered
lexicographically by edge id so that layouts are reproducible.

Besides evaluation, this module implements three structural rewrites that
preserve the evaluated joint: pushing gate randomness back into an enlarged
parent edge (making all non-root gates deterministic), adding a trivial
one-letter edge along an indirect causal link, and rerouting such a direct
edge through an intermediate relay node.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import graph as cg
from .dist import JointDistribution
from .errors import (
    InvalidModel,
    MissingRelayPath,
    NotAncestral,
    SchemaError,
    SizeLimitExceeded,
    UnknownNode,
    WouldCreateCycle,
)
from ._config import DEFAULT_MAX_PUSHBACK_ALPHABET, max_state_space

GATE_NORM_TOL = 1e-12


@dataclass(frozen=True)
class Gate:
    """Stochastic gate of one node.

    ``tensor`` has shape (incoming alphabet sizes, outcome size, outgoing
    alphabet sizes); every incoming-values slice sums to 1.
    """

    in_edges: tuple[str, ...]
    out_edges: tuple[str, ...]
    tensor: np.ndarray

    @property
    def deterministic(self) -> bool:
        t = self.tensor
        return bool(np.all((t == 0.0) | (t == 1.0)))


@dataclass
class ClassicalModel:
    graph: cg.CausalGraph
    edge_alphabet: dict[str, int]
    gates: dict[str, Gate]


def sorted_in_ids(graph: cg.CausalGraph, v: str) -> tuple[str, ...]:
    return tuple(sorted(e.id for e in graph.in_edges(v)))


def sorted_out_ids(graph: cg.CausalGraph, v: str) -> tuple[str, ...]:
    return tuple(sorted(e.id for e in graph.out_edges(v)))


def gate_shape(model: ClassicalModel, v: str) -> tuple[int, ...]:
    ins = tuple(model.edge_alphabet[e] for e in sorted_in_ids(model.graph, v))
    outs = tuple(model.edge_alphabet[e] for e in sorted_out_ids(model.graph, v))
    return ins + (model.graph.outcomes[v],) + outs


def make_gate(model_graph: cg.CausalGraph, edge_alphabet: dict[str, int], v: str, tensor) -> Gate:
    """Gate for node ``v`` with the canonical (lexicographic) edge ordering."""
    ins = sorted_in_ids(model_graph, v)
    outs = sorted_out_ids(model_graph, v)
    shape = (
        tuple(edge_alphabet[e] for e in ins)
        + (model_graph.outcomes[v],)
        + tuple(edge_alphabet[e] for e in outs)
    )
    return Gate(ins, outs, np.asarray(tensor, dtype=float).reshape(shape))


def validate_model(model: ClassicalModel) -> list[str]:
    """Check model invariants; returns a list of violations (empty means ok)."""
    violations = list(cg.validate(model.graph))
    for e in model.graph.edges:
        size = model.edge_alphabet.get(e.id)
        if size is None:
            violations.append(f"edge {e.id!r}: missing hidden alphabet")
        elif size < 1:
            violations.append(f"edge {e.id!r}: hidden alphabet size {size} < 1")
    for v in model.graph.nodes:
        gate = model.gates.get(v)
        if gate is None:
            violations.append(f"node {v!r}: missing gate")
            continue
        ins = sorted_in_ids(model.graph, v)
        outs = sorted_out_ids(model.graph, v)
        if gate.in_edges != ins or gate.out_edges != outs:
            violations.append(
                f"node {v!r}: gate wired to {gate.in_edges}/{gate.out_edges}, expected {ins}/{outs}"
            )
            continue
        try:
            expected = gate_shape(model, v)
        except KeyError:
            continue
        if gate.tensor.shape != expected:
            violations.append(
                f"node {v!r}: gate tensor shape {gate.tensor.shape}, expected {expected}"
            )
            continue
        if np.any(gate.tensor < 0):
            violations.append(f"node {v!r}: negative gate entry {float(gate.tensor.min())}")
        n_in = len(ins)
        sums = gate.tensor.sum(axis=tuple(range(n_in, gate.tensor.ndim)))
        dev = float(np.abs(sums - 1.0).max()) if sums.size else abs(float(sums) - 1.0)
        if dev > GATE_NORM_TOL:
            violations.append(f"node {v!r}: gate rows deviate from 1 by {dev}")
    return violations


def _require_valid(model: ClassicalModel) -> None:
    problems = validate_model(model)
    if problems:
        raise InvalidModel("; ".join(problems))


def _state_space(model: ClassicalModel) -> int:
    total = 1
    for v in model.graph.nodes:
        total *= model.graph.outcomes[v]
    for e in model.graph.edges:
        total *= model.edge_alphabet[e.id]
    return total


def _gate_operand(gate: Gate, edge_index: dict[str, int], o_index: int):
    """Gate tensor with indexed-edge subscripts; edges absent from the index
    (trivial or outside the contracted subgraph) are squeezed away."""
    keep_in = [i for i, e in enumerate(gate.in_edges) if e in edge_index]
    keep_out = [i for i, e in enumerate(gate.out_edges) if e in edge_index]
    n_in = len(gate.in_edges)
    wanted = set(keep_in) | {n_in} | {n_in + 1 + j for j in keep_out}
    squeeze = tuple(i for i in range(gate.tensor.ndim) if i not in wanted)
    tensor = np.squeeze(gate.tensor, axis=squeeze) if squeeze else gate.tensor
    subs = (
        [edge_index[gate.in_edges[i]] for i in keep_in]
        + [o_index]
        + [edge_index[gate.out_edges[i]] for i in keep_out]
    )
    return tensor, subs


def evaluate(model: ClassicalModel, max_states: int | None = None) -> JointDistribution:
    """Joint outcome distribution: sum over hidden values of the gate product.

    Contraction is delegated to einsum (variable elimination); trivial
    one-letter edges are squeezed out first, so adding such an edge leaves
    the result bit-identical.  Must agree with :func:`evaluate_naive` within
    1e-12.
    """
    _require_valid(model)
    if _state_space(model) > max_state_space(max_states):
        raise SizeLimitExceeded(f"state space {_state_space(model)} exceeds the guard")
    graph = model.graph
    counter = 0
    edge_index: dict[str, int] = {}
    for e in graph.edges:
        if model.edge_alphabet[e.id] > 1:
            edge_index[e.id] = counter
            counter += 1
    node_index = {}
    for v in graph.nodes:
        node_index[v] = counter
        counter += 1
    args = []
    for v in graph.nodes:
        tensor, subs = _gate_operand(model.gates[v], edge_index, node_index[v])
        args.append(tensor)
        args.append(subs)
    args.append([node_index[v] for v in graph.nodes])
    table = np.einsum(*args, optimize="greedy")
    variables = tuple((v, graph.outcomes[v]) for v in graph.nodes)
    return JointDistribution(variables, table, norm_tol=1e-9)


def evaluate_naive(model: ClassicalModel, max_states: int | None = None) -> JointDistribution:
    """Full-enumeration evaluator: explicit loops over outcome and hidden tuples.

    Independent of the einsum path; intended as a cross-check for small models.
    """
    _require_valid(model)
    if _state_space(model) > max_state_space(max_states):
        raise SizeLimitExceeded(f"state space {_state_space(model)} exceeds the guard")
    graph = model.graph
    edge_ids = [e.id for e in graph.edges]
    edge_pos = {e: i for i, e in enumerate(edge_ids)}
    edge_sizes = tuple(model.edge_alphabet[e] for e in edge_ids)
    node_pos = {v: i for i, v in enumerate(graph.nodes)}
    outcome_sizes = tuple(graph.outcomes[v] for v in graph.nodes)
    gates = [model.gates[v] for v in graph.nodes]
    table = np.zeros(outcome_sizes)
    for outcome in np.ndindex(*outcome_sizes):
        total = 0.0
        for hidden in np.ndindex(*edge_sizes) if edge_sizes else [()]:
            p = 1.0
            for v, gate in zip(graph.nodes, gates):
                idx = (
                    tuple(hidden[edge_pos[e]] for e in gate.in_edges)
                    + (outcome[node_pos[v]],)
                    + tuple(hidden[edge_pos[e]] for e in gate.out_edges)
                )
                p *= float(gate.tensor[idx])
                if p == 0.0:
                    break
            total += p
        table[outcome] = total
    variables = tuple((v, graph.outcomes[v]) for v in graph.nodes)
    return JointDistribution(variables, table, norm_tol=1e-9)


def evaluate_marginal_ancestral(model: ClassicalModel, subset) -> JointDistribution:
    """Marginal on an ancestral node set, computed from that set's gates only.

    Sums over the hidden values on edges leaving the set; equals the marginal
    of the full evaluation within 1e-12.  The empty set gives the scalar 1.
    """
    _require_valid(model)
    subset = frozenset(subset)
    for v in subset:
        if v not in set(model.graph.nodes):
            raise UnknownNode(f"unknown node {v!r}")
    if cg.causal_past(model.graph, subset) != subset:
        raise NotAncestral(f"{sorted(subset)} is not equal to its causal past")
    graph = model.graph
    kept = [v for v in graph.nodes if v in subset]
    if not kept:
        return JointDistribution((), np.asarray(1.0), norm_tol=1e-9)
    counter = 0
    edge_index: dict[str, int] = {}
    for e in graph.edges:
        if e.src in subset and model.edge_alphabet[e.id] > 1:
            edge_index[e.id] = counter
            counter += 1
    node_index = {}
    for v in kept:
        node_index[v] = counter
        counter += 1
    args = []
    for v in kept:
        tensor, subs = _gate_operand(model.gates[v], edge_index, node_index[v])
        args.append(tensor)
        args.append(subs)
    args.append([node_index[v] for v in kept])
    table = np.einsum(*args, optimize="greedy")
    variables = tuple((v, graph.outcomes[v]) for v in kept)
    return JointDistribution(variables, table, norm_tol=1e-9)


def _flat_rows(gate: Gate) -> np.ndarray:
    """Gate tensor as (incoming tuples, outcome-and-outgoing cells), both row-major."""
    n_in = int(np.prod(gate.tensor.shape[: len(gate.in_edges)], dtype=np.int64))
    return gate.tensor.reshape(n_in, -1)


def push_back_determinism(
    model: ClassicalModel,
    max_alphabet: int = DEFAULT_MAX_PUSHBACK_ALPHABET,
    max_states: int | None = None,
) -> ClassicalModel:
    """Equivalent model whose every gate at a node with incoming edges is deterministic.

    Nodes are visited in reverse topological order.  For a stochastic gate at
    ``w``, the full function table from incoming tuples to (outcome, outgoing
    values) cells is sampled once at the designated parent (lowest node id,
    then lowest edge id) and shipped to ``w`` inside an enlarged edge
    alphabet; ``w`` then merely applies the received function.  Alphabets grow
    doubly exponentially, hence the hard guard; the evaluated joint is
    preserved within 1e-12.
    """
    _require_valid(model)
    graph = model.graph
    edge_sizes = dict(model.edge_alphabet)
    gates = dict(model.gates)
    guard = max_state_space(max_states)
    for w in reversed(cg.topological_order(graph)):
        gate = gates[w]
        if not gate.in_edges:
            continue
        if gate.deterministic:
            continue
        u = min(e.src for e in graph.in_edges(w))
        desig = min(e.id for e in graph.in_edges(w) if e.src == u)
        in_sizes = tuple(edge_sizes[e] for e in gate.in_edges)
        n_in = int(np.prod(in_sizes, dtype=np.int64))
        out_sizes = gate.tensor.shape[len(gate.in_edges) + 1 :]
        cell = int(graph.outcomes[w] * np.prod(out_sizes, dtype=np.int64))
        n_f = cell**n_in
        new_size = n_f * edge_sizes[desig]
        if new_size > max_alphabet:
            raise SizeLimitExceeded(
                f"pushed-back alphabet {new_size} on edge {desig!r} exceeds {max_alphabet}"
            )
        if n_f * n_in * cell > guard or math.prod(
            (new_size if e == desig else edge_sizes[e]) for e in gate.in_edges
        ) * cell > guard:
            raise SizeLimitExceeded("pushed-back gate tensor exceeds the state-space guard")
        if n_f * gates[u].tensor.size > guard:
            raise SizeLimitExceeded(
                f"pushed-back gate at parent {u!r} exceeds the state-space guard"
            )

        rows = _flat_rows(gate)
        # joint weight of a whole function table: product of one row entry per
        # incoming tuple, with the first tuple as the most significant digit
        f_probs = rows[0]
        for t in range(1, n_in):
            f_probs = np.multiply.outer(f_probs, rows[t])
        f_probs = f_probs.ravel()

        # deterministic replacement gate at w: look up the cell selected by f
        tau = np.arange(n_in)
        f_all = np.arange(n_f)
        chosen = (f_all[:, None] // cell ** (n_in - 1 - tau[None, :])) % cell
        applied = np.zeros((n_f, n_in, cell))
        applied[np.repeat(f_all, n_in), np.tile(tau, n_f), chosen.ravel()] = 1.0
        applied = applied.reshape((n_f,) + in_sizes + (cell,))
        p = gate.in_edges.index(desig)
        applied = np.moveaxis(applied, 0, p)
        new_in_sizes = tuple(
            new_size if e == desig else edge_sizes[e] for e in gate.in_edges
        )
        applied = applied.reshape(new_in_sizes + (graph.outcomes[w],) + out_sizes)
        gates[w] = Gate(gate.in_edges, gate.out_edges, applied)

        ugate = gates[u]
        q = ugate.out_edges.index(desig)
        axis = len(ugate.in_edges) + 1 + q
        lifted = np.multiply.outer(f_probs, ugate.tensor)
        lifted = np.moveaxis(lifted, 0, axis)
        shape = list(ugate.tensor.shape)
        shape[axis] = new_size
        gates[u] = Gate(ugate.in_edges, ugate.out_edges, lifted.reshape(shape))
        edge_sizes[desig] = new_size
    return ClassicalModel(graph, edge_sizes, gates)


def lift_trivial_edge(
    model: ClassicalModel, src: str, dst: str, edge_id: str | None = None
) -> ClassicalModel:
    """Add an edge carrying a one-letter alphabet; the evaluated joint is unchanged.

    Intended for links already implied by the partial order (a transitive
    edge); adding any acyclic edge with a trivial alphabet is sound since a
    one-point hidden variable carries no information.
    """
    graph = model.graph
    nodes = set(graph.nodes)
    if src not in nodes or dst not in nodes:
        raise UnknownNode(f"unknown endpoint in {src!r}->{dst!r}")
    if src == dst or dst in cg.causal_past(graph, [src]):
        raise WouldCreateCycle(f"{src}->{dst} would close a cycle")
    if edge_id is None:
        edge_id = f"{src}->{dst}#lift"
    if any(e.id == edge_id for e in graph.edges):
        raise SchemaError(f"edge id {edge_id!r} already in use")
    new_graph = cg.CausalGraph(
        nodes=graph.nodes,
        edges=graph.edges + (cg.Edge(edge_id, src, dst),),
        outcomes=dict(graph.outcomes),
    )
    sizes = dict(model.edge_alphabet)
    sizes[edge_id] = 1
    gates = dict(model.gates)
    src_gate = gates[src]
    out_ids = tuple(sorted(src_gate.out_edges + (edge_id,)))
    axis = len(src_gate.in_edges) + 1 + out_ids.index(edge_id)
    gates[src] = Gate(
        src_gate.in_edges, out_ids, np.expand_dims(src_gate.tensor, axis=axis)
    )
    dst_gate = gates[dst]
    in_ids = tuple(sorted(dst_gate.in_edges + (edge_id,)))
    axis = in_ids.index(edge_id)
    gates[dst] = Gate(in_ids, dst_gate.out_edges, np.expand_dims(dst_gate.tensor, axis=axis))
    return ClassicalModel(new_graph, sizes, gates)


def reroute_transitive_edge(model: ClassicalModel, edge_id: str, via: str) -> ClassicalModel:
    """Remove the edge and relay its hidden variable through ``via`` instead.

    Requires existing edges ``src(edge)->via`` and ``via->dst(edge)`` (the
    lexicographically smallest of each is used as relay).  Their alphabets are
    enlarged by the removed edge's alphabet (original value major), the relay
    node's gate is tensored with an identity channel on the relayed component,
    and the endpoint gates are rewired.  The evaluated joint is preserved
    within 1e-12.
    """
    graph = model.graph
    edge = graph.edge(edge_id)
    u, w = edge.src, edge.dst
    uv_candidates = sorted(e.id for e in graph.edges if e.src == u and e.dst == via)
    vw_candidates = sorted(e.id for e in graph.edges if e.src == via and e.dst == w)
    if not uv_candidates or not vw_candidates:
        raise MissingRelayPath(f"no {u}->{via}->{w} relay path for edge {edge_id!r}")
    uv, vw = uv_candidates[0], vw_candidates[0]
    k = model.edge_alphabet[edge_id]

    new_graph = cg.CausalGraph(
        nodes=graph.nodes,
        edges=tuple(e for e in graph.edges if e.id != edge_id),
        outcomes=dict(graph.outcomes),
    )
    sizes = {e: s for e, s in model.edge_alphabet.items() if e != edge_id}
    sizes[uv] = model.edge_alphabet[uv] * k
    sizes[vw] = model.edge_alphabet[vw] * k
    gates = dict(model.gates)

    def merge_axes(tensor: np.ndarray, keep_axis: int, merged_axis: int) -> np.ndarray:
        # make (keep, merged) adjacent with keep first, then combine them
        if merged_axis > keep_axis:
            moved = np.moveaxis(tensor, merged_axis, keep_axis + 1)
            keep = keep_axis
        else:
            moved = np.moveaxis(tensor, merged_axis, keep_axis)
            keep = keep_axis - 1
        shape = list(moved.shape)
        shape[keep] = shape[keep] * shape[keep + 1]
        del shape[keep + 1]
        return np.ascontiguousarray(moved).reshape(shape)

    ugate = gates[u]
    uv_axis = len(ugate.in_edges) + 1 + ugate.out_edges.index(uv)
    uw_axis = len(ugate.in_edges) + 1 + ugate.out_edges.index(edge_id)
    new_out = tuple(e for e in ugate.out_edges if e != edge_id)
    gates[u] = Gate(ugate.in_edges, new_out, merge_axes(ugate.tensor, uv_axis, uw_axis))

    wgate = gates[w]
    vw_axis = wgate.in_edges.index(vw)
    uw_axis = wgate.in_edges.index(edge_id)
    new_in = tuple(e for e in wgate.in_edges if e != edge_id)
    gates[w] = Gate(new_in, wgate.out_edges, merge_axes(wgate.tensor, vw_axis, uw_axis))

    vgate = gates[via]
    arr = np.multiply.outer(vgate.tensor, np.eye(k))
    in_axis = vgate.in_edges.index(uv)
    out_axis = len(vgate.in_edges) + 1 + vgate.out_edges.index(vw)
    ndim = vgate.tensor.ndim
    arr = np.moveaxis(arr, ndim, in_axis + 1)  # identity input component after uv axis
    arr = np.moveaxis(arr, ndim + 1, out_axis + 2)  # identity output after vw axis (shifted by 1)
    shape = list(vgate.tensor.shape)
    shape[in_axis] *= k
    shape[out_axis] *= k
    gates[via] = Gate(vgate.in_edges, vgate.out_edges, arr.reshape(shape))

    return ClassicalModel(new_graph, sizes, gates)


def random_model(graph: cg.CausalGraph, edge_sizes, seed: int) -> ClassicalModel:
    """Model with independently drawn, row-normalized uniform gate entries.

    ``edge_sizes`` is either one int for all edges or a map from edge id.
    Deterministic for a given seed.
    """
    if isinstance(edge_sizes, int):
        alphabet = {e.id: edge_sizes for e in graph.edges}
    else:
        alphabet = {e.id: int(edge_sizes[e.id]) for e in graph.edges}
    rng = np.random.default_rng(seed)
    gates = {}
    for v in graph.nodes:
        ins = sorted_in_ids(graph, v)
        outs = sorted_out_ids(graph, v)
        shape = (
            tuple(alphabet[e] for e in ins)
            + (graph.outcomes[v],)
            + tuple(alphabet[e] for e in outs)
        )
        t = rng.uniform(size=shape)
        t /= t.sum(axis=tuple(range(len(ins), len(shape))), keepdims=True)
        gates[v] = Gate(ins, outs, t)
    return ClassicalModel(graph, alphabet, gates)


def model_to_dict(model: ClassicalModel) -> dict:
    return {
        "graph": cg.graph_to_dict(model.graph),
        "edge_sizes": {e: int(s) for e, s in model.edge_alphabet.items()},
        "gates": {
            v: {
                "in": list(g.in_edges),
                "out": list(g.out_edges),
                "tensor": [float(x) for x in g.tensor.ravel()],
            }
            for v, g in model.gates.items()
        },
    }


def model_from_dict(data: dict) -> ClassicalModel:
    if not isinstance(data, dict) or set(data) != {"graph", "edge_sizes", "gates"}:
        raise SchemaError(f"malformed model JSON near {list(data) if isinstance(data, dict) else data!r}")
    graph = cg.graph_from_dict(data["graph"])
    sizes = {str(e): int(s) for e, s in data["edge_sizes"].items()}
    gates = {}
    for v, g in data["gates"].items():
        if not isinstance(g, dict) or set(g) != {"in", "out", "tensor"}:
            raise SchemaError(f"malformed gate JSON for node {v!r}")
        ins = tuple(str(e) for e in g["in"])
        outs = tuple(str(e) for e in g["out"])
        shape = (
            tuple(sizes[e] for e in ins)
            + (graph.outcomes[str(v)],)
            + tuple(sizes[e] for e in outs)
        )
        gates[str(v)] = Gate(ins, outs, np.asarray(g["tensor"], dtype=float).reshape(shape))
    return ClassicalModel(graph, sizes, gates)
