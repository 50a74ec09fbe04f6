"""Hidden Bayesian networks: node-dwelling hidden variables with noisy readouts.

Each node carries a finite hidden alphabet, a transition table conditioned on
the parents' hidden values (parents ordered by node id), and a readout table
from hidden value to outcome.  The two constructive conversions to and from
edge hidden-variable models preserve the evaluated joint exactly (up to float
rounding): an edge model packs (outcome, outgoing hidden values) into the
node's hidden state, and conversely every outgoing edge of a node broadcasts
a copy of that node's hidden state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import graph as cg
from .classical import ClassicalModel, Gate, sorted_in_ids, sorted_out_ids
from .classical import validate_model as validate_classical
from .dist import JointDistribution
from .errors import InvalidModel, SchemaError, SizeLimitExceeded
from ._config import max_state_space

ROW_NORM_TOL = 1e-12


@dataclass
class HiddenBayesNet:
    graph: cg.CausalGraph
    node_alphabet: dict[str, int]
    transitions: dict[str, np.ndarray]  # shape: (parent alphabets..., own alphabet)
    readouts: dict[str, np.ndarray]  # shape: (own alphabet, outcome alphabet)


def sorted_parents(graph: cg.CausalGraph, v: str) -> tuple[str, ...]:
    return tuple(sorted(graph.parents(v)))


def validate(hbn: HiddenBayesNet) -> list[str]:
    """Check table shapes and row normalization; returns violations (empty = ok)."""
    violations = list(cg.validate(hbn.graph))
    for v in hbn.graph.nodes:
        size = hbn.node_alphabet.get(v)
        if size is None:
            violations.append(f"node {v!r}: missing hidden alphabet")
        elif size < 1:
            violations.append(f"node {v!r}: hidden alphabet size {size} < 1")
    for v in hbn.graph.nodes:
        trans = hbn.transitions.get(v)
        read = hbn.readouts.get(v)
        if trans is None or read is None:
            violations.append(f"node {v!r}: missing transition or readout table")
            continue
        pa = sorted_parents(hbn.graph, v)
        expected = tuple(hbn.node_alphabet[u] for u in pa) + (hbn.node_alphabet[v],)
        if trans.shape != expected:
            violations.append(f"node {v!r}: transition shape {trans.shape}, expected {expected}")
            continue
        if np.any(trans < 0):
            violations.append(f"node {v!r}: negative transition entry")
        dev = float(np.abs(trans.sum(axis=-1) - 1.0).max())
        if dev > ROW_NORM_TOL:
            violations.append(f"node {v!r}: transition rows deviate from 1 by {dev}")
        expected_r = (hbn.node_alphabet[v], hbn.graph.outcomes[v])
        if read.shape != expected_r:
            violations.append(f"node {v!r}: readout shape {read.shape}, expected {expected_r}")
            continue
        if np.any(read < 0):
            violations.append(f"node {v!r}: negative readout entry")
        dev = float(np.abs(read.sum(axis=-1) - 1.0).max())
        if dev > ROW_NORM_TOL:
            violations.append(f"node {v!r}: readout rows deviate from 1 by {dev}")
    return violations


def _require_valid(hbn: HiddenBayesNet) -> None:
    problems = validate(hbn)
    if problems:
        raise InvalidModel("; ".join(problems))


def evaluate(hbn: HiddenBayesNet, max_states: int | None = None) -> JointDistribution:
    """Exact sum over hidden assignments of readout times transition products."""
    _require_valid(hbn)
    graph = hbn.graph
    total = 1
    for v in graph.nodes:
        total *= hbn.node_alphabet[v] * graph.outcomes[v]
    if total > max_state_space(max_states):
        raise SizeLimitExceeded(f"state space {total} exceeds the guard")
    mu_index = {v: i for i, v in enumerate(graph.nodes)}
    o_index = {v: len(graph.nodes) + i for i, v in enumerate(graph.nodes)}
    args = []
    for v in graph.nodes:
        pa = sorted_parents(graph, v)
        args.append(hbn.transitions[v])
        args.append([mu_index[u] for u in pa] + [mu_index[v]])
        args.append(hbn.readouts[v])
        args.append([mu_index[v], o_index[v]])
    args.append([o_index[v] for v in graph.nodes])
    table = np.einsum(*args, optimize="greedy")
    variables = tuple((v, graph.outcomes[v]) for v in graph.nodes)
    return JointDistribution(variables, table, norm_tol=1e-9)


def from_classical(model: ClassicalModel, max_states: int | None = None) -> HiddenBayesNet:
    """Repackage an edge hidden-variable model with node-dwelling hidden states.

    The hidden state of a node is its (outcome, outgoing hidden values) tuple,
    outcome index major; transitions replay the node's gate with the incoming
    values read off the parents' states, and readouts project onto the
    outcome.  Evaluations agree within 1e-12.
    """
    problems = validate_classical(model)
    if problems:
        raise InvalidModel("; ".join(problems))
    graph = model.graph
    guard = max_state_space(max_states)
    sizes = {}
    for v in graph.nodes:
        s = graph.outcomes[v]
        for e in sorted_out_ids(graph, v):
            s *= model.edge_alphabet[e]
        if s > guard:
            raise SizeLimitExceeded(f"hidden alphabet {s} at node {v!r} exceeds the guard")
        sizes[v] = s

    # position of each edge's value inside the source node's packed state
    out_pos = {}
    out_sizes = {}
    for v in graph.nodes:
        ids = sorted_out_ids(graph, v)
        out_pos.update({e: i for i, e in enumerate(ids)})
        out_sizes[v] = tuple(model.edge_alphabet[e] for e in ids)

    transitions = {}
    readouts = {}
    for v in graph.nodes:
        gate = model.gates[v]
        pa = sorted_parents(graph, v)
        pa_shapes = tuple(sizes[u] for u in pa)
        trans = np.zeros(pa_shapes + (sizes[v],))
        in_ids = gate.in_edges
        in_sizes = tuple(model.edge_alphabet[e] for e in in_ids)
        flat_gate = gate.tensor.reshape(in_sizes + (sizes[v],)) if in_ids else gate.tensor.reshape(
            (sizes[v],)
        )
        for assign in np.ndindex(*pa_shapes) if pa_shapes else [()]:
            decoded = {}
            for u, mu in zip(pa, assign):
                shape_u = (graph.outcomes[u],) + out_sizes[u]
                decoded[u] = np.unravel_index(mu, shape_u)
            lam_in = tuple(
                decoded[graph.edge(e).src][1 + out_pos[e]] for e in in_ids
            )
            trans[assign] = flat_gate[lam_in] if in_ids else flat_gate
        transitions[v] = trans

        n_o = graph.outcomes[v]
        read = np.zeros((sizes[v], n_o))
        block = sizes[v] // n_o
        for o in range(n_o):
            read[o * block : (o + 1) * block, o] = 1.0
        readouts[v] = read
    return HiddenBayesNet(graph, sizes, transitions, readouts)


def to_classical(hbn: HiddenBayesNet, max_states: int | None = None) -> ClassicalModel:
    """Unpack a hidden Bayesian network into an edge hidden-variable model.

    Every edge carries a copy of its source node's hidden state; a node's
    gate draws its own hidden value from the transition row selected by the
    parents' states, draws the outcome from the readout of that value, and
    broadcasts the value on all outgoing edges (diagonal support).  With
    parallel edges from the same parent, the incoming value is read from the
    lexicographically smallest edge.  Evaluations agree within 1e-12.
    """
    _require_valid(hbn)
    graph = hbn.graph
    guard = max_state_space(max_states)
    alphabet = {e.id: hbn.node_alphabet[e.src] for e in graph.edges}
    gates = {}
    for v in graph.nodes:
        in_ids = sorted_in_ids(graph, v)
        out_ids = sorted_out_ids(graph, v)
        n_out = len(out_ids)
        yv = hbn.node_alphabet[v]
        n_o = graph.outcomes[v]
        in_sizes = tuple(alphabet[e] for e in in_ids)
        shape = in_sizes + (n_o,) + (yv,) * n_out
        if int(np.prod(shape, dtype=np.int64)) > guard:
            raise SizeLimitExceeded(f"gate tensor at node {v!r} exceeds the guard")
        pa = sorted_parents(graph, v)
        canonical = {u: min(e.id for e in graph.in_edges(v) if e.src == u) for u in pa}
        canonical_pos = {u: in_ids.index(canonical[u]) for u in pa}
        trans = hbn.transitions[v]
        read = hbn.readouts[v]
        # weight[mu_pa..., mu, o] = transition * readout
        weight = trans[..., :, None] * read
        tensor = np.zeros(shape)
        for tup in np.ndindex(*in_sizes) if in_sizes else [()]:
            mu_pa = tuple(tup[canonical_pos[u]] for u in pa)
            w = weight[mu_pa]  # (yv, n_o)
            if n_out == 0:
                tensor[tup] = w.sum(axis=0)
            else:
                for mu in range(yv):
                    tensor[tup + (slice(None),) + (mu,) * n_out] = w[mu]
        gates[v] = Gate(in_ids, out_ids, tensor)
    return ClassicalModel(graph, alphabet, gates)


def random_hbn(graph: cg.CausalGraph, node_sizes, seed: int) -> HiddenBayesNet:
    """Random valid network: uniform entries, row-normalized; deterministic per seed."""
    if isinstance(node_sizes, int):
        sizes = {v: node_sizes for v in graph.nodes}
    else:
        sizes = {v: int(node_sizes[v]) for v in graph.nodes}
    rng = np.random.default_rng(seed)
    transitions = {}
    readouts = {}
    for v in graph.nodes:
        pa = sorted_parents(graph, v)
        shape = tuple(sizes[u] for u in pa) + (sizes[v],)
        t = rng.uniform(size=shape)
        t /= t.sum(axis=-1, keepdims=True)
        transitions[v] = t
        r = rng.uniform(size=(sizes[v], graph.outcomes[v]))
        r /= r.sum(axis=-1, keepdims=True)
        readouts[v] = r
    return HiddenBayesNet(graph, sizes, transitions, readouts)


def hbn_to_dict(hbn: HiddenBayesNet) -> dict:
    return {
        "graph": cg.graph_to_dict(hbn.graph),
        "node_sizes": {v: int(s) for v, s in hbn.node_alphabet.items()},
        "transitions": {v: [float(x) for x in t.ravel()] for v, t in hbn.transitions.items()},
        "readouts": {v: [float(x) for x in r.ravel()] for v, r in hbn.readouts.items()},
    }


def hbn_from_dict(data: dict) -> HiddenBayesNet:
    if not isinstance(data, dict) or set(data) != {"graph", "node_sizes", "transitions", "readouts"}:
        raise SchemaError("malformed hidden-Bayesian-network JSON")
    graph = cg.graph_from_dict(data["graph"])
    sizes = {str(v): int(s) for v, s in data["node_sizes"].items()}
    transitions = {}
    readouts = {}
    for v in graph.nodes:
        pa = sorted_parents(graph, v)
        shape = tuple(sizes[u] for u in pa) + (sizes[v],)
        transitions[v] = np.asarray(data["transitions"][v], dtype=float).reshape(shape)
        readouts[v] = np.asarray(data["readouts"][v], dtype=float).reshape(
            (sizes[v], graph.outcomes[v])
        )
    return HiddenBayesNet(graph, sizes, transitions, readouts)
