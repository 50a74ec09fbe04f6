"""Quantum models on causal graphs: Hilbert dimensions on edges, instruments on nodes.

An instrument maps each outcome of its node to a list of Kraus operators of
shape (product of outgoing edge dimensions, product of incoming edge
dimensions); summed over outcomes and operators, K†K accumulates to the
identity.  Evaluation contracts the graph one node at a time along a
topological order, carrying a density operator on the currently open edges.
Open edges are kept sorted by edge id at all times, which makes the result
independent of the chosen order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import graph as cg
from .classical import ClassicalModel, validate_model as validate_classical
from .dist import JointDistribution
from .errors import (
    InvalidModel,
    NegativeProbability,
    SchemaError,
    SizeLimitExceeded,
)
from ._config import DEFAULT_MAX_WIRE_DIM, max_state_space

COMPLETENESS_TOL = 1e-10
IMAG_TOL = 1e-12
NEG_TOL = 1e-9


@dataclass(frozen=True)
class Instrument:
    """Per-outcome families of Kraus operators; empty families are allowed."""

    components: tuple[tuple[np.ndarray, ...], ...]

    @property
    def n_outcomes(self) -> int:
        return len(self.components)


@dataclass
class QuantumModel:
    graph: cg.CausalGraph
    edge_dim: dict[str, int]
    instruments: dict[str, Instrument]


def _io_dims(model: QuantumModel, v: str) -> tuple[int, int]:
    din = 1
    for e in sorted(x.id for x in model.graph.in_edges(v)):
        din *= model.edge_dim[e]
    dout = 1
    for e in sorted(x.id for x in model.graph.out_edges(v)):
        dout *= model.edge_dim[e]
    return din, dout


def completeness_deviation(model: QuantumModel, v: str) -> float:
    """Max-abs deviation of the summed K†K from the identity on the input space."""
    din, _ = _io_dims(model, v)
    acc = np.zeros((din, din), dtype=complex)
    for ops in model.instruments[v].components:
        for k in ops:
            acc += k.conj().T @ k
    return float(np.abs(acc - np.eye(din)).max())


def validate_model(model: QuantumModel) -> list[str]:
    """Check shapes and trace preservation; returns violations (empty means ok)."""
    violations = list(cg.validate(model.graph))
    for e in model.graph.edges:
        d = model.edge_dim.get(e.id)
        if d is None:
            violations.append(f"edge {e.id!r}: missing dimension")
        elif d < 1:
            violations.append(f"edge {e.id!r}: dimension {d} < 1")
    for v in model.graph.nodes:
        inst = model.instruments.get(v)
        if inst is None:
            violations.append(f"node {v!r}: missing instrument")
            continue
        if inst.n_outcomes != model.graph.outcomes[v]:
            violations.append(
                f"node {v!r}: instrument has {inst.n_outcomes} outcomes, expected {model.graph.outcomes[v]}"
            )
            continue
        din, dout = _io_dims(model, v)
        bad_shape = False
        for ops in inst.components:
            for k in ops:
                if k.shape != (dout, din):
                    violations.append(
                        f"node {v!r}: Kraus operator shape {k.shape}, expected {(dout, din)}"
                    )
                    bad_shape = True
                    break
            if bad_shape:
                break
        if bad_shape:
            continue
        dev = completeness_deviation(model, v)
        if dev > COMPLETENESS_TOL:
            violations.append(f"node {v!r}: completeness deviation {dev}")
    return violations


def _require_valid(model: QuantumModel) -> None:
    problems = validate_model(model)
    if problems:
        raise InvalidModel("; ".join(problems))


def _check_order(model: QuantumModel, order) -> list[str]:
    nodes = list(model.graph.nodes)
    order = list(order)
    if sorted(order) != sorted(nodes):
        raise InvalidModel(f"{order} is not a permutation of the graph nodes")
    pos = {v: i for i, v in enumerate(order)}
    for e in model.graph.edges:
        if pos[e.src] >= pos[e.dst]:
            raise InvalidModel(f"order violates edge {e.id!r}")
    return order


def _contract_outcome(model, order, outcome_of, max_wire) -> complex:
    """Value of the diagram with each node fixed to one instrument component."""
    open_ids: list[str] = []
    dims: list[int] = []
    rho = np.ones((1, 1), dtype=complex)
    for v in order:
        ops = model.instruments[v].components[outcome_of[v]]
        in_ids = sorted(e.id for e in model.graph.in_edges(v))
        out_ids = sorted(e.id for e in model.graph.out_edges(v))
        in_set = set(in_ids)
        rest_axes = [i for i, e in enumerate(open_ids) if e not in in_set]
        in_axes = [open_ids.index(e) for e in in_ids]
        k = len(open_ids)
        tens = rho.reshape(tuple(dims) * 2)
        perm = rest_axes + in_axes
        tens = tens.transpose(perm + [k + i for i in perm])
        r_dim = 1
        for i in rest_axes:
            r_dim *= dims[i]
        din = 1
        for i in in_axes:
            din *= dims[i]
        dout = 1
        for e in out_ids:
            dout *= model.edge_dim[e]
        if r_dim * dout > max_wire:
            raise SizeLimitExceeded(
                f"open-wire dimension {r_dim * dout} exceeds the guard {max_wire}"
            )
        block = tens.reshape(r_dim, din, r_dim, din)
        new = np.zeros((r_dim, dout, r_dim, dout), dtype=complex)
        for kr in ops:
            new += np.einsum("oi,aibj,pj->aobp", kr, block, kr.conj())
        rest_ids = [open_ids[i] for i in rest_axes]
        rest_dims = [dims[i] for i in rest_axes]
        out_dims = [model.edge_dim[e] for e in out_ids]
        unsorted_ids = rest_ids + out_ids
        tens = new.reshape(tuple(rest_dims + out_dims) * 2)
        sort_perm = sorted(range(len(unsorted_ids)), key=lambda i: unsorted_ids[i])
        kk = len(unsorted_ids)
        tens = tens.transpose(sort_perm + [kk + i for i in sort_perm])
        open_ids = [unsorted_ids[i] for i in sort_perm]
        dims = [(rest_dims + out_dims)[i] for i in sort_perm]
        d = 1
        for x in dims:
            d *= x
        rho = tens.reshape(d, d)
    return complex(rho[0, 0])


def evaluate(
    model: QuantumModel,
    order=None,
    max_wire_dim: int = DEFAULT_MAX_WIRE_DIM,
    max_states: int | None = None,
) -> JointDistribution:
    """Joint outcome distribution by per-outcome diagram contraction.

    For every joint outcome tuple the graph is contracted along ``order``
    (default: the canonical topological order); any topological order gives
    the same table within 1e-10.  Entries with imaginary residue beyond 1e-12
    are rejected; entries below -1e-9 raise NegativeProbability, smaller
    negative noise is clamped to zero.
    """
    _require_valid(model)
    graph = model.graph
    order = _check_order(model, order if order is not None else cg.topological_order(graph))
    total = 1
    for v in graph.nodes:
        total *= graph.outcomes[v]
    if total > max_state_space(max_states):
        raise SizeLimitExceeded(f"{total} outcome tuples exceeds the guard")
    outcome_sizes = tuple(graph.outcomes[v] for v in graph.nodes)
    table = np.zeros(outcome_sizes)
    for outcome in np.ndindex(*outcome_sizes):
        outcome_of = dict(zip(graph.nodes, outcome))
        p = _contract_outcome(model, order, outcome_of, max_wire_dim)
        if abs(p.imag) > IMAG_TOL:
            raise InvalidModel(f"imaginary residue {p.imag} at outcome {outcome}")
        val = p.real
        if val < -NEG_TOL:
            raise NegativeProbability(f"probability {val} at outcome {outcome}")
        table[outcome] = max(val, 0.0)
    variables = tuple((v, graph.outcomes[v]) for v in graph.nodes)
    return JointDistribution(variables, table, norm_tol=1e-8)


def decohere_embed(cmodel: ClassicalModel) -> QuantumModel:
    """Embed a classical model as a quantum one, diagonal in the canonical basis.

    Each edge alphabet becomes a Hilbert dimension and each positive gate
    entry one Kraus operator: the square-rooted entry times the matrix unit
    sending the incoming basis vector to the outgoing one.  Evaluation agrees
    with the classical evaluation within 1e-10.
    """
    problems = validate_classical(cmodel)
    if problems:
        raise InvalidModel("; ".join(problems))
    graph = cmodel.graph
    dims = {e: int(s) for e, s in cmodel.edge_alphabet.items()}
    instruments = {}
    for v in graph.nodes:
        gate = cmodel.gates[v]
        n_in = len(gate.in_edges)
        din = int(np.prod(gate.tensor.shape[:n_in], dtype=np.int64))
        n_o = graph.outcomes[v]
        dout = int(np.prod(gate.tensor.shape[n_in + 1 :], dtype=np.int64))
        rows = gate.tensor.reshape(din, n_o, dout)
        components = []
        for o in range(n_o):
            ops = []
            for lam_in in range(din):
                for lam_out in range(dout):
                    g = rows[lam_in, o, lam_out]
                    if g > 0.0:
                        k = np.zeros((dout, din), dtype=complex)
                        k[lam_out, lam_in] = np.sqrt(g)
                        ops.append(k)
            components.append(tuple(ops))
        instruments[v] = Instrument(tuple(components))
    return QuantumModel(graph, dims, instruments)


def random_model(graph: cg.CausalGraph, edge_dims, seed: int) -> QuantumModel:
    """Random valid model: per node, a Haar-style isometry split into Kraus blocks.

    ``edge_dims`` is one int for all edges or a map from edge id.  A complex
    Gaussian matrix is orthonormalized by QR, giving an isometry from the
    input space into (outcomes x environment x output); its blocks are exactly
    complete.  Deterministic for a given seed.
    """
    if isinstance(edge_dims, int):
        dims = {e.id: edge_dims for e in graph.edges}
    else:
        dims = {e.id: int(edge_dims[e.id]) for e in graph.edges}
    rng = np.random.default_rng(seed)
    instruments = {}
    for v in graph.nodes:
        din = 1
        for e in sorted(x.id for x in graph.in_edges(v)):
            din *= dims[e]
        dout = 1
        for e in sorted(x.id for x in graph.out_edges(v)):
            dout *= dims[e]
        m = graph.outcomes[v]
        env = max(1, -(-din // (dout * m)))
        g = rng.normal(size=(dout * m * env, din)) + 1j * rng.normal(size=(dout * m * env, din))
        q, _ = np.linalg.qr(g)
        blocks = q.reshape(m, env, dout, din)
        instruments[v] = Instrument(
            tuple(tuple(blocks[o, j] for j in range(env)) for o in range(m))
        )
    return QuantumModel(graph, dims, instruments)


def model_to_dict(model: QuantumModel) -> dict:
    def encode(k: np.ndarray):
        return [[[float(z.real), float(z.imag)] for z in row] for row in k]

    return {
        "graph": cg.graph_to_dict(model.graph),
        "edge_dims": {e: int(d) for e, d in model.edge_dim.items()},
        "instruments": {
            v: {
                str(o): [encode(k) for k in ops]
                for o, ops in enumerate(inst.components)
            }
            for v, inst in model.instruments.items()
        },
    }


def model_from_dict(data: dict) -> QuantumModel:
    if not isinstance(data, dict) or set(data) != {"graph", "edge_dims", "instruments"}:
        raise SchemaError("malformed quantum model JSON")
    graph = cg.graph_from_dict(data["graph"])
    dims = {str(e): int(d) for e, d in data["edge_dims"].items()}
    instruments = {}
    for v, byo in data["instruments"].items():
        n_o = graph.outcomes[str(v)]
        components = []
        for o in range(n_o):
            ops = []
            for k in byo.get(str(o), []):
                arr = np.array(
                    [[complex(z[0], z[1]) for z in row] for row in k], dtype=complex
                )
                ops.append(arr)
            components.append(tuple(ops))
        instruments[str(v)] = Instrument(tuple(components))
    return QuantumModel(graph, dims, instruments)
