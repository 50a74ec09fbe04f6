"""n-party Bell scenarios: graph generation, no-signalling checks, local-polytope
membership by LP over deterministic strategies, and quantum model construction.

A scenario has one source node ``s`` and per party a setting node ``x{i}``
feeding a measurement node ``a{i}`` that also receives an edge from the
source.  Local-polytope membership is decided once per source outcome: the
shared hidden variable may absorb the source outcome, so response functions
need not be shared across source outcomes and the feasibility problems
decouple.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import graph as cg
from .classical import ClassicalModel, Gate
from .dist import JointDistribution, conditional, marginal
from .errors import (
    IncompletePOVM,
    NotNoSignalling,
    ShapeMismatch,
    SizeLimitExceeded,
)
from .quantum import Instrument, QuantumModel
from ._config import DEFAULT_MAX_STRATEGIES
from ._simplex import solve_phase1, solve_phase1_exact

EXACT_MODE_MAX_STRATEGIES = 4096


@dataclass(frozen=True)
class BellScenario:
    """Party count with per-party setting/outcome sizes and a source outcome size."""

    settings: tuple[int, ...]
    outcomes: tuple[int, ...]
    source_outcomes: int = 1

    def __post_init__(self):
        if len(self.settings) != len(self.outcomes) or not self.settings:
            raise ShapeMismatch("settings and outcomes must list one size per party")
        if min(self.settings) < 1 or min(self.outcomes) < 1 or self.source_outcomes < 1:
            raise ShapeMismatch("all sizes must be >= 1")

    @property
    def n(self) -> int:
        return len(self.settings)

    def setting_ids(self) -> list[str]:
        return [f"x{i + 1}" for i in range(self.n)]

    def outcome_ids(self) -> list[str]:
        return [f"a{i + 1}" for i in range(self.n)]


def make_bell_graph(scenario: BellScenario) -> cg.CausalGraph:
    """The 2n+1-node scenario graph with deterministic node and edge ids."""
    nodes = [("s", scenario.source_outcomes)]
    nodes += [(x, k) for x, k in zip(scenario.setting_ids(), scenario.settings)]
    nodes += [(a, k) for a, k in zip(scenario.outcome_ids(), scenario.outcomes)]
    edges = [(f"s->a{i + 1}", "s", f"a{i + 1}") for i in range(scenario.n)]
    edges += [(f"x{i + 1}->a{i + 1}", f"x{i + 1}", f"a{i + 1}") for i in range(scenario.n)]
    return cg.CausalGraph.build(nodes, edges)


def _check_vars(scenario: BellScenario, dist: JointDistribution) -> None:
    graph = make_bell_graph(scenario)
    expected = {v: graph.outcomes[v] for v in graph.nodes}
    got = {v: k for v, k in dist.variables}
    if got != expected:
        raise ShapeMismatch(f"distribution variables {got} do not match the scenario {expected}")


@dataclass
class NoSignallingVerdict:
    """Free-will and per-party no-signalling deviations (max-abs over entries)."""

    passes: bool
    freewill_deviation: float
    nosig_deviations: list[float]
    tol: float

    def to_dict(self) -> dict:
        return {
            "passes": self.passes,
            "freewill_deviation": self.freewill_deviation,
            "nosig_deviations": self.nosig_deviations,
            "tol": self.tol,
        }


def check_free_will_no_signalling(
    scenario: BellScenario, dist: JointDistribution, tol: float = 1e-9
) -> NoSignallingVerdict:
    """Check that settings and source are jointly independent and that each
    party's setting is independent of everything else jointly.

    Agrees with the generic disjoint-past factorization check on the scenario
    graph.
    """
    _check_vars(scenario, dist)
    xs = scenario.setting_ids()
    as_ = scenario.outcome_ids()

    joint_xs = marginal(dist, set(xs) | {"s"}).reorder(xs + ["s"])
    factor = marginal(dist, {"s"}).table
    for x in reversed(xs):
        factor = np.multiply.outer(marginal(dist, {x}).table, factor)
    freewill_dev = float(np.abs(joint_xs.table - factor).max())

    nosig_devs = []
    for i in range(scenario.n):
        keep = [v for v in as_ if v != as_[i]] + xs + ["s"]
        lhs = marginal(dist, set(keep)).reorder(keep)
        rest = [v for v in keep if v != xs[i]]
        rhs = np.multiply.outer(marginal(dist, {xs[i]}).table, marginal(dist, set(rest)).reorder(rest).table)
        # align: lhs order is keep; rhs order is [x_i] + rest
        perm = [([xs[i]] + rest).index(v) for v in keep]
        rhs = np.transpose(rhs, perm)
        nosig_devs.append(float(np.abs(lhs.table - rhs).max()))

    passes = freewill_dev <= tol and all(d <= tol for d in nosig_devs)
    return NoSignallingVerdict(passes, freewill_dev, nosig_devs, tol)


def enumerate_strategies(scenario: BellScenario) -> list[tuple[tuple[int, ...], ...]]:
    """All deterministic strategies: per party, a tuple mapping setting to outcome."""
    total = 1
    for k, m in zip(scenario.settings, scenario.outcomes):
        total *= m**k
    if total > DEFAULT_MAX_STRATEGIES:
        raise SizeLimitExceeded(f"{total} deterministic strategies exceeds the guard")
    per_party = [
        list(itertools.product(range(m), repeat=k))
        for k, m in zip(scenario.settings, scenario.outcomes)
    ]
    return list(itertools.product(*per_party))


@dataclass
class LocalityVerdict:
    """Membership in the convex hull of deterministic strategies.

    When local, ``weights[s]`` maps strategies to their convex weights for
    each source outcome ``s``.  When not, ``max_residual`` is the largest
    L1 infeasibility over source outcomes.
    """

    is_local: bool
    weights: dict[int, dict[tuple, float]] = field(default_factory=dict)
    max_residual: float = 0.0
    tol: float = 1e-7

    def to_dict(self) -> dict:
        def key(strategy):
            return "|".join(",".join(str(o) for o in d) for d in strategy)

        return {
            "is_local": self.is_local,
            "weights": {
                str(s): {key(d): w for d, w in byd.items()} for s, byd in self.weights.items()
            },
            "max_residual": self.max_residual,
            "tol": self.tol,
        }


def local_membership(
    scenario: BellScenario,
    dist: JointDistribution,
    tol: float = 1e-7,
    exact: bool = False,
) -> LocalityVerdict:
    """LP feasibility of the conditional inside the local polytope, per source outcome.

    Requires a no-signalling input (checked first).  For each source outcome
    with positive probability, a phase-1 simplex decides whether the
    conditional outcome distribution is a convex mixture of deterministic
    strategies; ``exact=True`` switches to rational arithmetic (inputs taken
    at their exact binary float values) for small strategy counts.
    """
    ns = check_free_will_no_signalling(scenario, dist, tol=tol)
    if not ns.passes:
        raise NotNoSignalling(
            f"input violates free-will/no-signalling by "
            f"{max([ns.freewill_deviation] + ns.nosig_deviations)}"
        )
    strategies = enumerate_strategies(scenario)
    n_strat = len(strategies)
    if exact and n_strat > EXACT_MODE_MAX_STRATEGIES:
        raise SizeLimitExceeded(f"exact mode supports at most {EXACT_MODE_MAX_STRATEGIES} strategies")
    xs = scenario.setting_ids()
    as_ = scenario.outcome_ids()
    cond = conditional(dist, targets=as_, givens=xs + ["s"])
    a_sizes = scenario.outcomes
    n_a = int(np.prod(a_sizes, dtype=np.int64))

    # response of every strategy: one-hot joint outcome per setting tuple
    x_tuples = list(itertools.product(*(range(k) for k in scenario.settings)))
    response = {}
    for xt in x_tuples:
        cols = np.zeros(n_strat, dtype=np.int64)
        for j, strat in enumerate(strategies):
            at = tuple(strat[i][xt[i]] for i in range(scenario.n))
            cols[j] = int(np.ravel_multi_index(at, a_sizes))
        response[xt] = cols

    weights: dict[int, dict[tuple, float]] = {}
    p_s = marginal(dist, {"s"}).table
    for s in range(scenario.source_outcomes):
        if p_s[s] <= cond.zero_tol:
            continue
        rows = []
        rhs = []
        for xt in x_tuples:
            if not cond.defined[xt + (s,)]:
                continue
            block = np.zeros((n_a, n_strat))
            block[response[xt], np.arange(n_strat)] = 1.0
            rows.append(block)
            rhs.append(cond.probs[xt + (s,)].ravel())
        rows.append(np.ones((1, n_strat)))
        rhs.append(np.array([1.0]))
        a_mat = np.vstack(rows)
        b_vec = np.concatenate(rhs)
        if exact:
            res = solve_phase1_exact(a_mat, b_vec)
            feasible = res.feasible
            residual = float(res.infeasibility)
            x = np.array([float(v) for v in res.x])
        else:
            res = solve_phase1(a_mat, b_vec, tol=tol)
            feasible = res.feasible
            residual = res.infeasibility
            x = res.x
        if not feasible:
            return LocalityVerdict(False, {}, max_residual=residual, tol=tol)
        weights[s] = {
            strategies[j]: float(x[j]) for j in range(n_strat) if x[j] > 1e-12
        }
    return LocalityVerdict(True, weights, max_residual=0.0, tol=tol)


def classical_bell_model(
    scenario: BellScenario,
    hidden_given_source,
    responses,
    setting_dists,
    source_dist,
) -> ClassicalModel:
    """Scenario model from a shared hidden variable and per-party responses.

    ``hidden_given_source[s][lam]`` distributes one hidden value per source
    outcome; the source broadcasts it to every party.  ``responses[i][x][lam][a]``
    is party ``i``'s outcome distribution given its setting and the hidden
    value; each setting node emits a copy of its own outcome.  Deterministic
    responses with the weights returned by :func:`local_membership` replay a
    membership witness as an explicit model.
    """
    n = scenario.n
    hidden_given_source = np.asarray(hidden_given_source, dtype=float)
    if hidden_given_source.ndim != 2 or hidden_given_source.shape[0] != scenario.source_outcomes:
        raise ShapeMismatch("hidden_given_source must have one row per source outcome")
    n_hidden = hidden_given_source.shape[1]
    source_dist = np.asarray(source_dist, dtype=float).ravel()
    if source_dist.shape != (scenario.source_outcomes,):
        raise ShapeMismatch("source distribution has the wrong length")
    setting_dists = [np.asarray(p, dtype=float).ravel() for p in setting_dists]
    responses = [np.asarray(r, dtype=float) for r in responses]
    for i, r in enumerate(responses):
        if r.shape != (scenario.settings[i], n_hidden, scenario.outcomes[i]):
            raise ShapeMismatch(
                f"party {i + 1}: response shape {r.shape}, expected "
                f"{(scenario.settings[i], n_hidden, scenario.outcomes[i])}"
            )

    graph = make_bell_graph(scenario)
    alphabet = {}
    for i in range(n):
        alphabet[f"s->a{i + 1}"] = n_hidden
        alphabet[f"x{i + 1}->a{i + 1}"] = scenario.settings[i]

    gates = {}
    src_out = tuple(sorted(f"s->a{i + 1}" for i in range(n)))
    t = np.zeros((scenario.source_outcomes,) + (n_hidden,) * n)
    for s in range(scenario.source_outcomes):
        for lam in range(n_hidden):
            t[(s,) + (lam,) * n] = source_dist[s] * hidden_given_source[s, lam]
    gates["s"] = Gate((), src_out, t)

    for i in range(n):
        k = scenario.settings[i]
        t = np.zeros((k, k))
        for x in range(k):
            t[x, x] = setting_dists[i][x]
        gates[f"x{i + 1}"] = Gate((), (f"x{i + 1}->a{i + 1}",), t)

    for i in range(n):
        ins = tuple(sorted((f"s->a{i + 1}", f"x{i + 1}->a{i + 1}")))
        t = np.transpose(responses[i], (1, 0, 2))  # (hidden, setting, outcome)
        gates[f"a{i + 1}"] = Gate(ins, (), t)

    return ClassicalModel(graph, alphabet, gates)


def quantum_bell_model(
    scenario: BellScenario,
    states,
    povms,
    setting_dists,
    source_dist,
) -> QuantumModel:
    """Quantum model on the scenario graph from states, POVMs, and input distributions.

    ``states``: one unit vector on the tensor product of the party spaces per
    source outcome.  ``povms[i][x][a]``: party ``i``'s effect for outcome
    ``a`` under setting ``x``; each setting's effects must sum to the identity
    within 1e-10.  The source edge to party ``i`` carries that party's space,
    the setting edge carries a classical register of the setting value, and
    the measurement node applies the setting-controlled POVM.
    """
    n = scenario.n
    if len(povms) != n:
        raise ShapeMismatch(f"{len(povms)} POVM families for {n} parties")
    dims = []
    for i, fam in enumerate(povms):
        if len(fam) != scenario.settings[i]:
            raise ShapeMismatch(f"party {i + 1}: {len(fam)} settings, expected {scenario.settings[i]}")
        d = np.asarray(fam[0][0]).shape[0]
        dims.append(d)
        for x, effects in enumerate(fam):
            if len(effects) != scenario.outcomes[i]:
                raise ShapeMismatch(
                    f"party {i + 1}, setting {x}: {len(effects)} effects, expected {scenario.outcomes[i]}"
                )
            acc = np.zeros((d, d), dtype=complex)
            for e in effects:
                e = np.asarray(e, dtype=complex)
                if e.shape != (d, d):
                    raise ShapeMismatch(f"party {i + 1}: effect shape {e.shape}, expected {(d, d)}")
                acc += e
            if np.abs(acc - np.eye(d)).max() > 1e-10:
                raise IncompletePOVM(f"party {i + 1}, setting {x}: effects sum off identity")

    states = [np.asarray(psi, dtype=complex).ravel() for psi in states]
    if len(states) != scenario.source_outcomes:
        raise ShapeMismatch(f"{len(states)} states for {scenario.source_outcomes} source outcomes")
    full_dim = int(np.prod(dims, dtype=np.int64))
    for psi in states:
        if psi.shape != (full_dim,):
            raise ShapeMismatch(f"state has dimension {psi.shape[0]}, expected {full_dim}")
        if abs(np.linalg.norm(psi) - 1.0) > 1e-10:
            raise ShapeMismatch("states must be unit vectors")
    source_dist = np.asarray(source_dist, dtype=float).ravel()
    if source_dist.shape != (scenario.source_outcomes,) or abs(source_dist.sum() - 1.0) > 1e-10:
        raise ShapeMismatch("source distribution must be normalized with one entry per outcome")
    setting_dists = [np.asarray(p, dtype=float).ravel() for p in setting_dists]
    for i, p in enumerate(setting_dists):
        if p.shape != (scenario.settings[i],) or abs(p.sum() - 1.0) > 1e-10:
            raise ShapeMismatch(f"setting distribution {i + 1} must be normalized")

    graph = make_bell_graph(scenario)

    # source emits the party spaces on its outgoing edges, which the
    # contraction orders lexicographically by edge id
    source_ids = [f"s->a{i + 1}" for i in range(n)]
    order = sorted(range(n), key=lambda i: source_ids[i])
    instruments = {}
    comps = []
    for s in range(scenario.source_outcomes):
        psi = states[s].reshape(tuple(dims)).transpose(order).ravel()
        k = np.sqrt(source_dist[s]) * psi.reshape(-1, 1)
        comps.append((k,))
    instruments["s"] = Instrument(tuple(comps))

    edge_dim = {}
    for i in range(n):
        edge_dim[f"s->a{i + 1}"] = dims[i]
        edge_dim[f"x{i + 1}->a{i + 1}"] = scenario.settings[i]

    for i in range(n):
        comps = []
        for x in range(scenario.settings[i]):
            e = np.zeros((scenario.settings[i], 1), dtype=complex)
            e[x, 0] = np.sqrt(setting_dists[i][x])
            comps.append((e,))
        instruments[f"x{i + 1}"] = Instrument(tuple(comps))

    for i in range(n):
        kx = scenario.settings[i]
        d = dims[i]
        comps = []
        for a in range(scenario.outcomes[i]):
            m = np.zeros((d * kx, d * kx), dtype=complex)
            for x in range(kx):
                proj = np.zeros((kx, kx), dtype=complex)
                proj[x, x] = 1.0
                m += np.kron(np.asarray(povms[i][x][a], dtype=complex), proj)
            w, u = np.linalg.eigh(m)
            ops = []
            for j in range(len(w)):
                if w[j] > 1e-14:
                    ops.append(np.sqrt(w[j]) * u[:, j].conj().reshape(1, -1))
            comps.append(tuple(ops))
        instruments[f"a{i + 1}"] = Instrument(tuple(comps))

    return QuantumModel(graph, edge_dim, instruments)


def chsh_value(dist: JointDistribution) -> float:
    """S = E(0,0) + E(0,1) + E(1,0) - E(1,1) with outcomes 0 -> +1, 1 -> -1.

    Accepts the two-party binary joint with or without a trivial source
    variable; all four setting pairs must have positive probability.
    """
    ids = set(dist.var_ids)
    if ids == {"s", "x1", "x2", "a1", "a2"}:
        if dist.size_of("s") != 1:
            raise ShapeMismatch("source outcome must be trivial or marginalized away")
        dist = marginal(dist, {"x1", "x2", "a1", "a2"})
    elif ids != {"x1", "x2", "a1", "a2"}:
        raise ShapeMismatch(f"expected the two-party Bell variables, got {sorted(ids)}")
    for v in ("x1", "x2", "a1", "a2"):
        if dist.size_of(v) != 2:
            raise ShapeMismatch(f"variable {v!r} must be binary")
    cond = conditional(dist, targets=["a1", "a2"], givens=["x1", "x2"])
    if not bool(cond.defined.all()):
        raise ShapeMismatch("all four setting pairs need positive probability")
    total = 0.0
    for x, y in itertools.product(range(2), repeat=2):
        p = cond.probs[(x, y)]
        e = p[0, 0] - p[0, 1] - p[1, 0] + p[1, 1]
        total += -e if (x, y) == (1, 1) else e
    return float(total)
