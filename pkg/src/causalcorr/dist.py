"""Dense joint probability tables over finite variables.

Tables are numpy arrays whose shape is the tuple of alphabet sizes, stored in
row-major order, so flat index and outcome tuple correspond the usual way.
Desk-scale only: total table size is capped (override with CC_MAX_STATE_SPACE).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadEpsilon,
    OverlappingSets,
    SchemaError,
    ShapeMismatch,
    SizeLimitExceeded,
    UnknownVariable,
    VariableCollision,
    VariableMismatch,
)
from ._config import max_state_space

DEFAULT_NORM_TOL = 1e-9
DEFAULT_ZERO_TOL = 1e-12


@dataclass
class JointDistribution:
    """Joint distribution of finitely many variables as one dense table.

    ``variables`` is an ordered tuple of ``(var_id, alphabet_size)``;
    ``table`` has exactly that shape.  Entries are non-negative and sum to 1
    within ``norm_tol`` unless the table is flagged ``unnormalized``.

    Marginals remember the table they were derived from (``_root``), so
    summing out variables in stages is bit-identical to summing them out in
    one step: both end up as the same single numpy reduction over the root.
    """

    variables: tuple[tuple[str, int], ...]
    table: np.ndarray
    unnormalized: bool = False
    norm_tol: float = DEFAULT_NORM_TOL
    _root: np.ndarray | None = field(default=None, repr=False, compare=False)
    _root_axes: tuple[int, ...] | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.variables = tuple((str(v), int(k)) for v, k in self.variables)
        sizes = tuple(k for _, k in self.variables)
        if any(k < 1 for k in sizes):
            raise ShapeMismatch("alphabet sizes must be >= 1")
        total = int(np.prod(sizes, dtype=np.int64)) if sizes else 1
        if total > max_state_space():
            raise SizeLimitExceeded(f"table with {total} entries exceeds the size guard")
        ids = [v for v, _ in self.variables]
        if len(set(ids)) != len(ids):
            raise VariableCollision(f"duplicate variable ids in {ids}")
        self.table = np.asarray(self.table, dtype=float).reshape(sizes)
        if np.any(self.table < 0):
            worst = float(self.table.min())
            raise ShapeMismatch(f"negative table entry {worst}")
        if not self.unnormalized:
            s = float(self.table.sum())
            if abs(s - 1.0) > self.norm_tol:
                raise ShapeMismatch(f"table sums to {s}, not 1 within {self.norm_tol}")
        if self._root is None:
            self._root = self.table
            self._root_axes = tuple(range(self.table.ndim))

    @property
    def var_ids(self) -> tuple[str, ...]:
        return tuple(v for v, _ in self.variables)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(k for _, k in self.variables)

    def size_of(self, var_id: str) -> int:
        for v, k in self.variables:
            if v == var_id:
                return k
        raise UnknownVariable(f"unknown variable {var_id!r}")

    def reorder(self, order: list[str] | tuple[str, ...]) -> "JointDistribution":
        """Same distribution with the variables permuted into the given order."""
        if set(order) != set(self.var_ids) or len(order) != len(self.var_ids):
            raise VariableMismatch(f"{order} is not a permutation of {self.var_ids}")
        perm = [self.var_ids.index(v) for v in order]
        return JointDistribution(
            variables=tuple(self.variables[i] for i in perm),
            table=np.transpose(self.table, perm),
            unnormalized=self.unnormalized,
            norm_tol=self.norm_tol,
            _root=self._root,
            _root_axes=tuple(self._root_axes[i] for i in perm),
        )


def marginal(dist: JointDistribution, keep) -> JointDistribution:
    """Sum out all variables not in ``keep``; kept variables keep their relative order.

    The reduction always runs over the root table in one numpy call, so
    ``marginal(marginal(P, A), B)`` equals ``marginal(P, B)`` exactly.
    """
    keep = set(keep)
    unknown = keep - set(dist.var_ids)
    if unknown:
        raise UnknownVariable(f"unknown variables {sorted(unknown)}")
    kept = [(v, k) for v, k in dist.variables if v in keep]
    kept_root_axes = [dist._root_axes[i] for i, (v, _) in enumerate(dist.variables) if v in keep]
    removed = tuple(sorted(set(range(dist._root.ndim)) - set(kept_root_axes)))
    table = dist._root.sum(axis=removed) if removed else dist._root
    # numpy leaves the surviving axes in root order; restore the kept order
    rank = {ax: i for i, ax in enumerate(sorted(kept_root_axes))}
    perm = [rank[ax] for ax in kept_root_axes]
    table = np.transpose(table, perm)
    return JointDistribution(
        tuple(kept),
        table,
        unnormalized=dist.unnormalized,
        norm_tol=dist.norm_tol,
        _root=dist._root,
        _root_axes=tuple(kept_root_axes),
    )


@dataclass
class ConditionalTable:
    """Conditionals of targets given tuples of given-variable values.

    ``probs[given_tuple + target_tuple]`` is the conditional probability; rows
    whose given-tuple has marginal probability below ``zero_tol`` are undefined
    (``defined`` is False there and the row is all zero).
    """

    targets: tuple[tuple[str, int], ...]
    givens: tuple[tuple[str, int], ...]
    probs: np.ndarray
    defined: np.ndarray
    zero_tol: float = DEFAULT_ZERO_TOL

    def row(self, given_tuple: tuple[int, ...]) -> np.ndarray:
        if not self.defined[given_tuple]:
            raise ShapeMismatch(f"conditional undefined at given values {given_tuple}")
        return self.probs[given_tuple]


def conditional(
    dist: JointDistribution, targets, givens, zero_tol: float = DEFAULT_ZERO_TOL
) -> ConditionalTable:
    """Conditional distribution of ``targets`` given ``givens``.

    Variables outside both sets are marginalized out first.  Only given-tuples
    with marginal probability above ``zero_tol`` get a (normalized) row.
    """
    targets = list(targets)
    givens = list(givens)
    if set(targets) & set(givens):
        raise OverlappingSets(f"targets and givens overlap: {set(targets) & set(givens)}")
    for v in targets + givens:
        if v not in dist.var_ids:
            raise UnknownVariable(f"unknown variable {v!r}")
    sub = marginal(dist, set(targets) | set(givens))
    sub = sub.reorder(tuple(givens) + tuple(targets))
    g = len(givens)
    given_vars = sub.variables[:g]
    target_vars = sub.variables[g:]
    given_shape = tuple(k for _, k in given_vars)
    target_axes = tuple(range(g, len(sub.variables)))
    weights = sub.table.sum(axis=target_axes) if target_axes else sub.table
    weights = np.asarray(weights).reshape(given_shape)
    defined = weights > zero_tol
    safe = np.where(defined, weights, 1.0)
    probs = sub.table / safe.reshape(given_shape + (1,) * len(target_vars))
    probs = np.where(defined.reshape(given_shape + (1,) * len(target_vars)), probs, 0.0)
    return ConditionalTable(
        targets=target_vars, givens=given_vars, probs=probs, defined=defined, zero_tol=zero_tol
    )


def product(d1: JointDistribution, d2: JointDistribution) -> JointDistribution:
    """Outer product of two distributions over disjoint variable sets."""
    shared = set(d1.var_ids) & set(d2.var_ids)
    if shared:
        raise VariableCollision(f"shared variables {sorted(shared)}")
    table = np.multiply.outer(d1.table, d2.table)
    return JointDistribution(
        d1.variables + d2.variables,
        table,
        unnormalized=d1.unnormalized or d2.unnormalized,
        norm_tol=max(d1.norm_tol, d2.norm_tol),
    )


def tv_distance(d1: JointDistribution, d2: JointDistribution) -> float:
    """Total variation distance (half the L1 distance); requires identical variable lists."""
    if d1.variables != d2.variables:
        raise VariableMismatch(f"{d1.variables} vs {d2.variables}")
    return 0.5 * float(np.abs(d1.table - d2.table).sum())


@dataclass
class CoarseGraining:
    """A function from a product of finite factors onto a finite set."""

    domain: tuple[int, ...]
    codomain: int
    map: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.domain = tuple(int(k) for k in self.domain)
        self.map = np.asarray(self.map, dtype=np.int64).reshape(self.domain)
        if self.map.size and (self.map.min() < 0 or self.map.max() >= self.codomain):
            raise ShapeMismatch("coarse-graining map has values outside the codomain")


@dataclass
class Factorization:
    """Per-factor surjections plus a composed map approximating a coarse-graining.

    ``factor_maps[k][x]`` is the image of factor value ``x`` in the reduced
    alphabet of factor ``k``; ``composed`` maps reduced tuples to the original
    codomain.  ``achieved_error`` is the exact probability (under the input
    distribution) that composing the factor maps with ``composed`` disagrees
    with the original map.
    """

    factor_maps: tuple[np.ndarray, ...]
    composed: np.ndarray
    achieved_error: float
    sizes: tuple[int, ...]


def _partition_error_and_g(p_table, f_map, labels, group_sizes, codomain):
    """Exact disagreement mass and the optimal composed map for a factor partition.

    The composed map sends each reduced cell to the map value carrying the
    most probability there, and the error is the summed probability of the
    tuples that disagree - computed by direct enumeration, so it is a sum of
    non-negative entries and never goes negative by cancellation.
    """
    grids = np.meshgrid(*labels, indexing="ij")
    cells = np.ravel_multi_index(tuple(g.ravel() for g in grids), group_sizes)
    n_cells = int(np.prod(group_sizes, dtype=np.int64))
    mass = np.zeros((n_cells, codomain))
    np.add.at(mass, (cells, f_map.ravel()), p_table.ravel())
    g_flat = mass.argmax(axis=1)
    # Zero-mass cells carry no error either way; pin them to the map value of
    # the first tuple (row-major) landing in the cell, for reproducibility.
    zero_cells = ~(mass.sum(axis=1) > 0)
    if zero_cells.any():
        _, first = np.unique(cells, return_index=True)
        first_value = np.zeros(n_cells, dtype=np.int64)
        first_value[np.unique(cells)] = f_map.ravel()[first]
        g_flat = np.where(zero_cells, first_value, g_flat)
    disagree = g_flat[cells] != f_map.ravel()
    err = float(p_table.ravel()[disagree].sum())
    return err, g_flat.reshape(group_sizes)


def factor_coarse_graining(
    dist: JointDistribution, cg: CoarseGraining, eps: float
) -> Factorization:
    """Factor a coarse-graining through per-factor compressions, up to error ``eps``.

    Starts from the identity factorization (always exact on finite sets) and
    greedily merges factor values whose merge keeps the exact disagreement
    probability within ``eps``; merge order is ascending factor index, then
    ascending value pairs.  The reported error is recomputed by full
    enumeration, never estimated.
    """
    if not (0.0 <= eps <= 1.0):
        raise BadEpsilon(f"eps={eps} outside [0, 1]")
    if dist.sizes != cg.domain:
        raise ShapeMismatch(f"distribution sizes {dist.sizes} != coarse-graining domain {cg.domain}")
    n = len(cg.domain)
    # groups[k] is a list of sorted lists of original values; group order is by
    # smallest member, which keeps the relabelling deterministic.
    groups: list[list[list[int]]] = [[[x] for x in range(size)] for size in cg.domain]

    def labels_of(gs):
        labs = []
        for k in range(n):
            lab = np.empty(cg.domain[k], dtype=np.int64)
            for gi, members in enumerate(gs[k]):
                for x in members:
                    lab[x] = gi
            labs.append(lab)
        return labs

    def error_of(gs):
        labs = labels_of(gs)
        sizes = tuple(len(g) for g in gs)
        err, _ = _partition_error_and_g(dist.table, cg.map, labs, sizes, cg.codomain)
        return err

    for k in range(n):
        merged = True
        while merged:
            merged = False
            m = len(groups[k])
            for i in range(m):
                for j in range(i + 1, m):
                    trial = [list(map(list, g)) for g in groups]
                    combined = sorted(trial[k][i] + trial[k][j])
                    del trial[k][j]
                    trial[k][i] = combined
                    trial[k].sort(key=lambda g: g[0])
                    if error_of(trial) <= eps:
                        groups = trial
                        merged = True
                        break
                if merged:
                    break

    labs = labels_of(groups)
    sizes = tuple(len(g) for g in groups)
    err, g_map = _partition_error_and_g(dist.table, cg.map, labs, sizes, cg.codomain)
    return Factorization(
        factor_maps=tuple(labs),
        composed=g_map,
        achieved_error=err,
        sizes=sizes,
    )


def dist_to_dict(dist: JointDistribution) -> dict:
    return {
        "vars": [{"id": v, "size": k} for v, k in dist.variables],
        "probs": [float(x) for x in dist.table.ravel()],
    }


def dist_from_dict(data: dict, norm_tol: float = DEFAULT_NORM_TOL) -> JointDistribution:
    """Parse the distribution JSON schema; unknown fields are rejected."""
    if not isinstance(data, dict) or set(data) != {"vars", "probs"}:
        raise SchemaError(f"malformed distribution JSON near {data!r}")
    variables = []
    for item in data["vars"]:
        if not isinstance(item, dict) or set(item) != {"id", "size"}:
            raise SchemaError(f"malformed distribution JSON near {item!r}")
        variables.append((str(item["id"]), int(item["size"])))
    sizes = tuple(k for _, k in variables)
    expected = int(np.prod(sizes, dtype=np.int64)) if sizes else 1
    probs = data["probs"]
    if len(probs) != expected:
        raise SchemaError(f"probs has {len(probs)} entries, expected {expected}")
    return JointDistribution(tuple(variables), np.asarray(probs, dtype=float), norm_tol=norm_tol)
