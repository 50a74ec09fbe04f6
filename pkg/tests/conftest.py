"""Shared fixtures: the standard scenario graphs and a few canonical inputs."""

import itertools

import numpy as np
import pytest

from causalcorr import dist as dm
from causalcorr.graph import CausalGraph


def bell_graph(outcomes: int = 2, source_outcomes: int = 1) -> CausalGraph:
    """Two-party scenario: source s and per-party setting/measurement arms."""
    return CausalGraph.build(
        [("s", source_outcomes), ("x", outcomes), ("y", outcomes), ("a", outcomes), ("b", outcomes)],
        [("s->a", "s", "a"), ("s->b", "s", "b"), ("x->a", "x", "a"), ("y->b", "y", "b")],
    )


def popescu_graph(outcomes: int = 2) -> CausalGraph:
    """Preselection scenario: intermediate measurements ap, bp between source and arms."""
    return CausalGraph.build(
        [
            ("s", outcomes),
            ("ap", outcomes),
            ("bp", outcomes),
            ("x", outcomes),
            ("y", outcomes),
            ("a", outcomes),
            ("b", outcomes),
        ],
        [
            ("s->ap", "s", "ap"),
            ("s->bp", "s", "bp"),
            ("ap->a", "ap", "a"),
            ("bp->b", "bp", "b"),
            ("x->a", "x", "a"),
            ("y->b", "y", "b"),
        ],
    )


def bilocality_graph(outcomes: int = 2) -> CausalGraph:
    """Two independent sources s, t feeding three measurement stations."""
    return CausalGraph.build(
        [
            ("s", outcomes),
            ("t", outcomes),
            ("x", outcomes),
            ("y", outcomes),
            ("z", outcomes),
            ("a", outcomes),
            ("b", outcomes),
            ("c", outcomes),
        ],
        [
            ("s->a", "s", "a"),
            ("s->b", "s", "b"),
            ("t->b", "t", "b"),
            ("t->c", "t", "c"),
            ("x->a", "x", "a"),
            ("y->b", "y", "b"),
            ("z->c", "z", "c"),
        ],
    )


def triangle_graph(outcomes: int = 2) -> CausalGraph:
    """Three roots, each feeding the two measurement nodes it does not face."""
    return CausalGraph.build(
        [
            ("x", outcomes),
            ("y", outcomes),
            ("z", outcomes),
            ("a", outcomes),
            ("b", outcomes),
            ("c", outcomes),
        ],
        [
            ("x->b", "x", "b"),
            ("x->c", "x", "c"),
            ("y->a", "y", "a"),
            ("y->c", "y", "c"),
            ("z->a", "z", "a"),
            ("z->b", "z", "b"),
        ],
    )


def sequential_graph(outcomes: int = 2) -> CausalGraph:
    """Two rounds of measurements per arm, each with its own setting."""
    return CausalGraph.build(
        [
            ("s", outcomes),
            ("xp", outcomes),
            ("yp", outcomes),
            ("ap", outcomes),
            ("bp", outcomes),
            ("x", outcomes),
            ("y", outcomes),
            ("a", outcomes),
            ("b", outcomes),
        ],
        [
            ("s->ap", "s", "ap"),
            ("s->bp", "s", "bp"),
            ("xp->ap", "xp", "ap"),
            ("yp->bp", "yp", "bp"),
            ("ap->a", "ap", "a"),
            ("bp->b", "bp", "b"),
            ("x->a", "x", "a"),
            ("y->b", "y", "b"),
        ],
    )


def all_test_graphs(outcomes: int = 2) -> dict[str, CausalGraph]:
    return {
        "bell": bell_graph(outcomes),
        "popescu": popescu_graph(outcomes),
        "bilocality": bilocality_graph(outcomes),
        "triangle": triangle_graph(outcomes),
        "sequential": sequential_graph(outcomes),
    }


def pr_box_dist() -> dm.JointDistribution:
    """PR box conditional with uniform binary settings and a trivial source."""
    table = np.zeros((1, 2, 2, 2, 2))
    for x, y, a, b in itertools.product(range(2), repeat=4):
        if a ^ b == x * y:
            table[0, x, y, a, b] = 0.125
    return dm.JointDistribution(
        (("s", 1), ("x1", 2), ("x2", 2), ("a1", 2), ("a2", 2)), table
    )


@pytest.fixture
def bell():
    return bell_graph()


@pytest.fixture
def popescu():
    return popescu_graph()


@pytest.fixture
def bilocality():
    return bilocality_graph()


@pytest.fixture
def triangle():
    return triangle_graph()


@pytest.fixture
def sequential():
    return sequential_graph()
