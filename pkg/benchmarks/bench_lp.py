"""Benchmark the phase-1 simplex kernel: numba JIT vs pure-numpy fallback.

The pivot loop is the one hot numeric loop in the package; everything else is
tensor contractions that numpy already vectorizes.  Both backends follow
identical pivot rules, so iteration counts must match; only wall time may
differ.  Run:

    python3 benchmarks/bench_lp.py

The CC_NO_NUMBA=1 environment flag makes the library itself use the numpy
path; here both are timed explicitly.
"""

import itertools
import time

import numpy as np

from causalcorr import bell as bm
from causalcorr._simplex import solve_phase1


def membership_problem(settings, outcomes, seed):
    """Constraint system of a local-membership LP for a random local mixture."""
    scenario = bm.BellScenario(settings=settings, outcomes=outcomes)
    strategies = bm.enumerate_strategies(scenario)
    rng = np.random.default_rng(seed)
    weights = rng.dirichlet(np.ones(len(strategies)))
    x_tuples = list(itertools.product(*(range(k) for k in settings)))
    n_a = int(np.prod(outcomes))
    a_sizes = tuple(outcomes)
    rows = []
    rhs = []
    for xt in x_tuples:
        block = np.zeros((n_a, len(strategies)))
        target = np.zeros(n_a)
        for j, strat in enumerate(strategies):
            at = tuple(strat[i][xt[i]] for i in range(scenario.n))
            idx = int(np.ravel_multi_index(at, a_sizes))
            block[idx, j] = 1.0
            target[idx] += weights[j]
        rows.append(block)
        rhs.append(target)
    rows.append(np.ones((1, len(strategies))))
    rhs.append(np.array([1.0]))
    return np.vstack(rows), np.concatenate(rhs)


def random_problem(m, n, seed):
    rng = np.random.default_rng(seed)
    a = rng.uniform(-1.0, 1.0, size=(m, n))
    b = a @ rng.uniform(0.0, 1.0, size=n)
    return a, b


def time_backend(a, b, backend, repeats=5):
    best = float("inf")
    iters = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        res = solve_phase1(a, b, backend=backend)
        best = min(best, time.perf_counter() - t0)
        iters = res.iterations
    return best, iters


def main():
    cases = [
        ("bell 2x(2/2)", *membership_problem((2, 2), (2, 2), seed=0)),
        ("bell 2x(3/2)", *membership_problem((3, 3), (2, 2), seed=0)),
        ("bell 2x(2/3)", *membership_problem((2, 2), (3, 3), seed=0)),
        ("bell 2x(3/3)", *membership_problem((3, 3), (3, 3), seed=0)),
        ("random 40x120", *random_problem(40, 120, seed=1)),
        ("random 80x400", *random_problem(80, 400, seed=2)),
    ]
    # warm the JIT so compilation time is not billed to the first case
    solve_phase1(np.array([[1.0, 1.0]]), np.array([1.0]), backend="numba")

    header = f"{'case':<16} {'shape':<10} {'pivots':>6} {'numba':>10} {'numpy':>10} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for name, a, b in cases:
        t_nb, it_nb = time_backend(a, b, "numba")
        t_np, it_np = time_backend(a, b, "numpy")
        assert it_nb == it_np, "backends diverged"
        print(
            f"{name:<16} {a.shape[0]}x{a.shape[1]:<7} {it_nb:>6} "
            f"{t_nb * 1e3:>8.2f}ms {t_np * 1e3:>8.2f}ms {t_np / t_nb:>7.1f}x"
        )


if __name__ == "__main__":
    main()
