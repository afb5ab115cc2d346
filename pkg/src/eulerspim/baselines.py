"""Reference solvers: Sahni-Gonzalez greedy, exact brute force, random cuts."""

import time

import numpy as np

from . import _kernels, graphs
from .graphs import CutReport, MaxCutInstance, as_spin_config

BRUTE_FORCE_LIMIT = 24


def sahni_gonzalez(instance: MaxCutInstance, vertex_order=None) -> CutReport:
    """Greedy placement in the given order (default: natural order).

    Each vertex joins the side maximising its immediate weighted cut to the
    already-placed vertices; ties go to the smaller side, then side A.
    O(n + m) over explicit edges, O(n) on implicit complete instances.
    """
    n = instance.n
    if vertex_order is None:
        order = np.arange(n, dtype=np.int64)
    else:
        order = np.asarray(vertex_order, dtype=np.int64)
        if sorted(order.tolist()) != list(range(n)):
            raise ValueError("vertex_order must be a permutation of 0..n-1")
    start = time.perf_counter()
    if instance.is_implicit:
        x = _sg_rank2(instance, order)
    else:
        indptr, indices, data = instance.csr()
        x = _kernels.sg_greedy(indptr, indices, data, order)
    config = x.astype(np.int8)
    elapsed = time.perf_counter() - start
    cut, ham = graphs.cut_and_hamiltonian(instance, config)
    return CutReport(
        cut_value=cut,
        hamiltonian=ham,
        config=config,
        solver_id="sg",
        wall_time_seconds=elapsed,
    )


def _sg_rank2(instance: MaxCutInstance, order: np.ndarray) -> np.ndarray:
    # complete rank-2 graph: the immediate-cut difference of vertex v is
    # -(eps_v * Sx + sign * etaeff_v * Sy) over placed running sums
    enc = instance.rank2
    eps = enc.eps
    eta = enc.eta_eff
    sgn = enc.sign
    x = np.zeros(instance.n, dtype=np.float64)
    sx = sy = 0.0
    count_a = count_b = 0
    for v in order:
        diff = -(eps[v] * sx + sgn * eta[v] * sy)  # gain(A) - gain(B)
        if diff > 0:
            side = 1.0
        elif diff < 0:
            side = -1.0
        else:
            side = 1.0 if count_a <= count_b else -1.0
        x[v] = side
        if side > 0:
            count_a += 1
        else:
            count_b += 1
        sx += eps[v] * side
        sy += eta[v] * side
    return x


def brute_force_maxcut(instance: MaxCutInstance) -> CutReport:
    """Exact maximum cut by Gray-code enumeration with incremental updates.

    Guarded at n <= 24.  Returns the lexicographically smallest optimal
    configuration with the first spin fixed at +1 (global-flip quotient).
    """
    n = instance.n
    if n > BRUTE_FORCE_LIMIT:
        raise ValueError(
            f"brute force is guarded at n <= {BRUTE_FORCE_LIMIT}; got n={n}"
        )
    start = time.perf_counter()
    if n == 1:
        config = np.ones(1, dtype=np.int8)
    else:
        W = instance.dense()
        _, code = _kernels.gray_min(W)
        config = _kernels.code_to_config(code, n)
    elapsed = time.perf_counter() - start
    cut, ham = graphs.cut_and_hamiltonian(instance, config)
    return CutReport(
        cut_value=cut,
        hamiltonian=ham,
        config=config,
        solver_id="brute",
        wall_time_seconds=elapsed,
    )


def random_cut(instance: MaxCutInstance, samples: int, seed: int = 0) -> CutReport:
    """Best of uniformly random configurations; deterministic per seed."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    start = time.perf_counter()
    best_cut = -np.inf
    best = None
    for _ in range(samples):
        x = (rng.integers(0, 2, instance.n, dtype=np.int8) * 2 - 1).astype(np.int8)
        cut = graphs.cut_value(instance, x)
        if cut > best_cut:
            best_cut = cut
            best = x
    elapsed = time.perf_counter() - start
    return CutReport(
        cut_value=best_cut,
        hamiltonian=graphs.hamiltonian(instance, best),
        config=best,
        solver_id="random",
        wall_time_seconds=elapsed,
        seed=seed,
    )
