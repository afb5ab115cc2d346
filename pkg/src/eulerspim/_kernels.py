"""Hot numeric kernels: numba-jitted loops with pure-numpy fallbacks.

Three kernel families live here, each with two interchangeable
implementations:

* ``edge_scores``  -- cut value and Hamiltonian of a spin config over an
  explicit edge list (called once per annealing iteration).
* ``sg_greedy``    -- Sahni-Gonzalez greedy placement over a CSR adjacency.
* ``gray_min``     -- exhaustive Hamiltonian minimisation over all configs
  with the first spin pinned, walking configs in Gray-code order with
  incremental local-field updates.

Set ``EULERSPIM_NO_NUMBA=1`` (or uninstall numba) to force the numpy
implementations.  ``eulerspim bench`` times both paths.
"""

import os

import numpy as np

DISABLE_ENV = "EULERSPIM_NO_NUMBA"

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(f):
            return f

        if args and callable(args[0]):
            return args[0]
        return wrap


def numba_enabled() -> bool:
    """True when the jitted kernels are selected for dispatch."""
    if os.environ.get(DISABLE_ENV, "").strip() not in ("", "0"):
        return False
    return _HAVE_NUMBA


# ---------------------------------------------------------------------------
# edge scores: cut value and Hamiltonian over an explicit edge list


def _edge_scores_impl(rows, cols, weights, x):
    cut = 0.0
    ham = 0.0
    for i in range(weights.shape[0]):
        p = x[rows[i]] * x[cols[i]]
        w = weights[i]
        ham += w * p
        if p < 0:
            cut += w
    return cut, ham


_edge_scores_nb = njit(cache=True)(_edge_scores_impl)


def _edge_scores_np(rows, cols, weights, x):
    prod = x[rows].astype(np.float64) * x[cols]
    ham = float(np.dot(weights, prod))
    cut = float(np.dot(weights, (prod < 0.0).astype(np.float64)))
    return cut, ham


def edge_scores(rows, cols, weights, x):
    """(cut, hamiltonian) of config ``x`` over edges (rows[i], cols[i])."""
    if numba_enabled():
        return _edge_scores_nb(rows, cols, weights, x.astype(np.float64))
    return _edge_scores_np(rows, cols, weights, x)


# ---------------------------------------------------------------------------
# Sahni-Gonzalez greedy over CSR adjacency
#
# Vertices are placed one at a time; each joins the side maximising its
# immediate cut to already-placed vertices.  Ties go to the smaller side,
# then to side A (+1).  x entries are 0 while unplaced.


def _sg_greedy_impl(indptr, indices, data, order):
    n = indptr.shape[0] - 1
    x = np.zeros(n, np.float64)
    count_a = 0
    count_b = 0
    for t in range(n):
        v = order[t]
        gain_a = 0.0  # cut gained by placing v on side A (+1)
        gain_b = 0.0
        for j in range(indptr[v], indptr[v + 1]):
            k = indices[j]
            if x[k] > 0:
                gain_b += data[j]
            elif x[k] < 0:
                gain_a += data[j]
        if gain_a > gain_b:
            side = 1.0
        elif gain_b > gain_a:
            side = -1.0
        else:
            if count_a < count_b:
                side = 1.0
            elif count_b < count_a:
                side = -1.0
            else:
                side = 1.0
        x[v] = side
        if side > 0:
            count_a += 1
        else:
            count_b += 1
    return x


_sg_greedy_nb = njit(cache=True)(_sg_greedy_impl)


def _sg_greedy_np(indptr, indices, data, order):
    n = indptr.shape[0] - 1
    x = np.zeros(n, np.float64)
    count_a = 0
    count_b = 0
    for v in order:
        lo, hi = indptr[v], indptr[v + 1]
        nbr = indices[lo:hi]
        w = data[lo:hi]
        xn = x[nbr]
        gain_b = float(np.dot(w, xn > 0))
        gain_a = float(np.dot(w, xn < 0))
        if gain_a > gain_b:
            side = 1.0
        elif gain_b > gain_a:
            side = -1.0
        else:
            side = 1.0 if count_a <= count_b else -1.0
        x[v] = side
        if side > 0:
            count_a += 1
        else:
            count_b += 1
    return x


def sg_greedy(indptr, indices, data, order):
    """Greedy max-cut placement; returns a +/-1 float vector."""
    if numba_enabled():
        return _sg_greedy_nb(indptr, indices, data, order)
    return _sg_greedy_np(indptr, indices, data, order)


# ---------------------------------------------------------------------------
# exhaustive minimisation by Gray-code walk
#
# Spin 0 is pinned to +1 (global-flip quotient).  Configs are identified by
# an integer whose bit (n-1-i) is set when spin i is -1, so integer order is
# lexicographic order preferring +1; the smallest optimal integer is kept.
# The running Hamiltonian is drift-corrected by an exact recomputation each
# time a new candidate minimum appears.


def _gray_min_impl(W):
    n = W.shape[0]
    x = np.ones(n, np.float64)
    h = np.empty(n, np.float64)  # local fields h_i = sum_k W[i,k] x_k
    for i in range(n):
        s = 0.0
        for k in range(n):
            s += W[i, k]
        h[i] = s
    ham = 0.0
    for i in range(n):
        for k in range(i + 1, n):
            ham += W[i, k]
    best_ham = ham
    best_code = np.int64(0)
    code = np.int64(0)
    run = ham
    total = np.int64(1) << (n - 1)
    for step in range(1, total):
        # lowest set bit of step -> which of spins 1..n-1 flips
        b = 0
        s = step
        while s & 1 == 0:
            s >>= 1
            b += 1
        i = 1 + b
        run -= 2.0 * x[i] * h[i]
        x[i] = -x[i]
        delta = 2.0 * x[i]
        for k in range(n):
            h[k] += delta * W[i, k]
        code ^= np.int64(1) << np.int64(n - 1 - i)
        if run <= best_ham + 1e-9 * (1.0 + abs(best_ham)):
            exact = 0.0
            for a in range(n):
                for bb in range(a + 1, n):
                    exact += W[a, bb] * x[a] * x[bb]
            run = exact
            if exact < best_ham or (exact == best_ham and code < best_code):
                best_ham = exact
                best_code = code
    return best_ham, best_code


_gray_min_nb = njit(cache=True)(_gray_min_impl)


def _gray_min_np(W, block_bits=16):
    n = W.shape[0]
    total = 1 << (n - 1)
    shifts = np.arange(n - 2, -1, -1, dtype=np.int64)  # spin i>=1 -> bit n-1-i
    best_ham = np.inf
    best_code = 0
    block = 1 << min(block_bits, n - 1)
    for start in range(0, total, block):
        codes = np.arange(start, min(start + block, total), dtype=np.int64)
        bits = (codes[:, None] >> shifts[None, :]) & 1
        X = np.empty((codes.shape[0], n), np.float64)
        X[:, 0] = 1.0
        X[:, 1:] = 1.0 - 2.0 * bits
        ham = 0.5 * np.einsum("ij,ij->i", X @ W, X)
        m = float(ham.min())
        if m < best_ham:
            best_ham = m
            best_code = int(codes[np.nonzero(ham == m)[0][0]])
        elif m == best_ham:
            code = int(codes[np.nonzero(ham == m)[0][0]])
            best_code = min(best_code, code)
    return best_ham, best_code


def gray_min(W):
    """Exact minimum of sum_{l<k} W[l,k] x_l x_k with x[0]=+1.

    Returns (min_hamiltonian, code); decode with :func:`code_to_config`.
    """
    if numba_enabled():
        ham, code = _gray_min_nb(np.ascontiguousarray(W, np.float64))
        return float(ham), int(code)
    return _gray_min_np(np.ascontiguousarray(W, np.float64))


def code_to_config(code: int, n: int) -> np.ndarray:
    """Expand a gray_min code into a +/-1 int8 config (spin 0 = +1)."""
    bits = (code >> np.arange(n - 1, -1, -1, dtype=np.int64)) & 1
    return (1 - 2 * bits).astype(np.int8)
