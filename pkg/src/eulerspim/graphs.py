"""Max-cut instances, spin configs, rank-2 weight encodings and scoring.

Weighted graphs are stored as unordered vertex pairs (l < k).  Instances
produced at full density from a rank-2 encoding may instead be backed
implicitly by that encoding, in which case cut/Hamiltonian/total-weight
queries run in O(n) through the closed-form power sums rather than touching
n(n-1)/2 explicit pairs.
"""

import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels

# explicit edge materialisation above this vertex count is refused by the
# helpers that would need a dense n x n intermediate
DENSE_LIMIT = 4096


def as_spin_config(x) -> np.ndarray:
    """Validate and return a +/-1 int8 spin vector."""
    arr = np.asarray(x)
    if arr.ndim != 1:
        raise ValueError("spin config must be one-dimensional")
    out = arr.astype(np.int8)
    if not np.all(np.abs(out) == 1) or not np.all(arr == out):
        raise ValueError("spin config entries must be exactly +1 or -1")
    return out


@dataclass(frozen=True)
class AuxMap:
    """Signed permutation acting on spin vectors: y[perm[l]] = sigma[l] * x[l]."""

    perm: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        perm = np.asarray(self.perm, dtype=np.int64)
        sigma = np.asarray(self.sigma, dtype=np.int8)
        if perm.shape != sigma.shape or perm.ndim != 1:
            raise ValueError("perm and sigma must be 1-d arrays of equal length")
        if sorted(perm.tolist()) != list(range(perm.size)):
            raise ValueError("perm must be a permutation of 0..n-1")
        if not np.all(np.abs(sigma) == 1):
            raise ValueError("sigma entries must be +1 or -1")
        object.__setattr__(self, "perm", perm)
        object.__setattr__(self, "sigma", sigma)

    @staticmethod
    def identity(n: int) -> "AuxMap":
        return AuxMap(np.arange(n, dtype=np.int64), np.ones(n, dtype=np.int8))

    @property
    def n(self) -> int:
        return self.perm.size

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Map a +/-1 vector to the auxiliary +/-1 vector y."""
        y = np.empty_like(x)
        y[self.perm] = self.sigma * x
        return y


@dataclass(frozen=True)
class Rank2Encoding:
    """Per-spin phase pairs realising w_lk = eps_l eps_k + sign * etaeff_l etaeff_k.

    alpha and beta are phases in [0, pi]; the machine amplitudes are their
    cosines.  The auxiliary map routes the second quadrature, giving the
    effective amplitudes etaeff_l = sigma[l] * eta[perm[l]].
    """

    alpha: np.ndarray
    beta: np.ndarray
    sign: int = 1
    aux: AuxMap | None = None

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=np.float64)
        beta = np.asarray(self.beta, dtype=np.float64)
        if alpha.shape != beta.shape or alpha.ndim != 1:
            raise ValueError("alpha and beta must be 1-d arrays of equal length")
        if np.any(alpha < -1e-12) or np.any(alpha > math.pi + 1e-12):
            raise ValueError("alpha phases must lie in [0, pi]")
        if np.any(beta < -1e-12) or np.any(beta > math.pi + 1e-12):
            raise ValueError("beta phases must lie in [0, pi]")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        aux = self.aux if self.aux is not None else AuxMap.identity(alpha.size)
        if aux.n != alpha.size:
            raise ValueError("aux map size does not match spin count")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "aux", aux)

    @property
    def n(self) -> int:
        return self.alpha.size

    @property
    def eps(self) -> np.ndarray:
        return np.cos(self.alpha)

    @property
    def eta(self) -> np.ndarray:
        return np.cos(self.beta)

    @property
    def eta_eff(self) -> np.ndarray:
        """Second-quadrature amplitudes as seen by the primary spin index."""
        return self.aux.sigma * self.eta[self.aux.perm]


@dataclass(frozen=True)
class MaxCutInstance:
    """Symmetric weighted graph with zero diagonal.

    Either ``rows/cols/weights`` hold the explicit nonzero unordered pairs
    (rows[i] < cols[i], canonical row-major order), or ``rank2`` holds an
    encoding and the instance is the complete graph it generates.
    """

    n: int
    rows: np.ndarray | None = None
    cols: np.ndarray | None = None
    weights: np.ndarray | None = None
    rank2: Rank2Encoding | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("vertex count must be positive")
        if self.rank2 is not None:
            if self.rows is not None:
                raise ValueError("instance cannot be both explicit and implicit")
            if self.rank2.n != self.n:
                raise ValueError("encoding size does not match vertex count")
            return
        rows = np.asarray(self.rows, dtype=np.int64)
        cols = np.asarray(self.cols, dtype=np.int64)
        weights = np.asarray(self.weights, dtype=np.float64)
        if not (rows.shape == cols.shape == weights.shape) or rows.ndim != 1:
            raise ValueError("rows, cols, weights must be 1-d arrays of equal length")
        if rows.size and (rows.min() < 0 or cols.max() >= self.n):
            raise ValueError("vertex index out of range")
        if np.any(rows >= cols):
            raise ValueError("pairs must satisfy l < k")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "weights", weights)

    @property
    def is_implicit(self) -> bool:
        return self.rank2 is not None

    @property
    def num_edges(self) -> int:
        if self.is_implicit:
            return self.n * (self.n - 1) // 2
        return int(self.weights.size)

    @property
    def density(self) -> float:
        total = self.n * (self.n - 1) // 2
        if total == 0:
            return 0.0
        if self.is_implicit:
            return 1.0
        return float(np.count_nonzero(self.weights)) / total

    def dense(self) -> np.ndarray:
        """Dense symmetric weight matrix with zero diagonal."""
        if self.n > DENSE_LIMIT:
            raise ValueError(f"refusing dense matrix for n={self.n} > {DENSE_LIMIT}")
        W = np.zeros((self.n, self.n), dtype=np.float64)
        if self.is_implicit:
            e = self.rank2.eps
            h = self.rank2.eta_eff
            W = np.outer(e, e) + self.rank2.sign * np.outer(h, h)
            np.fill_diagonal(W, 0.0)
        else:
            W[self.rows, self.cols] = self.weights
            W[self.cols, self.rows] = self.weights
        return W

    def materialize(self) -> "MaxCutInstance":
        """Explicit-edge copy of an implicit instance (identity otherwise)."""
        if not self.is_implicit:
            return self
        W = self.dense()
        iu = np.triu_indices(self.n, 1)
        w = W[iu]
        keep = w != 0.0
        return MaxCutInstance(
            n=self.n,
            rows=iu[0][keep],
            cols=iu[1][keep],
            weights=w[keep],
            metadata=dict(self.metadata),
        )

    def csr(self):
        """Symmetric CSR adjacency (indptr, indices, data) over explicit edges."""
        inst = self.materialize() if self.is_implicit else self
        nnz = inst.weights != 0.0
        r = inst.rows[nnz]
        c = inst.cols[nnz]
        w = inst.weights[nnz]
        src = np.concatenate([r, c])
        dst = np.concatenate([c, r])
        dat = np.concatenate([w, w])
        order = np.lexsort((dst, src))
        src, dst, dat = src[order], dst[order], dat[order]
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.add.at(indptr, src + 1, 1)
        np.cumsum(indptr, out=indptr)
        return indptr, dst.astype(np.int64), dat


@dataclass(frozen=True)
class CutReport:
    """Scored solver output in summed-weight units."""

    cut_value: float
    hamiltonian: float
    config: np.ndarray
    solver_id: str
    wall_time_seconds: float = 0.0
    seed: int | None = None


def _rank2_sums(enc: Rank2Encoding, x: np.ndarray):
    e = enc.eps
    h = enc.eta_eff
    xf = x.astype(np.float64)
    sx = float(np.dot(e, xf))
    sy = float(np.dot(h, xf))
    return sx, sy, float(np.dot(e, e)), float(np.dot(h, h))


def _check_length(instance: MaxCutInstance, x: np.ndarray):
    if x.shape[0] != instance.n:
        raise ValueError(
            f"config length {x.shape[0]} does not match instance size {instance.n}"
        )


def hamiltonian(instance: MaxCutInstance, config) -> float:
    """Sum over unordered pairs of w_lk * x_l * x_k."""
    x = as_spin_config(config)
    _check_length(instance, x)
    if instance.is_implicit:
        enc = instance.rank2
        sx, sy, se, sh = _rank2_sums(enc, x)
        return 0.5 * ((sx * sx - se) + enc.sign * (sy * sy - sh))
    _, ham = _kernels.edge_scores(instance.rows, instance.cols, instance.weights, x)
    return ham


def cut_value(instance: MaxCutInstance, config) -> float:
    """Total weight of edges whose endpoints take opposite spins."""
    x = as_spin_config(config)
    _check_length(instance, x)
    if instance.is_implicit:
        return 0.5 * (total_weight(instance) - hamiltonian(instance, x))
    cut, _ = _kernels.edge_scores(instance.rows, instance.cols, instance.weights, x)
    return cut


def cut_and_hamiltonian(instance: MaxCutInstance, config) -> tuple[float, float]:
    """Both scores in one pass (the annealer's per-iteration call)."""
    x = as_spin_config(config)
    _check_length(instance, x)
    if instance.is_implicit:
        ham = hamiltonian(instance, x)
        return 0.5 * (total_weight(instance) - ham), ham
    return _kernels.edge_scores(instance.rows, instance.cols, instance.weights, x)


def total_weight(instance: MaxCutInstance) -> float:
    """Sum of all pair weights."""
    if instance.is_implicit:
        enc = instance.rank2
        ones = np.ones(instance.n, dtype=np.int8)
        sx, sy, se, sh = _rank2_sums(enc, ones)
        return 0.5 * ((sx * sx - se) + enc.sign * (sy * sy - sh))
    return float(instance.weights.sum())


def weights_from_encoding(enc: Rank2Encoding) -> MaxCutInstance:
    """Materialise the weighted graph an encoding realises.

    w_lk = eps_l eps_k + sign * etaeff_l etaeff_k over unordered pairs; exact
    zeros are dropped, which is what the density reflects.
    """
    if enc.n > DENSE_LIMIT:
        raise ValueError(f"refusing to materialise n={enc.n} > {DENSE_LIMIT} weights")
    e = enc.eps
    h = enc.eta_eff
    W = np.outer(e, e) + enc.sign * np.outer(h, h)
    iu = np.triu_indices(enc.n, 1)
    w = W[iu]
    keep = w != 0.0
    return MaxCutInstance(
        n=enc.n,
        rows=iu[0][keep],
        cols=iu[1][keep],
        weights=w[keep],
        metadata={"family": "rank2"},
    )


def generate_instance(n: int, density: float = 1.0, sign: int = 1, seed: int = 0):
    """Random rank-2-encodable instance at a prescribed density.

    Phases are drawn i.i.d. uniform on [0, pi]; the smallest-magnitude pair
    weights are zeroed until exactly floor(density * n(n-1)/2) nonzero pairs
    remain.  Returns (instance, encoding) where the encoding is the
    un-sparsified parent: the machine optimises the parent while cut values
    are scored on the sparsified instance.
    """
    if n < 2:
        raise ValueError("need at least two vertices")
    if not (0.0 < density <= 1.0):
        raise ValueError("density must lie in (0, 1]")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    rng = np.random.default_rng(seed)
    alpha = rng.uniform(0.0, math.pi, n)
    beta = rng.uniform(0.0, math.pi, n)
    enc = Rank2Encoding(alpha=alpha, beta=beta, sign=sign)
    total_pairs = n * (n - 1) // 2
    keep = int(math.floor(density * total_pairs))
    if keep < 1:
        raise ValueError("density so low that the graph would be empty")
    meta = {"family": "rank2-random", "seed": seed, "density": density, "sign": sign}
    if keep == total_pairs and n > DENSE_LIMIT:
        # complete graph of the encoding: keep it implicit, O(n) scoring
        return MaxCutInstance(n=n, rank2=enc, metadata=meta), enc
    inst = weights_from_encoding(enc)
    if keep < inst.weights.size:
        order = np.argsort(np.abs(inst.weights), kind="stable")
        kept = np.sort(order[inst.weights.size - keep :])
        inst = MaxCutInstance(
            n=n,
            rows=inst.rows[kept],
            cols=inst.cols[kept],
            weights=inst.weights[kept],
            metadata=meta,
        )
    else:
        inst = MaxCutInstance(
            n=n, rows=inst.rows, cols=inst.cols, weights=inst.weights, metadata=meta
        )
    return inst, enc


def fit_rank2(instance: MaxCutInstance, max_iter: int = 500, tol: float = 1e-13):
    """Best two-term signed spectral approximation of the instance weights.

    The diagonal is free (it only shifts the Hamiltonian by a constant), so
    the fit alternates eigen-truncation with diagonal completion: truncate
    W + D to the two admissible largest-|eigenvalue| terms, refresh D from
    the truncation, repeat.  The first term's coefficient must be
    nonnegative (the encoding family is eps eps^T +/- eta eta^T), so at most
    one negative eigenvalue can be kept.

    Returns (encoding, residual) with residual the off-diagonal Frobenius
    norm of the approximation error.  Amplitudes are rescaled into [-1, 1]
    when needed; uniform rescaling multiplies the Hamiltonian by a positive
    constant and leaves the optimal configuration unchanged.
    """
    if instance.n < 2:
        raise ValueError("need at least two vertices")
    W = instance.dense()
    n = instance.n
    D = np.zeros(n)
    vals = vecs = None
    pick = []
    for _ in range(max_iter):
        M = W + np.diag(D)
        vals, vecs = np.linalg.eigh(M)
        pick = _pick_two_terms(vals)
        approx = np.zeros((n, n))
        for i in pick:
            approx += vals[i] * np.outer(vecs[:, i], vecs[:, i])
        new_d = np.diag(approx).copy()
        if np.max(np.abs(new_d - D)) <= tol * max(1.0, np.max(np.abs(W))):
            D = new_d
            break
        D = new_d
    M = W + np.diag(D)
    vals, vecs = np.linalg.eigh(M)
    pick = _pick_two_terms(vals)
    approx = np.zeros((n, n))
    for i in pick:
        approx += vals[i] * np.outer(vecs[:, i], vecs[:, i])
    diff = W - approx
    np.fill_diagonal(diff, 0.0)
    residual = float(np.linalg.norm(diff))

    pos = [i for i in pick if vals[i] >= 0]
    neg = [i for i in pick if vals[i] < 0]
    eps_vec = np.zeros(n)
    eta_vec = np.zeros(n)
    sgn = 1
    if len(pos) == 2:
        eps_vec = math.sqrt(vals[pos[0]]) * vecs[:, pos[0]]
        eta_vec = math.sqrt(vals[pos[1]]) * vecs[:, pos[1]]
        sgn = 1
    elif len(pos) == 1 and len(neg) == 1:
        eps_vec = math.sqrt(vals[pos[0]]) * vecs[:, pos[0]]
        eta_vec = math.sqrt(-vals[neg[0]]) * vecs[:, neg[0]]
        sgn = -1
    elif len(pos) == 1:
        eps_vec = math.sqrt(vals[pos[0]]) * vecs[:, pos[0]]
        sgn = 1
    elif len(neg) == 1:
        eta_vec = math.sqrt(-vals[neg[0]]) * vecs[:, neg[0]]
        sgn = -1
    scale = max(1.0, np.max(np.abs(eps_vec), initial=0.0), np.max(np.abs(eta_vec), initial=0.0))
    eps_vec = eps_vec / scale
    eta_vec = eta_vec / scale
    enc = Rank2Encoding(
        alpha=np.arccos(np.clip(eps_vec, -1.0, 1.0)),
        beta=np.arccos(np.clip(eta_vec, -1.0, 1.0)),
        sign=sgn,
    )
    return enc, residual


def _pick_two_terms(vals: np.ndarray):
    """Indices of the admissible eigenpair subset maximising captured energy.

    Admissible subsets keep at most two eigenvalues with at most one of them
    negative; captured energy is the sum of squared eigenvalues.
    """
    order = np.argsort(-np.abs(vals))
    pos = [int(i) for i in order if vals[i] >= 0]
    neg = [int(i) for i in order if vals[i] < 0]
    candidates = []
    if len(pos) >= 2:
        candidates.append([pos[0], pos[1]])
    if pos and neg:
        candidates.append([pos[0], neg[0]])
    if pos:
        candidates.append([pos[0]])
    if neg:
        candidates.append([neg[0]])
    candidates.append([])
    best = max(candidates, key=lambda idx: sum(vals[i] ** 2 for i in idx))
    return best


# ---------------------------------------------------------------------------
# edge-list text format
#
# line 1: "n m"; then m lines "l k w" with 1-based indices l < k; comment
# lines start with '#'.  Metadata round-trips through '# key: value'
# comments emitted after the header.


def serialize_instance(instance: MaxCutInstance) -> str:
    inst = instance.materialize() if instance.is_implicit else instance
    buf = io.StringIO()
    buf.write(f"{inst.n} {inst.weights.size}\n")
    for key in sorted(inst.metadata):
        buf.write(f"# {key}: {inst.metadata[key]}\n")
    for l, k, w in zip(inst.rows, inst.cols, inst.weights):
        buf.write(f"{l + 1} {k + 1} {w!r}\n")
    return buf.getvalue()


def parse_instance(text: str) -> MaxCutInstance:
    n = m = None
    rows, cols, weights = [], [], []
    metadata = {}
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if ":" in body:
                key, _, val = body.partition(":")
                metadata[key.strip()] = val.strip()
            continue
        parts = line.split()
        if n is None:
            if len(parts) != 2:
                raise ValueError(f"line {lineno}: expected header 'n m'")
            try:
                n, m = int(parts[0]), int(parts[1])
            except ValueError:
                raise ValueError(f"line {lineno}: malformed header") from None
            if n < 1 or m < 0:
                raise ValueError(f"line {lineno}: invalid header values")
            continue
        if len(parts) != 3:
            raise ValueError(f"line {lineno}: expected 'l k w'")
        try:
            l, k, w = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise ValueError(f"line {lineno}: malformed edge line") from None
        if not (1 <= l < k <= n):
            raise ValueError(f"line {lineno}: index out of range (need 1 <= l < k <= n)")
        if (l, k) in seen:
            raise ValueError(f"line {lineno}: duplicate pair ({l}, {k})")
        seen.add((l, k))
        rows.append(l - 1)
        cols.append(k - 1)
        weights.append(w)
    if n is None:
        raise ValueError("line 1: missing header")
    if len(rows) != m:
        raise ValueError(f"header declared {m} edges but found {len(rows)}")
    order = np.lexsort((np.asarray(cols), np.asarray(rows))) if rows else np.array([], dtype=np.int64)
    return MaxCutInstance(
        n=n,
        rows=np.asarray(rows, dtype=np.int64)[order],
        cols=np.asarray(cols, dtype=np.int64)[order],
        weights=np.asarray(weights, dtype=np.float64)[order],
        metadata=metadata,
    )


# ---------------------------------------------------------------------------
# encoding JSON document (arrays alpha/beta, scalar sign, permutation/sigma
# with 1-based permutation indices, matching the edge-list convention)


def encoding_to_dict(enc: Rank2Encoding) -> dict:
    return {
        "n": enc.n,
        "alpha": enc.alpha.tolist(),
        "beta": enc.beta.tolist(),
        "sign": int(enc.sign),
        "permutation": (enc.aux.perm + 1).tolist(),
        "sigma": enc.aux.sigma.tolist(),
    }


def encoding_from_dict(doc: dict) -> Rank2Encoding:
    try:
        n = int(doc["n"])
        alpha = np.asarray(doc["alpha"], dtype=np.float64)
        beta = np.asarray(doc["beta"], dtype=np.float64)
        sign = int(doc["sign"])
        perm = np.asarray(doc["permutation"], dtype=np.int64) - 1
        sigma = np.asarray(doc["sigma"], dtype=np.int8)
    except KeyError as exc:
        raise ValueError(f"encoding document missing key {exc}") from None
    if alpha.size != n:
        raise ValueError("encoding document: alpha length does not match n")
    return Rank2Encoding(alpha=alpha, beta=beta, sign=sign, aux=AuxMap(perm, sigma))
