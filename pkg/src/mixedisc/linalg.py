"""Graph matrices and symmetric eigenpairs.

Adjacency storage, degree bookkeeping, the ridge-regularized Laplacian
``D_tau^{-1/2} A D_tau^{-1/2}`` and extraction of the eigenpairs of largest
magnitude.  Functions that only need a symmetric nonnegative matrix also
accept dense arrays or scipy sparse matrices, so population matrices can be
fed through the same code path as observed networks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np
import scipy.sparse as sp

from .errors import ConvergenceError, GraphError

D_MODES = ("midrange", "mean", "max")
DENSE_LIMIT = 2048


class AdjacencyMatrix:
    """Symmetric 0/1 adjacency matrix with an empty diagonal, stored as CSR.

    Instances are treated as immutable; the underlying arrays are marked
    read-only.
    """

    __slots__ = ("_csr",)

    def __init__(self, csr: sp.csr_matrix):
        csr = sp.csr_matrix(csr, dtype=np.float64)
        csr.sum_duplicates()
        csr.eliminate_zeros()
        csr.sort_indices()
        for arr in (csr.data, csr.indices, csr.indptr):
            arr.flags.writeable = False
        self._csr = csr

    @property
    def n(self) -> int:
        return self._csr.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self._csr.shape

    @property
    def matrix(self) -> sp.csr_matrix:
        return self._csr

    @property
    def n_edges(self) -> int:
        return self._csr.nnz // 2

    def degrees(self) -> np.ndarray:
        return np.asarray(self._csr.sum(axis=1)).ravel()

    def edges(self) -> list[tuple[int, int]]:
        """Unordered edges as ``(i, j)`` with ``i < j``, sorted."""
        coo = sp.triu(self._csr, k=1).tocoo()
        order = np.lexsort((coo.col, coo.row))
        return [(int(coo.row[k]), int(coo.col[k])) for k in order]

    def toarray(self) -> np.ndarray:
        return self._csr.toarray()

    def __repr__(self) -> str:
        return f"AdjacencyMatrix(n={self.n}, edges={self.n_edges})"


MatrixLike = Union[AdjacencyMatrix, np.ndarray, sp.spmatrix, sp.sparray]


def build_adjacency(n: int, edge_list: Iterable[Sequence[int]]) -> AdjacencyMatrix:
    """Build an adjacency matrix from ``(i, j)`` pairs.

    Both orientations and repeated pairs collapse to one undirected edge.
    Self-loops and out-of-range ids raise :class:`GraphError`.
    """
    if n < 0:
        raise GraphError(f"node count must be nonnegative, got {n}")
    rows: list[int] = []
    cols: list[int] = []
    for k, pair in enumerate(edge_list):
        i, j = int(pair[0]), int(pair[1])
        if not (0 <= i < n and 0 <= j < n):
            raise GraphError(f"edge #{k} ({i}, {j}): node id out of range [0, {n})")
        if i == j:
            raise GraphError(f"edge #{k} ({i}, {j}): self-loop not allowed")
        rows.append(min(i, j))
        cols.append(max(i, j))
    if rows:
        pairs = np.unique(np.array([rows, cols], dtype=np.int64), axis=1)
        r, c = pairs
    else:
        r = c = np.zeros(0, dtype=np.int64)
    data = np.ones(2 * r.size)
    csr = sp.csr_matrix(
        (data, (np.concatenate([r, c]), np.concatenate([c, r]))), shape=(n, n)
    )
    return AdjacencyMatrix(csr)


def read_edge_list(path) -> list[tuple[int, int]]:
    """Parse an edge-list file: two integer ids per line, ``#`` lines skipped.

    Self-loops are rejected here so the message can name the line.
    """
    edges = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            parts = s.split()
            if len(parts) < 2:
                raise GraphError(f"{path}:{lineno}: expected two node ids, got {s!r}")
            try:
                i, j = int(parts[0]), int(parts[1])
            except ValueError:
                raise GraphError(f"{path}:{lineno}: non-integer node id in {s!r}") from None
            if i < 0 or j < 0:
                raise GraphError(f"{path}:{lineno}: negative node id in {s!r}")
            if i == j:
                raise GraphError(f"{path}:{lineno}: self-loop ({i}, {j}) not allowed")
            edges.append((i, j))
    return edges


def write_edge_list(A: AdjacencyMatrix, path) -> None:
    with open(path, "w") as fh:
        for i, j in A.edges():
            fh.write(f"{i} {j}\n")


def _as_matrix(M: MatrixLike):
    if isinstance(M, AdjacencyMatrix):
        return M.matrix
    if sp.issparse(M):
        return sp.csr_matrix(M, dtype=np.float64)
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise GraphError(f"expected a square matrix, got shape {M.shape}")
    return M


def _row_sums(M) -> np.ndarray:
    return np.asarray(M.sum(axis=1)).ravel()


@dataclass(frozen=True)
class DegreeVector:
    d: np.ndarray
    d_max: float
    d_min: float
    d_bar: float


def degree_vector(A: MatrixLike) -> DegreeVector:
    d = _row_sums(_as_matrix(A))
    if d.size == 0:
        raise GraphError("graph has no nodes")
    return DegreeVector(d=d, d_max=float(d.max()), d_min=float(d.min()), d_bar=float(d.mean()))


def default_tau(A: MatrixLike, c: float = 0.1, d_mode: str = "midrange") -> float:
    """Ridge regularizer ``c * d`` where ``d`` is picked by ``d_mode``."""
    if c < 0:
        raise ValueError(f"c must be nonnegative, got {c}")
    if d_mode not in D_MODES:
        raise ValueError(f"d_mode must be one of {D_MODES}, got {d_mode!r}")
    deg = degree_vector(A)
    if d_mode == "midrange":
        d = (deg.d_max + deg.d_min) / 2.0
    elif d_mode == "mean":
        d = deg.d_bar
    else:
        d = deg.d_max
    return float(c * d)


@dataclass(frozen=True)
class RegularizedLaplacian:
    values: object  # csr_matrix for sparse input, ndarray for dense input
    tau: float

    def toarray(self) -> np.ndarray:
        return self.values.toarray() if sp.issparse(self.values) else np.array(self.values)


def regularized_laplacian(A: MatrixLike, tau: float) -> RegularizedLaplacian:
    """``L_tau(i, j) = A(i, j) / sqrt((d_i + tau)(d_j + tau))``.

    With ``tau > 0`` isolated nodes get an all-zero row; with ``tau == 0``
    they make the matrix undefined and raise :class:`GraphError`.
    """
    if tau < 0:
        raise ValueError(f"tau must be nonnegative, got {tau}")
    M = _as_matrix(A)
    d = _row_sums(M) + tau
    bad = np.flatnonzero(d <= 0)
    if bad.size:
        raise GraphError(
            f"division by zero in regularized Laplacian: node {int(bad[0])} has "
            f"degree 0 with tau={tau}" + (f" ({bad.size} such nodes)" if bad.size > 1 else "")
        )
    s = 1.0 / np.sqrt(d)
    if sp.issparse(M):
        Dm = sp.diags(s)
        L = sp.csr_matrix(Dm @ M @ Dm)
    else:
        L = M * s[:, None] * s[None, :]
    return RegularizedLaplacian(values=L, tau=float(tau))


@dataclass(frozen=True)
class EigenPairs:
    values: np.ndarray
    vectors: np.ndarray


def magnitude_order(values: np.ndarray) -> np.ndarray:
    """Indices sorting by decreasing ``|value|``; on ties positive first."""
    values = np.asarray(values)
    return np.lexsort((-values, -np.abs(values)))


def canonical_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip columns so the entry of largest magnitude is positive.

    ``argmax`` returns the first maximal index, which is the tie rule.
    """
    vectors = np.array(vectors, dtype=np.float64, copy=True)
    if vectors.size == 0:
        return vectors
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def top_eigs(
    M: MatrixLike,
    m: int,
    tol: float = 1e-10,
    method: str = "auto",
    seed: int = 0,
    max_iter: int | None = None,
) -> EigenPairs:
    """The ``m`` eigenpairs of a symmetric matrix with the largest ``|lambda|``.

    ``method`` is ``"dense"`` (LAPACK ``eigh``), ``"lanczos"`` (Lanczos with
    full reorthogonalization from a seeded random start) or ``"auto"``, which
    uses dense up to ``DENSE_LIMIT`` nodes.  Eigenvectors have unit norm and
    the sign convention of :func:`canonical_signs`.
    """
    M = _as_matrix(M)
    n = M.shape[0]
    if not 1 <= m <= n:
        raise ValueError(f"need 1 <= m <= n, got m={m}, n={n}")
    if method == "auto":
        method = "dense" if n <= DENSE_LIMIT else "lanczos"
    if method == "dense":
        dense = M.toarray() if sp.issparse(M) else M
        vals, vecs = np.linalg.eigh(dense)
        order = magnitude_order(vals)[:m]
        vals, vecs = vals[order], vecs[:, order]
    elif method == "lanczos":
        vals, vecs = _lanczos(M, m, tol, seed, max_iter if max_iter is not None else 10 * n)
    else:
        raise ValueError(f"unknown eigensolver method {method!r}")
    return EigenPairs(values=vals, vectors=canonical_signs(vecs))


def _orthogonalize(w: np.ndarray, Q: np.ndarray) -> np.ndarray:
    # two passes of classical Gram-Schmidt ("twice is enough")
    for _ in range(2):
        if Q.shape[1]:
            w = w - Q @ (Q.T @ w)
    return w


def _lanczos(M, m: int, tol: float, seed: int, max_iter: int):
    n = M.shape[0]
    rng = np.random.default_rng(seed)
    cap = min(n, max(2 * m + 20, 64))
    Q = np.zeros((n, cap))
    MQ = np.zeros((n, cap))
    q = rng.standard_normal(n)
    q /= np.linalg.norm(q)
    k = 0
    check_every = max(m, 8)
    worst = np.inf
    for _ in range(max_iter):
        if k == cap:
            cap = min(n, 2 * cap)
            Q = np.hstack([Q, np.zeros((n, cap - Q.shape[1]))])
            MQ = np.hstack([MQ, np.zeros((n, cap - MQ.shape[1]))])
        Q[:, k] = q
        w = M @ q
        MQ[:, k] = w
        k += 1
        if k == n or (k >= m and k % check_every == 0):
            # Rayleigh-Ritz on the current basis
            H = Q[:, :k].T @ MQ[:, :k]
            H = (H + H.T) / 2.0
            theta, S = np.linalg.eigh(H)
            scale = max(float(np.max(np.abs(theta))), np.finfo(float).tiny)
            order = magnitude_order(theta)[:m]
            theta, S = theta[order], S[:, order]
            Y = Q[:, :k] @ S
            R = MQ[:, :k] @ S - Y * theta
            worst = float(np.linalg.norm(R, axis=0).max() / scale)
            if worst <= tol:
                Y /= np.linalg.norm(Y, axis=0)
                return theta, Y
            if k == n:
                break
        w = _orthogonalize(w, Q[:, :k])
        beta = np.linalg.norm(w)
        if beta <= 1e-12 * max(1.0, float(np.linalg.norm(MQ[:, k - 1]))):
            # invariant subspace found: restart from a fresh orthogonal direction
            w = _orthogonalize(rng.standard_normal(n), Q[:, :k])
            beta = np.linalg.norm(w)
        q = w / beta
    raise ConvergenceError(
        f"Lanczos did not reach relative residual {tol} after {k} vectors", residual=worst
    )
