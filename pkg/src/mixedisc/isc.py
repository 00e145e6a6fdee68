"""Mixed-ISC: mixed membership estimation from K+1 weighted eigenvectors.

Pipeline:

1. embedding -- leading K+1 eigenpairs (by magnitude) of the regularized
   Laplacian, eigenvectors scaled by their eigenvalues, rows normalized;
2. center hunting -- K-means or K-median on the normalized rows;
3. membership reconstruction -- project each row onto the span of the
   centers, clip negatives, normalize to a PMF.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .clustering import ClusterCenters, find_centers
from .errors import SingularCentersError
from .linalg import MatrixLike, default_tau, regularized_laplacian, top_eigs

NORM_MODES = ("l1", "l2")
ZERO_ROW_TOL = 1e-14
MAX_CENTER_COND = 1e12


@dataclass(frozen=True)
class SpectralEmbedding:
    X_hat: np.ndarray
    X_star: np.ndarray
    eigenvalues: np.ndarray
    tau: float
    flagged: np.ndarray  # nodes whose X_hat row was zero


@dataclass(frozen=True)
class MembershipEstimate:
    Pi_hat: np.ndarray
    Y_hat: np.ndarray
    fallback_nodes: np.ndarray


@dataclass(frozen=True)
class MixedIscSettings:
    c: float = 0.1
    d_mode: str = "midrange"
    clustering: str = "kmeans"
    restarts: int = 10
    max_iter: int = 100
    tol: float = 1e-6
    norm_mode: str = "l1"
    seed: int = 42
    eig_method: str = "auto"


@dataclass(frozen=True)
class MixedIscResult:
    Pi_hat: np.ndarray
    Y_hat: np.ndarray
    fallback_nodes: np.ndarray
    embedding: SpectralEmbedding
    centers: ClusterCenters
    settings: MixedIscSettings = field(default_factory=MixedIscSettings)

    def diagnostics(self) -> dict:
        return {
            "tau": self.embedding.tau,
            "eigenvalues": [float(v) for v in self.embedding.eigenvalues],
            "clustering": self.centers.method,
            "clustering_loss": self.centers.inertia,
            "zero_embedding_rows": [int(i) for i in self.embedding.flagged],
            "fallback_nodes": [int(i) for i in self.fallback_nodes],
        }


def normalize_rows(X_hat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Unit-length rows; zero rows become ``e_1`` and are reported."""
    norms = np.linalg.norm(X_hat, axis=1)
    scale = norms.max() if norms.size else 0.0
    flagged = np.flatnonzero(norms <= ZERO_ROW_TOL * max(scale, 1.0))
    X_star = np.empty_like(X_hat)
    ok = np.ones(X_hat.shape[0], dtype=bool)
    ok[flagged] = False
    X_star[ok] = X_hat[ok] / norms[ok, None]
    X_star[flagged] = 0.0
    X_star[flagged, 0] = 1.0
    return X_star, flagged


def isc_embed(A: MatrixLike, K: int, c: float = 0.1, d_mode: str = "midrange",
              eig_method: str = "auto", seed: int = 0) -> SpectralEmbedding:
    """Eigenvalue-weighted K+1 leading eigenvectors of ``L_tau``, row-normalized."""
    n = A.shape[0]
    if K < 1 or K + 1 > n:
        raise ValueError(f"need 1 <= K and K + 1 <= n, got K={K}, n={n}")
    tau = default_tau(A, c, d_mode)
    L = regularized_laplacian(A, tau)
    eig = top_eigs(L.values, K + 1, method=eig_method, seed=seed)
    lam = eig.values
    if not lam[K - 1] > abs(lam[K]):
        warnings.warn(
            f"K-th eigenvalue {lam[K - 1]:.6g} does not dominate |(K+1)-th| "
            f"{abs(lam[K]):.6g}; eigen-gap condition violated",
            RuntimeWarning,
            stacklevel=2,
        )
    X_hat = eig.vectors * lam[None, :]
    X_star, flagged = normalize_rows(X_hat)
    return SpectralEmbedding(X_hat=X_hat, X_star=X_star, eigenvalues=lam, tau=tau, flagged=flagged)


def mr_reconstruct(X_star: np.ndarray, centers, norm_mode: str = "l1") -> MembershipEstimate:
    """Project rows onto the center span, clip at zero, normalize to PMFs.

    ``Y = max(0, X* V' (V V')^{-1})``.  A row that clips to all zeros is
    assigned to its nearest center and listed in ``fallback_nodes``.
    """
    if norm_mode not in NORM_MODES:
        raise ValueError(f"norm_mode must be one of {NORM_MODES}, got {norm_mode!r}")
    V = np.asarray(centers.centers if isinstance(centers, ClusterCenters) else centers, dtype=np.float64)
    X_star = np.asarray(X_star, dtype=np.float64)
    G = V @ V.T
    cond = np.linalg.cond(G)
    if not np.isfinite(cond) or cond > MAX_CENTER_COND:
        raise SingularCentersError(f"V V' is singular (condition number {cond:.3e})")
    Y = np.linalg.solve(G, V @ X_star.T).T
    Y = np.maximum(Y, 0.0)
    if norm_mode == "l1":
        s = Y.sum(axis=1)
    else:
        s = np.linalg.norm(Y, axis=1)
    zero = np.flatnonzero(s <= 0)
    Pi = np.zeros_like(Y)
    ok = s > 0
    Pi[ok] = Y[ok] / s[ok, None]
    if norm_mode == "l2":
        Pi[ok] /= Pi[ok].sum(axis=1, keepdims=True)
    if zero.size:
        d2 = ((X_star[zero, None, :] - V[None, :, :]) ** 2).sum(axis=2)
        Pi[zero, np.argmin(d2, axis=1)] = 1.0
    return MembershipEstimate(Pi_hat=Pi, Y_hat=Y, fallback_nodes=zero)


def mixed_isc(A: MatrixLike, K: int, settings: MixedIscSettings | None = None,
              **overrides) -> MixedIscResult:
    """Estimate the n x K membership matrix of a network.

    ``A`` may be an :class:`~mixedisc.linalg.AdjacencyMatrix` or any
    symmetric nonnegative matrix (e.g. a population matrix).  Keyword
    overrides replace fields of ``settings``.
    """
    settings = replace(settings or MixedIscSettings(), **overrides)
    emb = isc_embed(A, K, settings.c, settings.d_mode, settings.eig_method, settings.seed)
    centers = find_centers(
        emb.X_star, K, settings.clustering,
        restarts=settings.restarts, max_iter=settings.max_iter,
        tol=settings.tol, seed=settings.seed,
    )
    est = mr_reconstruct(emb.X_star, centers, settings.norm_mode)
    fallback = np.union1d(emb.flagged, est.fallback_nodes).astype(np.int64)
    return MixedIscResult(
        Pi_hat=est.Pi_hat, Y_hat=est.Y_hat, fallback_nodes=fallback,
        embedding=emb, centers=centers, settings=settings,
    )
