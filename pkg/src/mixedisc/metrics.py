"""Error measures, weak/strong signal classification and network summaries."""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linear_sum_assignment
from scipy.sparse.csgraph import connected_components

from .errors import UndefinedRatioError
from .linalg import MatrixLike, _as_matrix, default_tau, regularized_laplacian, top_eigs

WEAK_SIGNAL_THRESHOLD = 0.1
MATRIX_SOURCES = ("adjacency", "laplacian")


def _check_pair(Pi_hat, Pi):
    Pi_hat = np.asarray(Pi_hat, dtype=np.float64)
    Pi = np.asarray(Pi, dtype=np.float64)
    if Pi_hat.shape != Pi.shape or Pi.ndim != 2:
        raise ValueError(f"membership shapes differ: {Pi_hat.shape} vs {Pi.shape}")
    return Pi_hat, Pi


def column_cost(Pi_hat, Pi) -> np.ndarray:
    """``cost[j, k] = sum_i |Pi_hat(i, j) - Pi(i, k)|``."""
    Pi_hat, Pi = _check_pair(Pi_hat, Pi)
    return np.abs(Pi_hat[:, :, None] - Pi[:, None, :]).sum(axis=0)


def mixed_hamming(Pi_hat, Pi) -> float:
    """``min_O (1/n) ||Pi_hat O - Pi||_1`` over column permutations ``O``.

    The entrywise L1 objective splits over matched column pairs, so the
    minimum is a K x K linear assignment.
    """
    cost = column_cost(Pi_hat, Pi)
    r, c = linear_sum_assignment(cost)
    return float(cost[r, c].sum() / Pi.shape[0]) if len(Pi) else 0.0


def mixed_hamming_brute(Pi_hat, Pi) -> float:
    """Enumerate all K! column permutations; the reference for small K."""
    Pi_hat, Pi = _check_pair(Pi_hat, Pi)
    K = Pi.shape[1]
    return min(
        float(np.abs(Pi_hat[:, perm] - Pi).sum() / Pi.shape[0])
        for perm in itertools.permutations(range(K))
    )


def hard_labels(Pi_hat) -> np.ndarray:
    # argmax returns the first maximum, i.e. ties go to the lowest index
    return np.argmax(np.asarray(Pi_hat), axis=1)


def _confusion(pred, labels, K):
    C = np.zeros((K, K), dtype=np.int64)
    np.add.at(C, (pred, labels), 1)
    return C


def _check_labels(Pi_hat, labels):
    Pi_hat = np.asarray(Pi_hat)
    labels = np.asarray(labels).astype(np.int64).ravel()
    n, K = Pi_hat.shape
    if labels.shape != (n,):
        raise ValueError(f"expected {n} labels, got {labels.size}")
    if labels.size and (labels.min() < 0 or labels.max() >= K):
        raise ValueError(f"labels must lie in 0..{K - 1}")
    return hard_labels(Pi_hat), labels, n, K


def hard_error_rate(Pi_hat, labels) -> tuple[int, float]:
    """Misclassified count (and fraction) of argmax labels, minimized over
    relabelings via assignment on the confusion matrix."""
    pred, labels, n, K = _check_labels(Pi_hat, labels)
    C = _confusion(pred, labels, K)
    r, c = linear_sum_assignment(C, maximize=True)
    errors = int(n - C[r, c].sum())
    return errors, errors / n if n else 0.0


def hard_error_rate_brute(Pi_hat, labels) -> tuple[int, float]:
    pred, labels, n, K = _check_labels(Pi_hat, labels)
    best = min(
        int(np.sum(np.asarray(perm)[pred] != labels))
        for perm in itertools.permutations(range(K))
    )
    return best, best / n if n else 0.0


@dataclass(frozen=True)
class SignalClassification:
    ratio_gap: float
    is_weak: bool
    matrix_source: str
    lambda_K: float
    lambda_K1: float
    tau: float | None = None


def ratio_gap(lambda_K: float, lambda_K1: float, atol: float = 1e-12) -> float:
    """``1 - |lambda_{K+1} / lambda_K|``."""
    if abs(lambda_K) <= atol:
        raise UndefinedRatioError(f"K-th eigenvalue {lambda_K:.3e} is zero; ratio undefined")
    return 1.0 - abs(lambda_K1 / lambda_K)


def classify_from_eigenvalues(lambda_K: float, lambda_K1: float,
                              source: str = "adjacency", tau=None) -> SignalClassification:
    gap = ratio_gap(lambda_K, lambda_K1)
    return SignalClassification(
        ratio_gap=gap, is_weak=gap <= WEAK_SIGNAL_THRESHOLD, matrix_source=source,
        lambda_K=float(lambda_K), lambda_K1=float(lambda_K1), tau=tau,
    )


def is_connected(A: MatrixLike) -> bool:
    M = _as_matrix(A)
    ncomp, _ = connected_components(sp.csr_matrix(M), directed=False)
    return ncomp == 1


def classify_signal(A: MatrixLike, K: int, source: str = "adjacency",
                    c: float = 0.1, d_mode: str = "midrange") -> SignalClassification:
    """Weak signal iff ``1 - |lambda_{K+1}/lambda_K| <= 0.1`` for the leading
    eigenvalues (by magnitude) of ``A`` or of ``L_tau``."""
    if source not in MATRIX_SOURCES:
        raise ValueError(f"source must be one of {MATRIX_SOURCES}, got {source!r}")
    n = A.shape[0]
    if K < 1 or K + 1 > n:
        raise ValueError(f"need 1 <= K and K + 1 <= n, got K={K}, n={n}")
    if not is_connected(A):
        warnings.warn("network is not connected; signal classification assumes connectivity",
                      RuntimeWarning, stacklevel=2)
    tau = None
    M = _as_matrix(A)
    if source == "laplacian":
        tau = default_tau(A, c, d_mode)
        M = regularized_laplacian(A, tau).values
    lam = top_eigs(M, K + 1).values
    return classify_from_eigenvalues(lam[K - 1], lam[K], source, tau)


@dataclass(frozen=True)
class SummaryStats:
    n: int
    K: int | None
    mean_degree: float
    density: float
    overlap_fraction: float | None


def summary_stats(A: MatrixLike, Pi=None, K: int | None = None,
                  pure_tol: float = 1e-12) -> SummaryStats:
    M = _as_matrix(A)
    n = M.shape[0]
    total = float(M.sum())
    density = total / (n * (n - 1)) if n > 1 else 0.0
    overlap = None
    if Pi is not None:
        Pi = np.asarray(Pi, dtype=np.float64)
        if Pi.shape[0] != n:
            raise ValueError(f"membership has {Pi.shape[0]} rows, network has {n} nodes")
        K = Pi.shape[1] if K is None else K
        overlap = float(np.mean(Pi.max(axis=1) < 1.0 - pure_tol)) if n else 0.0
    return SummaryStats(n=n, K=K, mean_degree=total / n if n else 0.0,
                        density=density, overlap_fraction=overlap)
