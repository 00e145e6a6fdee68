"""Degree-corrected mixed membership (DCMM) model.

Edge probabilities are ``Omega = Theta Pi P Pi' Theta``; each pair ``i < j``
is an independent Bernoulli draw.  This module validates parameters, samples
networks, builds the population matrices used as oracles, and generates the
four simulation designs (pure-node fraction, cross-community connectivity,
purity of mixed nodes, degree heterogeneity).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import InvalidParametersError
from .linalg import AdjacencyMatrix

ROW_SUM_TOL = 1e-12

# Published grids for the four simulation designs.
EXPERIMENT_GRIDS = {
    1: [40, 60, 80, 100, 120, 140, 160],
    2: [round(0.05 * k, 2) for k in range(9)],
    3: [round(0.05 * k, 2) for k in range(11)],
    4: [1, 2, 3, 4, 5, 6, 7, 8],
}
EXPERIMENT_NAMES = {1: "n0", 2: "rho", 3: "x", 4: "z"}
# (n0, x, rho, z) held fixed in each design; the varied one is replaced
EXPERIMENT_DEFAULTS = {
    1: dict(n0=None, x=0.4, rho=0.3, z=4.0),
    2: dict(n0=100, x=0.4, rho=None, z=4.0),
    3: dict(n0=100, x=None, rho=0.3, z=4.0),
    4: dict(n0=100, x=0.4, rho=0.3, z=None),
}
DESIGN_N = 500
DESIGN_K = 3
SAMPLE_BLOCK_ENTRIES = 2_000_000


def make_rng(seed) -> np.random.Generator:
    """Counter-based generator (Philox) for an int, int tuple or SeedSequence."""
    if isinstance(seed, np.random.SeedSequence):
        ss = seed
    elif isinstance(seed, (tuple, list)):
        ss = np.random.SeedSequence([int(s) for s in seed])
    else:
        ss = np.random.SeedSequence(int(seed))
    return np.random.Generator(np.random.Philox(ss))


def is_pure(Pi: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    return np.max(Pi, axis=1) >= 1.0 - tol


def validate_membership(Pi) -> np.ndarray:
    Pi = np.asarray(Pi, dtype=np.float64)
    if Pi.ndim != 2 or Pi.shape[1] < 1:
        raise InvalidParametersError(f"membership matrix must be n x K, got shape {Pi.shape}")
    if np.any(Pi < 0) or not np.all(np.isfinite(Pi)):
        bad = int(np.flatnonzero(np.any((Pi < 0) | ~np.isfinite(Pi), axis=1))[0])
        raise InvalidParametersError(f"membership row {bad} has negative or non-finite entries")
    err = np.abs(Pi.sum(axis=1) - 1.0)
    if np.any(err > ROW_SUM_TOL):
        bad = int(np.argmax(err))
        raise InvalidParametersError(
            f"membership row {bad} sums to {Pi[bad].sum():.15g}, not 1"
        )
    return Pi


@dataclass(frozen=True)
class DcmmParams:
    """A DCMM instance ``(P, theta, Pi)``; ``n`` and ``K`` follow from shapes."""

    P: np.ndarray
    theta: np.ndarray
    Pi: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        P = np.asarray(self.P, dtype=np.float64)
        theta = np.asarray(self.theta, dtype=np.float64).ravel()
        Pi = validate_membership(self.Pi)
        n, K = Pi.shape
        if P.shape != (K, K):
            raise InvalidParametersError(f"P must be {K}x{K}, got shape {P.shape}")
        if not np.allclose(P, P.T, rtol=0, atol=1e-14):
            raise InvalidParametersError("P must be symmetric")
        if np.any(P < 0) or np.any(P > 1):
            raise InvalidParametersError("entries of P must lie in [0, 1]")
        if np.linalg.svd(P, compute_uv=False).min() <= 1e-12:
            raise InvalidParametersError("P must be nonsingular")
        if theta.shape != (n,):
            raise InvalidParametersError(f"theta must have length {n}, got {theta.size}")
        if np.any(theta <= 0) or not np.all(np.isfinite(theta)):
            raise InvalidParametersError("theta must be strictly positive")
        for name, arr in (("P", P), ("theta", theta), ("Pi", Pi)):
            arr = np.array(arr)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if self.theta.max() ** 2 * P.max() > 1.0:
            # the cheap bound failed; check the actual off-diagonal maximum
            om = _omega_full(self)
            np.fill_diagonal(om, 0.0)
            if om.max() > 1.0:
                i, j = np.unravel_index(int(np.argmax(om)), om.shape)
                raise InvalidParametersError(
                    f"edge probability Omega({i},{j}) = {om[i, j]:.6g} exceeds 1"
                )

    @property
    def n(self) -> int:
        return self.Pi.shape[0]

    @property
    def K(self) -> int:
        return self.Pi.shape[1]

    def pure_nodes(self) -> np.ndarray:
        return np.flatnonzero(is_pure(self.Pi))


def _omega_full(params: DcmmParams) -> np.ndarray:
    B = params.Pi @ params.P @ params.Pi.T
    return params.theta[:, None] * B * params.theta[None, :]


def expected_adjacency(params: DcmmParams, zero_diagonal: bool = True) -> np.ndarray:
    """``Omega = Theta Pi P Pi' Theta``.

    The model only defines off-diagonal entries; by default the diagonal is
    set to zero so the result can stand in for a noiseless adjacency matrix.
    ``zero_diagonal=False`` keeps the full rank-K bilinear form.
    """
    om = _omega_full(params)
    if zero_diagonal:
        np.fill_diagonal(om, 0.0)
    return om


def sample_adjacency(params: DcmmParams, seed) -> AdjacencyMatrix:
    """Independent Bernoulli(Omega(i, j)) edges for every pair ``i < j``.

    Pairs are visited in row-major upper-triangle order, one uniform each,
    so the result is a deterministic function of ``(params, seed)``.
    """
    rng = make_rng(seed)
    n = params.n
    rows, cols, probs = [], [], []
    # row blocks keep peak memory at O(block * n)
    block = max(1, SAMPLE_BLOCK_ENTRIES // max(n, 1))
    B_right = params.P @ params.Pi.T
    for start in range(0, n, block):
        stop = min(n, start + block)
        om = (params.theta[start:stop, None] * (params.Pi[start:stop] @ B_right)) * params.theta[None, :]
        r, c = np.triu_indices(stop - start, k=1, m=n - start)
        r_glob = r + start
        c_glob = c + start
        rows.append(r_glob)
        cols.append(c_glob)
        probs.append(om[r, c_glob])
    r = np.concatenate(rows) if rows else np.zeros(0, dtype=np.int64)
    c = np.concatenate(cols) if cols else np.zeros(0, dtype=np.int64)
    p = np.concatenate(probs) if probs else np.zeros(0)
    hit = rng.random(p.size) < p
    r, c = r[hit], c[hit]
    csr = sp.csr_matrix(
        (np.ones(2 * r.size), (np.concatenate([r, c]), np.concatenate([c, r]))), shape=(n, n)
    )
    return AdjacencyMatrix(csr)


def population_laplacian(params: DcmmParams, tau: float, full_form: bool = True) -> np.ndarray:
    """``D_tau^{-1/2} Omega D_tau^{-1/2}`` with ``D(i, i) = sum_j Omega(i, j)``.

    The default uses the full bilinear form (diagonal kept), which has rank
    exactly K.
    """
    if tau < 0:
        raise ValueError(f"tau must be nonnegative, got {tau}")
    om = expected_adjacency(params, zero_diagonal=not full_form)
    d = om.sum(axis=1) + tau
    if np.any(d <= 0):
        bad = int(np.flatnonzero(d <= 0)[0])
        raise InvalidParametersError(f"node {bad} has zero expected degree with tau={tau}")
    s = 1.0 / np.sqrt(d)
    return om * s[:, None] * s[None, :]


def mixing_matrix(K: int, diag: float, off: float) -> np.ndarray:
    P = np.full((K, K), float(off))
    np.fill_diagonal(P, float(diag))
    return P


def design_membership(n: int, n0: int, x: float) -> np.ndarray:
    """First ``3 n0`` nodes pure (``n0`` per community), the rest split
    equally over ``(x,x,1-2x)``, ``(x,1-2x,x)``, ``(1-2x,x,x)``, ``(1/3,1/3,1/3)``.
    """
    if not 0 <= x <= 0.5:
        raise InvalidParametersError(f"x must lie in [0, 0.5], got {x}")
    n_mixed = n - 3 * n0
    if n0 < 0 or n_mixed < 0:
        raise InvalidParametersError(f"n0={n0} does not fit in n={n}")
    if n_mixed % 4:
        raise InvalidParametersError(
            f"{n} - 3*{n0} = {n_mixed} mixed nodes cannot be split into 4 equal groups"
        )
    profiles = np.array(
        [
            [x, x, 1 - 2 * x],
            [x, 1 - 2 * x, x],
            [1 - 2 * x, x, x],
            [1 / 3, 1 / 3, 1 / 3],
        ]
    )
    Pi = np.zeros((n, 3))
    for k in range(3):
        Pi[k * n0 : (k + 1) * n0, k] = 1.0
    per = n_mixed // 4
    for g in range(4):
        lo = 3 * n0 + g * per
        Pi[lo : lo + per] = profiles[g]
    # exact row sums for the thirds profile
    Pi /= Pi.sum(axis=1, keepdims=True)
    return Pi


def experiment_settings(experiment_id: int, grid_point) -> dict:
    """Resolve ``(n0, x, rho, z)`` for one grid point of a design."""
    if experiment_id not in EXPERIMENT_DEFAULTS:
        raise InvalidParametersError(f"unknown experiment {experiment_id}; expected 1-4")
    grid = EXPERIMENT_GRIDS[experiment_id]
    lo, hi = min(grid), max(grid)
    g = float(grid_point)
    if not lo - 1e-12 <= g <= hi + 1e-12:
        raise InvalidParametersError(
            f"experiment {experiment_id}: {EXPERIMENT_NAMES[experiment_id]}={grid_point} "
            f"outside published range [{lo}, {hi}]"
        )
    s = dict(EXPERIMENT_DEFAULTS[experiment_id])
    name = EXPERIMENT_NAMES[experiment_id]
    if name == "n0":
        if g != int(g):
            raise InvalidParametersError(f"n0 must be an integer, got {grid_point}")
        g = int(g)
    s[name] = g
    return s


def experiment_params(experiment_id: int, grid_point, seed, n: int = DESIGN_N) -> DcmmParams:
    """DCMM instance for one grid point; ``theta`` is drawn from ``seed``.

    ``n`` other than 500 rescales the pure-node count ``n0`` proportionally
    (rounded) so the pure/mixed split keeps its shape at desk scale.
    """
    s = experiment_settings(experiment_id, grid_point)
    n0 = s["n0"] if n == DESIGN_N else int(round(s["n0"] * n / DESIGN_N))
    Pi = design_membership(n, n0, s["x"])
    P = mixing_matrix(DESIGN_K, 0.8, s["rho"])
    rng = make_rng(seed)
    inv_theta = rng.uniform(1.0, s["z"], size=n) if s["z"] > 1 else np.ones(n)
    theta = 1.0 / inv_theta
    meta = dict(experiment=experiment_id, grid_point=grid_point, n0=n0, x=s["x"], rho=s["rho"], z=s["z"])
    return DcmmParams(P=P, theta=theta, Pi=Pi, meta=meta)
