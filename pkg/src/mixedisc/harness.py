"""Simulation runs, tau sweeps and file formats.

Every repetition gets its own random streams derived from
``(base_seed, grid_index, repetition)``, so results do not depend on the
number of worker processes or the order in which tasks finish.
"""

from __future__ import annotations

import csv
import io
import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .dcmm import (EXPERIMENT_GRIDS, DcmmParams, experiment_params, make_rng,
                   sample_adjacency)
from .errors import GraphError, InvalidParametersError, MixedIscError
from .isc import MixedIscSettings, mixed_isc
from .linalg import D_MODES, AdjacencyMatrix, build_adjacency, read_edge_list
from .metrics import mixed_hamming

DEFAULT_C_GRID = [round(0.1 * k, 1) for k in range(21)]
PROFILES = {"full": dict(n=500, repetitions=50), "desk": dict(n=300, repetitions=10)}


def fmt(x) -> str:
    """Shortest round-trip text for a float; ints stay ints."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


# ---------------------------------------------------------------- results


@dataclass
class ResultRow:
    grid_value: float
    rep: int
    mixed_hamming: float
    seconds: float
    d_mode: str | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def failed(self) -> bool:
        return "error" in self.diagnostics


@dataclass
class ResultTable:
    rows: list[ResultRow]
    sweep: bool = False

    def _key(self, row):
        return (row.grid_value, row.d_mode) if self.sweep else (row.grid_value,)

    def aggregate(self) -> list[tuple]:
        """``(grid_value[, d_mode], mean, sd)`` over successful repetitions.

        ``sd`` is the sample standard deviation (0 for a single value).
        """
        groups: dict[tuple, list[float]] = {}
        for row in self.rows:
            groups.setdefault(self._key(row), [])
            if not row.failed:
                groups[self._key(row)].append(row.mixed_hamming)
        out = []
        for key, vals in groups.items():
            v = np.array(vals, dtype=np.float64)
            mean = float(v.mean()) if v.size else float("nan")
            sd = float(v.std(ddof=1)) if v.size > 1 else (0.0 if v.size else float("nan"))
            out.append((*key, mean, sd))
        return out

    def results_csv(self, timing: bool = False) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["grid_value", "d_mode", "rep", "mixed_hamming", "seconds"] if self.sweep
                   else ["grid_value", "rep", "mixed_hamming", "seconds"])
        for row in self.rows:
            cells = [fmt(row.grid_value)]
            if self.sweep:
                cells.append(row.d_mode)
            cells += [str(row.rep), fmt(row.mixed_hamming), fmt(row.seconds) if timing else ""]
            w.writerow(cells)
        return buf.getvalue()

    def aggregate_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["grid_value", "d_mode", "mean", "sd"] if self.sweep
                   else ["grid_value", "mean", "sd"])
        for rec in self.aggregate():
            w.writerow([fmt(rec[0])] + list(rec[1:-2]) + [fmt(rec[-2]), fmt(rec[-1])])
        return buf.getvalue()

    def errors(self) -> list[dict]:
        return [
            dict(grid_value=r.grid_value, d_mode=r.d_mode, rep=r.rep, error=r.diagnostics["error"])
            for r in self.rows if r.failed
        ]


def read_results_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# ------------------------------------------------------------ experiments


@dataclass(frozen=True)
class ExperimentConfig:
    experiment_id: int
    grid: tuple = ()
    repetitions: int = 50
    base_seed: int = 42
    settings: MixedIscSettings = field(default_factory=MixedIscSettings)
    n: int = 500
    fix_theta: bool = False

    def __post_init__(self):
        if self.experiment_id not in EXPERIMENT_GRIDS:
            raise InvalidParametersError(f"unknown experiment {self.experiment_id}; expected 1-4")
        if not self.grid:
            object.__setattr__(self, "grid", tuple(EXPERIMENT_GRIDS[self.experiment_id]))
        else:
            object.__setattr__(self, "grid", tuple(self.grid))
        if self.repetitions < 1:
            raise InvalidParametersError("repetitions must be >= 1")
        # fail early on out-of-range grid points
        for g in self.grid:
            experiment_params(self.experiment_id, g, 0, n=self.n)

    @classmethod
    def from_profile(cls, experiment_id: int, profile: str = "full", **kwargs):
        opts = dict(PROFILES[profile])
        opts.update({k: v for k, v in kwargs.items() if v is not None})
        return cls(experiment_id=experiment_id, **opts)


def task_streams(base_seed: int, grid_index: int, rep: int, fix_theta: bool = False):
    """Seeds for (theta, edges, clustering) of one repetition."""
    theta_ss, edge_ss, clus_ss = np.random.SeedSequence([base_seed, grid_index, rep]).spawn(3)
    if fix_theta:
        theta_ss = np.random.SeedSequence([base_seed, grid_index])
    return theta_ss, edge_ss, int(clus_ss.generate_state(1)[0])


def _score(A, K, Pi, settings):
    t0 = time.perf_counter()
    diag: dict = {}
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            res = mixed_isc(A, K, settings)
            err = mixed_hamming(res.Pi_hat, Pi) if Pi is not None else float("nan")
            diag.update(res.diagnostics())
        except (MixedIscError, ValueError, np.linalg.LinAlgError) as exc:
            err = float("nan")
            diag["error"] = f"{type(exc).__name__}: {exc}"
    if caught:
        diag["warnings"] = [str(w.message) for w in caught]
    return err, time.perf_counter() - t0, diag


def _experiment_task(args):
    config, gi, rep = args
    g = config.grid[gi]
    theta_ss, edge_ss, clus_seed = task_streams(config.base_seed, gi, rep, config.fix_theta)
    params = experiment_params(config.experiment_id, g, theta_ss, n=config.n)
    A = sample_adjacency(params, edge_ss)
    err, secs, diag = _score(A, params.K, params.Pi, replace(config.settings, seed=clus_seed))
    return ResultRow(grid_value=g, rep=rep, mixed_hamming=err, seconds=secs, diagnostics=diag)


def _run_tasks(fn, tasks, workers):
    if workers is None or workers <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


def run_experiment(config: ExperimentConfig, workers: int = 1) -> ResultTable:
    """Sample, estimate and score every (grid value, repetition) pair."""
    tasks = [(config, gi, rep) for gi in range(len(config.grid)) for rep in range(config.repetitions)]
    return ResultTable(rows=_run_tasks(_experiment_task, tasks, workers))


def _params_task(args):
    params, base_seed, rep, settings = args
    _, edge_ss, clus_seed = task_streams(base_seed, 0, rep)
    A = sample_adjacency(params, edge_ss)
    err, secs, diag = _score(A, params.K, params.Pi, replace(settings, seed=clus_seed))
    return ResultRow(grid_value=0, rep=rep, mixed_hamming=err, seconds=secs, diagnostics=diag)


def run_params(params: DcmmParams, repetitions: int, base_seed: int = 42,
               settings: MixedIscSettings | None = None, workers: int = 1) -> ResultTable:
    """Repeated sampling from one fixed DCMM instance (``grid_value`` is 0)."""
    settings = settings or MixedIscSettings()
    tasks = [(params, base_seed, rep, settings) for rep in range(repetitions)]
    return ResultTable(rows=_run_tasks(_params_task, tasks, workers))


def _sweep_task(args):
    A, K, Pi, settings, c, d_mode, rep = args
    err, secs, diag = _score(A, K, Pi, replace(settings, c=c, d_mode=d_mode))
    return ResultRow(grid_value=c, rep=rep, mixed_hamming=err, seconds=secs,
                     d_mode=d_mode, diagnostics=diag)


def tau_sweep(source, K: int | None = None, c_grid=None, d_modes=("midrange",),
              Pi=None, settings: MixedIscSettings | None = None,
              grid_value=None, workers: int = 1) -> ResultTable:
    """Run Mixed-ISC over ``tau = c * d`` for each ``c`` and degree mode.

    ``source`` is either an :class:`ExperimentConfig` (networks sampled once
    per repetition at ``grid_value``, default the config's first grid point,
    and shared across all ``(c, d_mode)``) or a single network with optional
    ground truth ``Pi``.
    """
    c_grid = list(DEFAULT_C_GRID if c_grid is None else c_grid)
    if any(c < 0 for c in c_grid):
        raise ValueError("c values must be nonnegative")
    for dm in d_modes:
        if dm not in D_MODES:
            raise ValueError(f"d_mode must be one of {D_MODES}, got {dm!r}")
    settings = settings or MixedIscSettings()
    networks = []
    if isinstance(source, ExperimentConfig):
        g = source.grid[0] if grid_value is None else grid_value
        gi = source.grid.index(g) if g in source.grid else 0
        for rep in range(source.repetitions):
            theta_ss, edge_ss, clus_seed = task_streams(source.base_seed, gi, rep, source.fix_theta)
            params = experiment_params(source.experiment_id, g, theta_ss, n=source.n)
            networks.append((rep, sample_adjacency(params, edge_ss), params.K, params.Pi,
                             replace(settings, seed=clus_seed)))
    else:
        if K is None:
            raise ValueError("K is required when sweeping a single network")
        networks.append((0, source, K, Pi, settings))
    tasks = [
        (A, k, P, s, c, dm, rep)
        for rep, A, k, P, s in networks
        for dm in d_modes
        for c in c_grid
    ]
    return ResultTable(rows=_run_tasks(_sweep_task, tasks, workers), sweep=True)


# ------------------------------------------------------------ file formats


def write_membership_csv(Pi, path=None, node_ids=None) -> str:
    """``node,pi_1,...,pi_K`` with 12 significant digits."""
    Pi = np.asarray(Pi)
    ids = range(Pi.shape[0]) if node_ids is None else node_ids
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["node"] + [f"pi_{k + 1}" for k in range(Pi.shape[1])])
    for node, row in zip(ids, Pi):
        w.writerow([str(node)] + [f"{v:.12g}" for v in row])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def read_membership_csv(path, normalize: bool = False):
    """Return ``(node_ids, matrix)``; with ``normalize`` rows are divided by
    their sums and zero rows raise."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if not rows:
        raise GraphError(f"{path}: empty membership file")
    body = rows[1:] if not _is_number(rows[0][0]) else rows
    ids, vals = [], []
    width = None
    for lineno, r in enumerate(body, start=2 if body is not rows else 1):
        if width is None:
            width = len(r)
        if len(r) != width:
            raise GraphError(f"{path}:{lineno}: expected {width} fields, got {len(r)}")
        try:
            ids.append(int(r[0]))
            vals.append([float(v) for v in r[1:]])
        except ValueError:
            raise GraphError(f"{path}:{lineno}: non-numeric entry in {r!r}") from None
    M = np.array(vals, dtype=np.float64)
    if normalize:
        s = M.sum(axis=1)
        zero = [ids[i] for i in np.flatnonzero(s <= 0)]
        if zero:
            raise GraphError(f"{path}: nodes in no community: {zero}")
        M = M / s[:, None]
    return ids, M


def _is_number(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


def read_labels(path, node_ids=None) -> np.ndarray:
    """Hard labels: one ``label`` per line (node order) or ``node label`` pairs.

    Label values are remapped to ``0..K-1`` in sorted order.
    """
    pairs = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip().replace(",", " ")
            if not s or s.startswith("#"):
                continue
            parts = s.split()
            if not all(_is_number(p) for p in parts):
                if not pairs:
                    continue  # header
                raise GraphError(f"{path}:{lineno}: non-numeric label line {s!r}")
            pairs.append([int(float(p)) for p in parts])
    if pairs and len(pairs[0]) == 2:
        lookup = {node: lab for node, lab in pairs}
        if node_ids is None:
            node_ids = [node for node, _ in pairs]
        missing = [v for v in node_ids if v not in lookup]
        if missing:
            raise GraphError(f"{path}: no label for nodes {missing[:10]}")
        raw = [lookup[v] for v in node_ids]
    else:
        raw = [p[0] for p in pairs]
    return np.unique(np.asarray(raw, dtype=np.int64), return_inverse=True)[1].ravel()


@dataclass(frozen=True)
class IngestedNetwork:
    A: AdjacencyMatrix
    node_ids: list  # original id of each internal node index
    Pi: np.ndarray | None = None

    def mapping(self) -> dict:
        return {orig: i for i, orig in enumerate(self.node_ids)}


def ingest_network(path, ground_truth_path=None) -> IngestedNetwork:
    """Load an edge list, remapping node ids to ``0..n-1`` in sorted order.

    Ground-truth memberships (raw indicator rows allowed) are row-normalized
    and reordered to the internal node order.
    """
    edges = read_edge_list(path)
    ids = sorted({v for e in edges for v in e})
    index = {v: i for i, v in enumerate(ids)}
    A = build_adjacency(len(ids), [(index[i], index[j]) for i, j in edges])
    Pi = None
    if ground_truth_path is not None:
        gt_ids, M = read_membership_csv(ground_truth_path, normalize=True)
        gt_index = {v: k for k, v in enumerate(gt_ids)}
        missing = [v for v in ids if v not in gt_index]
        extra = [v for v in gt_ids if v not in index]
        if missing or extra or len(gt_ids) != len(ids):
            raise GraphError(
                f"node count mismatch: network has {len(ids)} nodes, ground truth "
                f"{len(gt_ids)} rows (missing {missing[:10]}, unknown {extra[:10]})"
            )
        Pi = M[[gt_index[v] for v in ids]]
    return IngestedNetwork(A=A, node_ids=ids, Pi=Pi)


def write_params_config(params: DcmmParams, path, pi_path=None) -> None:
    """``key=value`` text; ``P=`` rows separated by ``;``; ``pi=`` names a
    membership CSV written next to the config when not given."""
    path = Path(path)
    pi_path = Path(pi_path) if pi_path else path.with_suffix(".pi.csv")
    write_membership_csv(params.Pi, pi_path)
    lines = [
        f"n={params.n}",
        f"K={params.K}",
        "P=" + "; ".join(" ".join(repr(float(v)) for v in row) for row in params.P),
        "theta=" + " ".join(repr(float(v)) for v in params.theta),
        f"pi={pi_path.name if pi_path.parent == path.parent else pi_path}",
    ]
    path.write_text("\n".join(lines) + "\n")


def read_params_config(path, seed=0) -> DcmmParams:
    """Parse a DCMM config.

    Keys: ``n``, ``K``, ``P`` (rows separated by ``;`` or on following
    lines), ``theta`` (inline values or ``uniform_inverse:z``, drawn with
    ``seed`` or the file's ``seed=``), ``pi`` (membership CSV path, relative
    to the config).
    """
    path = Path(path)
    kv: dict[str, str] = {}
    last = None
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line:
            key, val = (s.strip() for s in line.split("=", 1))
            kv[key] = val
            last = key
        elif last in ("P", "theta"):
            sep = "; " if last == "P" and kv[last] else " "
            kv[last] = (kv[last] + sep + line).strip()
        else:
            raise InvalidParametersError(f"{path}:{lineno}: expected key=value, got {raw!r}")
    for key in ("n", "K", "P", "theta", "pi"):
        if key not in kv:
            raise InvalidParametersError(f"{path}: missing key {key!r}")
    n, K = int(kv["n"]), int(kv["K"])
    rows = [r.split() for r in kv["P"].split(";") if r.strip()]
    P = np.array(rows, dtype=np.float64)
    if P.shape != (K, K):
        raise InvalidParametersError(f"{path}: P must be {K}x{K}, got {P.shape}")
    pi_path = Path(kv["pi"])
    if not pi_path.is_absolute():
        pi_path = path.parent / pi_path
    _, Pi = read_membership_csv(pi_path)
    if Pi.shape != (n, K):
        raise InvalidParametersError(f"{path}: pi must be {n}x{K}, got {Pi.shape}")
    theta_text = kv["theta"]
    if theta_text.startswith("uniform_inverse:"):
        z = float(theta_text.split(":", 1)[1])
        rng = make_rng(int(kv.get("seed", seed)))
        theta = 1.0 / (rng.uniform(1.0, z, size=n) if z > 1 else np.ones(n))
    else:
        theta = np.array(theta_text.split(), dtype=np.float64)
    return DcmmParams(P=P, theta=theta, Pi=Pi)
