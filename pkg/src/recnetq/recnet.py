"""epsilon-recurrence networks on delay vectors and their critical threshold."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import breadth_first_order, connected_components
from scipy.sparse.linalg import LinearOperator, eigsh, splu
from scipy.spatial import cKDTree

__all__ = [
    "RecurrenceNetwork",
    "EpsilonSearchResult",
    "SpectralResult",
    "build_network",
    "brute_force_edges",
    "grid_edges",
    "network_from_edges",
    "laplacian_l2",
    "is_connected",
    "component_count",
    "critical_epsilon",
]


@dataclass(frozen=True, eq=False)
class RecurrenceNetwork:
    """Simple undirected graph stored as sorted CSR neighbour lists."""

    n_nodes: int
    indptr: np.ndarray = field(repr=False)
    indices: np.ndarray = field(repr=False)
    eps: float | None = None

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    @property
    def n_edges(self) -> int:
        return int(self.indices.size // 2)

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i] : self.indptr[i + 1]]

    def edges(self) -> np.ndarray:
        """``(n_edges, 2)`` array of pairs ``i < j`` in lexicographic order."""
        rows = np.repeat(np.arange(self.n_nodes), self.degrees)
        keep = rows < self.indices
        return np.stack([rows[keep], self.indices[keep]], axis=1)

    def adjacency(self) -> sp.csr_matrix:
        data = np.ones(self.indices.size, dtype=np.float64)
        return sp.csr_matrix((data, self.indices, self.indptr), shape=(self.n_nodes, self.n_nodes))


@dataclass(frozen=True)
class SpectralResult:
    l2: float
    converged: bool


@dataclass(frozen=True)
class EpsilonSearchResult:
    epsilon_c: float
    l2_at_c: float
    l2_converged: bool
    probes: tuple[tuple[float, bool], ...]
    resolution: float


def network_from_edges(n_nodes: int, edges, eps: float | None = None) -> RecurrenceNetwork:
    """Build from an iterable of undirected pairs; duplicates and self-loops are dropped."""
    e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if e.size and (e.min() < 0 or e.max() >= n_nodes):
        raise ValueError("edge endpoint out of range")
    e = e[e[:, 0] != e[:, 1]]
    both = np.concatenate([e, e[:, ::-1]])
    key = np.unique(both[:, 0] * n_nodes + both[:, 1])
    rows, cols = key // n_nodes, key % n_nodes
    indptr = np.zeros(n_nodes + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n_nodes), out=indptr[1:])
    return RecurrenceNetwork(n_nodes, indptr, cols.astype(np.int64), eps)


def brute_force_edges(x, eps: float, chunk: int = 512) -> np.ndarray:
    """All pairs ``i < j`` with ``||x_i - x_j|| <= eps`` by direct distance evaluation."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    out = []
    for start in range(0, len(x), chunk):
        blk = x[start : start + chunk]
        d2 = ((blk[:, None, :] - x[None, start:, :]) ** 2).sum(axis=-1)
        i, j = np.nonzero(d2 <= eps * eps)
        i = i + start
        j = j + start
        keep = i < j
        out.append(np.stack([i[keep], j[keep]], axis=1))
    if not out:
        return np.empty((0, 2), dtype=np.int64)
    return np.concatenate(out).astype(np.int64)


def _half_offsets(dim: int):
    # one of each {o, -o} pair, excluding the zero offset
    for o in itertools.product((-1, 0, 1), repeat=dim):
        nz = [v for v in o if v != 0]
        if nz and nz[0] > 0:
            yield np.array(o, dtype=np.int64)


def grid_edges(x, eps: float, max_candidates: int = 4_000_000) -> np.ndarray:
    """Fixed-radius pairs via a uniform cell index with cell side ``eps``.

    Every pair within ``eps`` lies in the same or an adjacent cell, so only
    ``(3**d + 1) / 2`` cell offsets need to be visited.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    n, dim = x.shape
    if n < 2:
        return np.empty((0, 2), dtype=np.int64)
    if eps <= 0:
        # only coincident points connect at eps == 0
        return brute_force_edges(x, eps)
    with np.errstate(over="ignore"):
        fcell = np.floor((x - x.min(axis=0)) / eps)
        n_cells = float(np.prod(fcell.max(axis=0) + 3.0))
    if not np.all(np.isfinite(fcell)) or not n_cells <= 2.0**62:
        # too many cells for a flat integer key
        return brute_force_edges(x, eps)
    cell = fcell.astype(np.int64) + 1
    shape = cell.max(axis=0) + 2
    strides = np.cumprod(np.concatenate([[1], shape[::-1][:-1]]))[::-1]
    keys = cell @ strides
    order = np.argsort(keys, kind="stable")
    skeys = keys[order]
    ukeys, starts, counts = np.unique(skeys, return_index=True, return_counts=True)
    eps2 = eps * eps
    found = []

    def emit(p_sorted: np.ndarray, lo: np.ndarray, cnt: np.ndarray):
        # pairs (p, q) with q running over sorted positions lo..lo+cnt-1
        total = int(cnt.sum())
        if total == 0:
            return
        bounds = np.cumsum(cnt)
        step = max(1, int(np.searchsorted(bounds, max_candidates)))
        for s in range(0, len(p_sorted), step):
            pp, ll, cc = p_sorted[s : s + step], lo[s : s + step], cnt[s : s + step]
            rep = np.repeat(pp, cc)
            base = np.repeat(ll - np.concatenate([[0], np.cumsum(cc)[:-1]]), cc)
            qq = base + np.arange(rep.size)
            a, b = order[rep], order[qq]
            d2 = ((x[a] - x[b]) ** 2).sum(axis=1)
            hit = d2 <= eps2
            found.append(np.stack([a[hit], b[hit]], axis=1))

    # same cell: later members of the run
    pos = np.arange(n)
    cell_of = np.repeat(np.arange(len(ukeys)), counts)
    run_end = starts[cell_of] + counts[cell_of]
    emit(pos, pos + 1, run_end - pos - 1)

    for off in _half_offsets(dim):
        target = skeys + int(off @ strides)
        j = np.searchsorted(ukeys, target)
        j = np.minimum(j, len(ukeys) - 1)
        hit = ukeys[j] == target
        if hit.any():
            emit(pos[hit], starts[j[hit]], counts[j[hit]])

    if not found:
        return np.empty((0, 2), dtype=np.int64)
    e = np.concatenate(found)
    e = np.sort(e, axis=1)
    key = np.unique(e[:, 0] * n + e[:, 1])
    return np.stack([key // n, key % n], axis=1)


def build_network(vs, eps: float, method: str = "grid") -> RecurrenceNetwork:
    """Recurrence network: edge ``(i, j)``, ``i != j``, iff ``||x_i - x_j|| <= eps``."""
    if eps < 0:
        raise ValueError("eps must be >= 0")
    x = np.asarray(vs, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if method == "grid":
        e = grid_edges(x, eps)
    elif method == "brute":
        e = brute_force_edges(x, eps)
    else:
        raise ValueError(f"unknown method {method!r}")
    return network_from_edges(len(x), e, eps)


def is_connected(net: RecurrenceNetwork) -> bool:
    """Breadth-first reachability from node 0 covers every node."""
    if net.n_nodes <= 1:
        return True
    reached = breadth_first_order(net.adjacency(), 0, directed=False, return_predecessors=False)
    return len(reached) == net.n_nodes


def component_count(net: RecurrenceNetwork) -> int:
    return int(connected_components(net.adjacency(), directed=False)[0])


def laplacian_l2(net: RecurrenceNetwork, shift: float = 1e-3, tol: float = 1e-12, maxiter: int = 5000) -> SpectralResult:
    """Second-smallest eigenvalue of ``L = D - A``.

    Shift-invert Lanczos on ``(L + shift I)^-1`` restricted to the complement
    of the all-ones vector (the known null vector of ``L``); the dominant
    eigenvalue there is ``1 / (l2 + shift)``.
    """
    n = net.n_nodes
    if n < 2:
        raise ValueError("need at least two nodes")
    lap = sp.diags(net.degrees.astype(np.float64)) - net.adjacency()
    lu = splu((lap + shift * sp.identity(n, format="csr")).tocsc())

    def matvec(v):
        v = np.ravel(v)
        v = v - v.mean()
        w = lu.solve(v)
        return w - w.mean()

    if n == 2:
        # the deflated space is one-dimensional; apply the operator to its basis vector
        v = np.array([1.0, -1.0]) / np.sqrt(2.0)
        mu = float(v @ matvec(v))
        return SpectralResult(max(1.0 / mu - shift, 0.0), True)
    op = LinearOperator((n, n), matvec=matvec, dtype=np.float64)
    rng = np.random.default_rng(0)
    v0 = rng.standard_normal(n)
    v0 -= v0.mean()
    try:
        mu = eigsh(op, k=1, which="LA", v0=v0, tol=tol, maxiter=maxiter, return_eigenvectors=False)[0]
        converged = True
    except Exception as err:  # ArpackNoConvergence carries partial results
        vals = getattr(err, "eigenvalues", None)
        if vals is None or len(vals) == 0:
            raise
        mu, converged = vals[0], False
    return SpectralResult(max(1.0 / float(mu) - shift, 0.0), converged)


def _grid_value(k: int, resolution: float) -> float:
    return round(k * resolution, 12)


def critical_epsilon(vs, resolution: float = 0.005, certify: bool = True) -> EpsilonSearchResult:
    """Smallest ``eps`` on the grid ``{r, 2r, ...}`` giving a connected network.

    The bracket starts at the largest nearest-neighbour distance (a lower
    bound: below it some node is isolated), is widened by doubling, and is
    then bisected.  Connectivity is monotone in ``eps`` because edge sets
    are nested.
    """
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    x = np.asarray(vs, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    probes: list[tuple[float, bool]] = []

    def probe(k: int) -> bool:
        eps = _grid_value(k, resolution)
        ok = is_connected(build_network(x, eps))
        probes.append((eps, ok))
        return ok

    nn = cKDTree(x).query(x, k=2)[0][:, 1].max() if len(x) > 1 else 0.0
    # below the largest nearest-neighbour distance some node is isolated
    lo = max(int(np.floor(nn / resolution)) - 1, 0)
    hi, width = lo + 1, 1
    while not probe(hi):
        lo, width = hi, width * 2
        hi = lo + width
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if probe(mid):
            hi = mid
        else:
            lo = mid
    eps_c = _grid_value(hi, resolution)
    l2, conv = float("nan"), False
    if certify and len(x) >= 2:
        res = laplacian_l2(build_network(x, eps_c))
        l2, conv = res.l2, res.converged
    return EpsilonSearchResult(eps_c, l2, conv, tuple(probes), resolution)
