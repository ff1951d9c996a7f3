"""Structural measures of recurrence networks."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numba
import numpy as np

from .recnet import RecurrenceNetwork

__all__ = [
    "DisconnectedGraphError",
    "PathLengthResult",
    "MetricsReport",
    "average_path_length",
    "link_density",
    "triangles_per_node",
    "local_clustering",
    "global_clustering",
    "transitivity",
    "degree_distribution",
    "assortativity",
    "compute_metrics",
]


class DisconnectedGraphError(ValueError):
    """A shortest path is infinite."""


@dataclass(frozen=True)
class PathLengthResult:
    value: float
    exact: bool
    n_sources: int
    seed: int | None


@dataclass
class MetricsReport:
    n_nodes: int
    n_edges: int
    eps: float | None
    apl: float
    apl_exact: bool
    apl_sources: int
    apl_seed: int | None
    link_density: float
    global_cc: float
    transitivity: float
    triangles: int
    assortativity: float | None
    degree_histogram: dict[int, int]
    local_cc: np.ndarray = field(repr=False)

    def summary(self) -> dict:
        d = asdict(self)
        d.pop("local_cc")
        d["degree_histogram"] = {str(k): v for k, v in self.degree_histogram.items()}
        d["assortativity_definition"] = "pearson degree-degree correlation over edge ends"
        return d


@numba.njit(cache=True)
def _bfs_distance_sums(indptr, indices, sources):
    n = indptr.size - 1
    dist = np.empty(n, np.int64)
    queue = np.empty(n, np.int64)
    sums = np.zeros(sources.size, np.int64)
    reached = np.zeros(sources.size, np.int64)
    for s in range(sources.size):
        dist[:] = -1
        dist[sources[s]] = 0
        queue[0] = sources[s]
        head, tail, total = 0, 1, 0
        while head < tail:
            v = queue[head]
            head += 1
            dv = dist[v] + 1
            for p in range(indptr[v], indptr[v + 1]):
                w = indices[p]
                if dist[w] < 0:
                    dist[w] = dv
                    total += dv
                    queue[tail] = w
                    tail += 1
        sums[s] = total
        reached[s] = tail
    return sums, reached


def average_path_length(
    net: RecurrenceNetwork,
    exact_limit: int = 5000,
    n_sources: int = 1000,
    seed: int = 0,
) -> PathLengthResult:
    """Mean BFS distance over ordered pairs ``i != j``.

    Exact when the graph has at most ``exact_limit`` nodes; otherwise the
    mean over ``n_sources`` distinct source nodes drawn with ``seed``.
    """
    p = net.n_nodes
    if p < 2:
        raise ValueError("need at least two nodes")
    if p <= exact_limit:
        sources, exact, used_seed = np.arange(p), True, None
    else:
        rng = np.random.default_rng(seed)
        sources = np.sort(rng.choice(p, size=min(n_sources, p), replace=False))
        exact, used_seed = False, seed
    sums, reached = _bfs_distance_sums(net.indptr, net.indices, sources.astype(np.int64))
    if np.any(reached < p):
        raise DisconnectedGraphError("graph is disconnected; average path length is infinite")
    # integer sums are exact; one division at the end
    return PathLengthResult(int(sums.sum()) / (len(sources) * (p - 1)), exact, len(sources), used_seed)


def link_density(net: RecurrenceNetwork) -> float:
    p = net.n_nodes
    if p < 2:
        return 0.0
    return float(net.degrees.sum()) / (p * (p - 1))


@numba.njit(cache=True)
def _triangle_counts(indptr, indices):
    n = indptr.size - 1
    tri = np.zeros(n, np.int64)
    for i in range(n):
        for p in range(indptr[i], indptr[i + 1]):
            j = indices[p]
            if j <= i:
                continue
            # merge the sorted lists N(i) and N(j), keeping k > j so each triangle counts once
            a, a_end = indptr[i], indptr[i + 1]
            b, b_end = indptr[j], indptr[j + 1]
            while a < a_end and b < b_end:
                ka, kb = indices[a], indices[b]
                if ka < kb:
                    a += 1
                elif kb < ka:
                    b += 1
                else:
                    if ka > j:
                        tri[i] += 1
                        tri[j] += 1
                        tri[ka] += 1
                    a += 1
                    b += 1
    return tri


def triangles_per_node(net: RecurrenceNetwork) -> np.ndarray:
    """Number of triangles through each node, by sorted neighbour-list intersection over edges."""
    return _triangle_counts(net.indptr, net.indices)


def local_clustering(net: RecurrenceNetwork, tri: np.ndarray | None = None) -> np.ndarray:
    """``C_i = 2 t_i / (k_i (k_i - 1))``, with ``C_i = 0`` for ``k_i <= 1``."""
    if tri is None:
        tri = triangles_per_node(net)
    k = net.degrees.astype(np.float64)
    pairs = k * (k - 1)
    out = np.zeros(net.n_nodes)
    ok = pairs > 0
    out[ok] = 2.0 * tri[ok] / pairs[ok]
    return out


def global_clustering(net: RecurrenceNetwork, local: np.ndarray | None = None) -> float:
    if net.n_nodes == 0:
        return 0.0
    if local is None:
        local = local_clustering(net)
    return math.fsum(local) / net.n_nodes


def transitivity(net: RecurrenceNetwork, tri: np.ndarray | None = None) -> float:
    """Closed over connected triples: ``3 * triangles / sum_i k_i (k_i - 1) / 2``."""
    if tri is None:
        tri = triangles_per_node(net)
    k = net.degrees.astype(np.int64)
    triples = int(np.sum(k * (k - 1)))
    if triples == 0:
        return 0.0
    return float(2 * int(tri.sum())) / triples  # sum_i t_i = 3T, triples counted ordered


def degree_distribution(net: RecurrenceNetwork) -> dict[int, int]:
    vals, counts = np.unique(net.degrees, return_counts=True)
    return {int(v): int(c) for v, c in zip(vals, counts)}


def assortativity(net: RecurrenceNetwork) -> float | None:
    """Pearson correlation of degrees at the two ends of each edge.

    ``None`` when the end-degree variance vanishes (e.g. regular graphs) or
    the graph has no edges.
    """
    e = net.edges()
    if len(e) == 0:
        return None
    k = net.degrees.astype(np.float64)
    # symmetrise so both orientations of every edge contribute
    x = np.concatenate([k[e[:, 0]], k[e[:, 1]]])
    y = np.concatenate([k[e[:, 1]], k[e[:, 0]]])
    xm = x - x.mean()
    ym = y - y.mean()
    var = float(np.dot(xm, xm))
    if var <= 0.0:
        return None
    r = float(np.dot(xm, ym)) / var
    return min(1.0, max(-1.0, r))


def compute_metrics(net: RecurrenceNetwork, exact_limit: int = 5000, n_sources: int = 1000, seed: int = 0) -> MetricsReport:
    tri = triangles_per_node(net)
    local = local_clustering(net, tri)
    apl = average_path_length(net, exact_limit=exact_limit, n_sources=n_sources, seed=seed)
    return MetricsReport(
        n_nodes=net.n_nodes,
        n_edges=net.n_edges,
        eps=net.eps,
        apl=apl.value,
        apl_exact=apl.exact,
        apl_sources=apl.n_sources,
        apl_seed=apl.seed,
        link_density=link_density(net),
        global_cc=global_clustering(net, local),
        transitivity=transitivity(net, tri),
        triangles=int(tri.sum()) // 3,
        assortativity=assortativity(net),
        degree_histogram=degree_distribution(net),
        local_cc=local,
    )
