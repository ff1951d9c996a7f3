"""Delay-coordinate reconstruction of a scalar series.

Steps: rescale to [0, 1], rank-transform to uniform deviates, choose the
delay from the first minimum of the lagged mutual information, choose the
dimension by false nearest neighbours, then stack lagged copies.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

__all__ = [
    "DegenerateSeriesError",
    "EmbeddingParams",
    "LagChoice",
    "DimensionChoice",
    "rescale",
    "uniform_deviate",
    "delayed_mutual_information",
    "mutual_information_curve",
    "first_minimum_lag",
    "false_neighbor_fraction",
    "fnn_embedding_dimension",
    "embed",
    "attractor_spread",
]


class DegenerateSeriesError(ValueError):
    """Series has zero range and cannot be rescaled."""


@dataclass(frozen=True)
class EmbeddingParams:
    t_d: int
    d_emb: int

    def __post_init__(self):
        if self.t_d < 1 or self.d_emb < 1:
            raise ValueError("t_d and d_emb must be >= 1")


@dataclass(frozen=True)
class LagChoice:
    t_d: int
    clear_minimum: bool
    mi: np.ndarray = field(repr=False)  # mi[l] for l = 0..max_lag


@dataclass(frozen=True)
class DimensionChoice:
    d_emb: int
    converged: bool
    fractions: tuple[float, ...]  # false-neighbour fraction for d = 1, 2, ...


def rescale(raw) -> np.ndarray:
    s = np.asarray(raw, dtype=np.float64)
    if s.size < 2 or not np.all(np.isfinite(s)):
        raise ValueError("series needs at least two finite values")
    lo, hi = s.min(), s.max()
    if hi == lo:
        raise DegenerateSeriesError(f"constant series (value {lo!r})")
    y = (s - lo) / (hi - lo)
    # guard against round-off pushing the extremes off 0 and 1
    y[s == lo] = 0.0
    y[s == hi] = 1.0
    return y


def uniform_deviate(y) -> np.ndarray:
    """``u(i) = #{j : y(j) <= y(i)} / N``; tied values share the larger rank."""
    y = np.asarray(y, dtype=np.float64)
    srt = np.sort(y)
    return np.searchsorted(srt, y, side="right") / y.size


def _mi_from_codes(a: np.ndarray, b: np.ndarray, bins: int) -> float:
    joint = np.bincount(a * bins + b, minlength=bins * bins).astype(np.float64)
    joint /= joint.sum()
    pa = joint.reshape(bins, bins).sum(axis=1)
    pb = joint.reshape(bins, bins).sum(axis=0)
    outer = np.multiply.outer(pa, pb).ravel()
    nz = joint > 0
    return max(float(np.sum(joint[nz] * np.log(joint[nz] / outer[nz]))), 0.0)


def _bin_codes(u: np.ndarray, bins: int) -> np.ndarray:
    # equal-width bins on [0, 1]; the value 1.0 belongs to the last bin
    return np.minimum((u * bins).astype(np.int64), bins - 1)


def delayed_mutual_information(u, lag: int, bins: int = 32) -> float:
    """Histogram estimate (nats) of I(u(i); u(i + lag)) on a bins x bins grid over [0, 1]^2."""
    u = np.asarray(u, dtype=np.float64)
    if lag < 0 or lag >= u.size:
        raise ValueError(f"lag {lag} out of range for series of length {u.size}")
    if bins < 2:
        raise ValueError("bins must be >= 2")
    c = _bin_codes(u, bins)
    return _mi_from_codes(c[: u.size - lag], c[lag:], bins)


def mutual_information_curve(u, max_lag: int, bins: int = 32) -> np.ndarray:
    u = np.asarray(u, dtype=np.float64)
    c = _bin_codes(u, bins)
    n = u.size
    return np.array([_mi_from_codes(c[: n - lag], c[lag:], bins) for lag in range(max_lag + 1)])


def first_minimum_lag(u, max_lag: int = 200, bins: int = 32) -> LagChoice:
    """Delay at the first local minimum of the lagged mutual information.

    The scan starts at lag 0 (the series against itself), so lag 1 can be a
    minimum.  Without an interior minimum the global argmin over lags
    ``1..max_lag`` is returned with ``clear_minimum=False``.
    """
    if max_lag < 3:
        raise ValueError("max_lag must be >= 3")
    u = np.asarray(u, dtype=np.float64)
    max_lag = min(max_lag, u.size - 2)
    mi = mutual_information_curve(u, max_lag, bins)
    for lag in range(1, max_lag):
        if mi[lag - 1] > mi[lag] < mi[lag + 1]:
            return LagChoice(lag, True, mi)
    return LagChoice(int(np.argmin(mi[1:])) + 1, False, mi)


def embed(u, p: EmbeddingParams) -> np.ndarray:
    """State vectors ``x_j = (u(j), u(j + t_d), ..., u(j + (d_emb - 1) t_d))``.

    Returns an array of shape ``(N - (d_emb - 1) t_d, d_emb)``.
    """
    u = np.asarray(u, dtype=np.float64)
    span = (p.d_emb - 1) * p.t_d
    if span >= u.size:
        raise ValueError(f"(d_emb - 1) * t_d = {span} must be < N = {u.size}")
    n_vec = u.size - span
    return np.stack([u[k * p.t_d : k * p.t_d + n_vec] for k in range(p.d_emb)], axis=1)


def _nearest_other(x: np.ndarray, k: int = 4) -> tuple[np.ndarray, np.ndarray]:
    """Nearest neighbour excluding the point itself; equal distances go to the lower index."""
    k = min(k, len(x))
    dist, idx = cKDTree(x).query(x, k=k)
    dist = np.where(idx == np.arange(len(x))[:, None], np.inf, dist)
    best = dist.min(axis=1)
    cand = np.where(dist == best[:, None], idx, np.iinfo(np.int64).max)
    return best, cand.min(axis=1)


def false_neighbor_fraction(u, t_d: int, d: int, r_tol: float = 10.0, a_tol: float = 2.0) -> float:
    """Fraction of nearest neighbours in dimension ``d`` that separate in ``d + 1``.

    A neighbour is false if the added coordinate stretches the pair by more
    than ``r_tol`` times its ``d``-dimensional distance, or if the
    ``(d + 1)``-dimensional distance exceeds ``a_tol`` times the series
    standard deviation.
    """
    u = np.asarray(u, dtype=np.float64)
    n_vec = u.size - d * t_d
    if n_vec < 2:
        raise ValueError("series too short for this dimension")
    x = embed(u, EmbeddingParams(t_d, d))[:n_vec]
    extra = u[d * t_d : d * t_d + n_vec]
    r_d, nn = _nearest_other(x)
    gap = np.abs(extra - extra[nn])
    ok = r_d > 0
    crit1 = gap[ok] > r_tol * r_d[ok]
    crit2 = np.sqrt(r_d[ok] ** 2 + gap[ok] ** 2) > a_tol * u.std()
    if not ok.any():
        return 0.0
    return float(np.mean(crit1 | crit2))


def fnn_embedding_dimension(
    u, t_d: int, d_max: int = 10, threshold: float = 0.01, r_tol: float = 10.0, a_tol: float = 2.0
) -> DimensionChoice:
    """Smallest ``d`` whose false-neighbour fraction drops below ``threshold``."""
    if d_max < 2:
        raise ValueError("d_max must be >= 2")
    fractions = []
    for d in range(1, d_max + 1):
        if np.asarray(u).size - d * t_d < 2:
            break
        f = false_neighbor_fraction(u, t_d, d, r_tol, a_tol)
        fractions.append(f)
        if f < threshold:
            return DimensionChoice(d, True, tuple(fractions))
    return DimensionChoice(d_max, False, tuple(fractions))


def attractor_spread(u, t_d: int) -> float:
    """Summary of the (u(i), u(i + t_d)) delay plot: mean distance from the diagonal.

    Used to compare delay-plot datasets across parameter values.
    """
    u = np.asarray(u, dtype=np.float64)
    return float(np.mean(np.abs(u[t_d:] - u[:-t_d])) / np.sqrt(2.0))
