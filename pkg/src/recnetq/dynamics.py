"""Exact evolution of the Lambda-atom / two-mode model via invariant 3x3 blocks.

With the atom starting in level 1 and both modes in coherent states, every
product state ``|1, n, m>`` seeds a three-dimensional invariant subspace

    {|1, n, m>, |3, n-1, m>, |2, n-1, m+1>}

and distinct seeds give orthogonal subspaces.  The mean photon number of
mode 1 is therefore a Poisson-weighted sum of independent block
contributions, each of which is a finite cosine sum in time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import poisson

__all__ = [
    "ModelParams",
    "InitialState",
    "FockTruncation",
    "BlockHamiltonian",
    "MeanPhotonSeries",
    "TimeGrid",
    "TruncationError",
    "truncation_bound",
    "build_block",
    "evolve_block",
    "block_spectrum",
    "mean_photon_series",
]


class TruncationError(ValueError):
    """Retained Fock weights do not cover enough probability mass."""


@dataclass(frozen=True)
class ModelParams:
    chi: float = 5.0
    kappa: float = 0.0
    lam: float = 1.0
    kappa2: float = 0.0
    detuning: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.kappa <= 1.0:
            raise ValueError(f"kappa must lie in [0, 1], got {self.kappa}")
        if not self.chi > 0:
            raise ValueError(f"chi must be positive, got {self.chi}")
        if self.lam != 1.0 or self.kappa2 != 0.0 or self.detuning != 0.0:
            raise ValueError("only lambda=1, kappa2=0 and zero detuning are supported")


@dataclass(frozen=True)
class InitialState:
    """Atom in level 1, both modes in the coherent state with mean ``alpha_sq``."""

    alpha_sq: float = 25.0
    atom_level: int = 1

    def __post_init__(self):
        if self.alpha_sq < 0:
            raise ValueError(f"alpha_sq must be >= 0, got {self.alpha_sq}")
        if self.atom_level != 1:
            raise ValueError("only atom_level=1 is supported")


@dataclass(frozen=True)
class FockTruncation:
    n_max: int
    tail_eps: float = 1e-12


@dataclass(frozen=True)
class TimeGrid:
    t0: float
    dt: float
    count: int

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("grid count must be >= 1")
        if not self.dt > 0:
            raise ValueError("grid dt must be positive")

    def times(self) -> np.ndarray:
        # t0 + k*dt, evaluated (not accumulated) so refined grids share samples exactly
        return self.t0 + self.dt * np.arange(self.count, dtype=np.float64)


@dataclass(frozen=True)
class BlockHamiltonian:
    n: int
    m: int
    dim: int
    matrix: np.ndarray = field(repr=False)
    weight: float


@dataclass(frozen=True)
class MeanPhotonSeries:
    t0: float
    dt: float
    values: np.ndarray = field(repr=False)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self.values), dtype=np.float64)

    def __len__(self):
        return len(self.values)


def truncation_bound(alpha_sq: float, tail_eps: float = 1e-12) -> FockTruncation:
    """Smallest ``n_max`` whose Poisson(alpha_sq) upper tail P(n > n_max) < tail_eps."""
    if alpha_sq < 0:
        raise ValueError("alpha_sq must be >= 0")
    if not 0 < tail_eps < 1:
        raise ValueError("tail_eps must lie in (0, 1)")
    if alpha_sq == 0:
        return FockTruncation(0, tail_eps)
    cap = int(math.ceil(alpha_sq + 12.0 * math.sqrt(alpha_sq) + 20))
    tail = poisson.sf(np.arange(cap + 1), alpha_sq)
    below = np.nonzero(tail < tail_eps)[0]
    return FockTruncation(int(below[0]) if below.size else cap, tail_eps)


def _poisson_pmf(alpha_sq: float, n_max: int) -> np.ndarray:
    k = np.arange(n_max + 1)
    if alpha_sq == 0:
        return (k == 0).astype(np.float64)
    return poisson.pmf(k, alpha_sq)


def _block_matrix(n: int, m: int, chi: float, kappa: float, lam: float = 1.0) -> np.ndarray:
    h13 = lam * math.sqrt(n * (1.0 + kappa * n))
    h23 = lam * math.sqrt(m + 1.0)
    return np.array(
        [
            [2.0 * chi * (n - 1), h13, 0.0],
            [h13, 0.0, h23],
            [0.0, h23, 2.0 * chi * m],
        ]
    )


def build_block(n: int, m: int, params: ModelParams, init: InitialState) -> BlockHamiltonian:
    """Block Hamiltonian seeded by ``|1, n, m>``.

    Energies are measured from that of ``|3, n-1, m>`` so the diagonal is
    ``(2 chi (n-1), 0, 2 chi m)``.  For ``n == 0`` the seed is an eigenstate and
    the block is one-dimensional.
    """
    if n < 0 or m < 0:
        raise ValueError("photon labels must be non-negative")
    pn = _poisson_pmf(init.alpha_sq, max(n, m))
    weight = float(pn[n] * pn[m])
    if n == 0:
        return BlockHamiltonian(0, m, 1, np.zeros((1, 1)), weight)
    return BlockHamiltonian(n, m, 3, _block_matrix(n, m, params.chi, params.kappa, params.lam), weight)


def evolve_block(block: BlockHamiltonian, t) -> np.ndarray:
    """Amplitudes ``exp(-i H t) (1, 0, 0)`` on the block basis.

    ``t`` may be a scalar or an array; the result has shape ``t.shape + (dim,)``.
    """
    t = np.asarray(t, dtype=np.float64)
    if block.dim == 1:
        return np.exp(-1j * block.matrix[0, 0] * t)[..., None]
    energies, vecs = np.linalg.eigh(block.matrix)
    coeff = vecs * vecs[0]  # coeff[r, j] = V[r, j] V[0, j]
    phases = np.exp(-1j * np.multiply.outer(t, energies))
    return phases @ coeff.T


def block_spectrum(n: np.ndarray, m: np.ndarray, chi: float, kappa: float, lam: float = 1.0):
    """Batched eigen-decomposition of the 3x3 blocks for seeds ``(n, m)``, ``n >= 1``.

    Returns ``(energies, first_row)`` with ``first_row[b, j] = V[0, j]`` so that
    the seed-state amplitude is ``A1(t) = sum_j first_row_j**2 exp(-i E_j t)``.
    """
    n = np.asarray(n, dtype=np.float64)
    m = np.asarray(m, dtype=np.float64)
    mats = np.zeros((n.size, 3, 3))
    h13 = lam * np.sqrt(n * (1.0 + kappa * n))
    h23 = lam * np.sqrt(m + 1.0)
    mats[:, 0, 0] = 2.0 * chi * (n - 1)
    mats[:, 2, 2] = 2.0 * chi * m
    mats[:, 0, 1] = mats[:, 1, 0] = h13
    mats[:, 1, 2] = mats[:, 2, 1] = h23
    energies, vecs = np.linalg.eigh(mats)
    return energies, vecs[:, 0, :]


def _block_table(params: ModelParams, init: InitialState, trunc: FockTruncation, min_weight: float):
    """Seeds, weights and the static/oscillating parts of each block's <N1> contribution."""
    pn = _poisson_pmf(init.alpha_sq, trunc.n_max)
    total = float(pn.sum() ** 2)
    if total < 1.0 - 2.0 * trunc.tail_eps:
        raise TruncationError(
            f"retained weight {total:.15g} < 1 - 2*tail_eps for n_max={trunc.n_max}"
        )
    nn, mm = np.meshgrid(np.arange(1, trunc.n_max + 1), np.arange(trunc.n_max + 1), indexing="ij")
    nn, mm = nn.ravel(), mm.ravel()
    w = pn[nn] * pn[mm]
    keep = w > min_weight
    nn, mm, w = nn[keep], mm[keep], w[keep]
    energies, row = block_spectrum(nn, mm, params.chi, params.kappa, params.lam)
    q = row**2  # populations of the seed state in each eigenvector
    # |A1|^2 = sum_j q_j^2 + 2 sum_{j<k} q_j q_k cos((E_j - E_k) t)
    static = w * (nn - 1 + np.sum(q**2, axis=1))
    pairs = ((0, 1), (0, 2), (1, 2))
    freqs = np.stack([energies[:, j] - energies[:, k] for j, k in pairs], axis=1)
    amps = np.stack([2.0 * w * q[:, j] * q[:, k] for j, k in pairs], axis=1)
    return math.fsum(static), freqs.ravel(), amps.ravel()


def mean_photon_series(
    params: ModelParams,
    init: InitialState,
    trunc: FockTruncation,
    grid: TimeGrid,
    *,
    min_weight: float = 1e-18,
    chunk: int = 2048,
) -> MeanPhotonSeries:
    """<N1>(tau) on ``grid`` summed over all retained blocks.

    Blocks with Poisson weight below ``min_weight`` are dropped; their total
    contribution is bounded by ``n_max * (number dropped) * min_weight``.
    The block sum is carried out in a fixed order for each time chunk, so
    the result does not depend on how the grid is split.
    """
    static, freqs, amps = _block_table(params, init, trunc, min_weight)
    times = grid.times()
    out = np.empty(grid.count)
    for start in range(0, grid.count, chunk):
        t = times[start : start + chunk]
        out[start : start + chunk] = static + (np.cos(np.multiply.outer(t, freqs)) * amps).sum(axis=1)
    return MeanPhotonSeries(grid.t0, grid.dt, out)
