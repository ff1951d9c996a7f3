import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from oracles import DenseModel, smallest_nmax
from recnetq.dynamics import (
    FockTruncation,
    InitialState,
    ModelParams,
    TimeGrid,
    TruncationError,
    build_block,
    evolve_block,
    mean_photon_series,
    truncation_bound,
)


# values frozen from oracles.smallest_nmax (direct mpmath tail summation)
@pytest.mark.parametrize(
    "alpha_sq, tail_eps, expected",
    [(0.0, 1e-12, 0), (25.0, 1e-12, 68), (25.0, 0.5, 25), (20.0, 1e-12, 59), (30.0, 1e-12, 76), (4.0, 1e-6, 17)],
)
def test_truncation_bound(alpha_sq, tail_eps, expected):
    assert truncation_bound(alpha_sq, tail_eps).n_max == expected


@pytest.mark.parametrize("alpha_sq, tail_eps", [(3.0, 1e-8), (9.5, 1e-10)])
def test_truncation_bound_matches_direct_summation(alpha_sq, tail_eps):
    assert truncation_bound(alpha_sq, tail_eps).n_max == smallest_nmax(alpha_sq, tail_eps)


def test_truncation_rejects_bad_input():
    with pytest.raises(ValueError):
        truncation_bound(-1.0)
    with pytest.raises(ValueError):
        truncation_bound(4.0, 1.5)


def test_params_validation():
    with pytest.raises(ValueError):
        ModelParams(kappa=1.5)
    with pytest.raises(ValueError):
        ModelParams(chi=0.0)
    with pytest.raises(ValueError):
        ModelParams(detuning=0.1)
    with pytest.raises(ValueError):
        InitialState(-2.0)


def test_block_n1_m0_kappa0():
    b = build_block(1, 0, ModelParams(chi=5.0, kappa=0.0), InitialState(25.0))
    assert b.dim == 3
    assert np.allclose(np.diag(b.matrix), [0, 0, 0])
    assert b.matrix[0, 1] == 1.0 and b.matrix[1, 2] == 1.0 and b.matrix[0, 2] == 0.0
    assert np.allclose(np.linalg.eigvalsh(b.matrix), [-math.sqrt(2), 0, math.sqrt(2)])


def test_block_vacuum_seed_is_one_dimensional():
    for m in (0, 3, 11):
        assert build_block(0, m, ModelParams(), InitialState(25.0)).dim == 1


def test_block_n2_m1_kappa1():
    b = build_block(2, 1, ModelParams(chi=5.0, kappa=1.0), InitialState(25.0))
    assert np.allclose(np.diag(b.matrix), [10, 0, 10])
    assert b.matrix[0, 1] == pytest.approx(math.sqrt(6))
    assert b.matrix[1, 2] == pytest.approx(math.sqrt(2))
    assert np.allclose(b.matrix, b.matrix.T)


@pytest.mark.parametrize("n, m, kappa", [(2, 1, 1.0), (3, 0, 0.3), (1, 2, 0.0033), (4, 4, 0.07)])
def test_block_matches_dense_hamiltonian(n, m, kappa):
    chi = 5.0
    dense = DenseModel(6, 7, chi, kappa)
    basis = [dense.index(1, n, m), dense.index(3, n - 1, m), dense.index(2, n - 1, m + 1)]
    sub = dense.H[np.ix_(basis, basis)]
    sub = sub - sub[1, 1] * np.eye(3)  # energies relative to |3, n-1, m>
    b = build_block(n, m, ModelParams(chi=chi, kappa=kappa), InitialState(1.0))
    assert np.allclose(sub, b.matrix, atol=1e-12)
    # closure: no coupling out of the three states
    rest = np.setdiff1d(np.arange(dense.H.shape[0]), basis)
    assert np.abs(dense.H[np.ix_(rest, basis)]).max() == 0.0


def test_block_weight_is_poisson_product():
    b = build_block(3, 5, ModelParams(), InitialState(4.0))
    expected = math.exp(-8.0) * 4.0**8 / (math.factorial(3) * math.factorial(5))
    assert b.weight == pytest.approx(expected, rel=1e-12)


def test_evolve_identity_at_zero():
    b = build_block(5, 2, ModelParams(kappa=0.01), InitialState(25.0))
    assert np.allclose(evolve_block(b, 0.0), [1, 0, 0], atol=1e-14)


def test_evolve_symmetric_three_state_transfer_and_revival():
    b = build_block(1, 0, ModelParams(chi=5.0, kappa=0.0), InitialState(25.0))
    half = np.abs(evolve_block(b, math.pi / math.sqrt(2))) ** 2
    full = np.abs(evolve_block(b, math.sqrt(2) * math.pi)) ** 2
    assert half == pytest.approx([0, 0, 1], abs=1e-12)
    assert full == pytest.approx([1, 0, 0], abs=1e-12)


@pytest.mark.parametrize("n, m, kappa, t", [(1, 0, 0.0, 0.7), (7, 3, 0.0033, 17.3), (30, 25, 0.1, 123.4)])
def test_evolve_matches_matrix_exponential(n, m, kappa, t):
    b = build_block(n, m, ModelParams(kappa=kappa), InitialState(25.0))
    ref = expm(-1j * b.matrix * t)[:, 0]
    assert np.allclose(evolve_block(b, t), ref, atol=1e-10)


@settings(max_examples=60, deadline=None)
@given(
    n=st.integers(1, 120),
    m=st.integers(0, 120),
    kappa=st.floats(0, 1),
    chi=st.floats(0.1, 10),
    t=st.floats(0, 4e4),
)
def test_evolve_unitarity(n, m, kappa, chi, t):
    b = build_block(n, m, ModelParams(chi=chi, kappa=kappa), InitialState(25.0))
    amp = evolve_block(b, t)
    assert abs(np.sum(np.abs(amp) ** 2) - 1.0) < 1e-10


def test_conserved_charges_commute_with_dense_hamiltonian():
    dense = DenseModel(5, 6, chi=5.0, kappa=0.37)
    c1 = dense.N1 + dense.sig[(2, 2)] + dense.sig[(3, 3)]
    c2 = dense.N2 - dense.sig[(2, 2)]
    for c in (c1, c2):
        assert np.abs(dense.H @ c - c @ dense.H).max() < 1e-12


@pytest.mark.parametrize("kappa", [0.0, 0.0033, 0.5])
def test_blocks_equal_dense_evolution(kappa):
    n_max, alpha_sq = 6, 1.7
    trunc = FockTruncation(n_max, tail_eps=0.5)
    dense = DenseModel(n_max, n_max + 1, chi=5.0, kappa=kappa)
    psi0 = dense.coherent_initial(alpha_sq, n_max)
    grid = TimeGrid(0.0, 0.37, 271)  # up to t = 99.9
    ref = dense.mean_n1(psi0, grid.times())
    got = mean_photon_series(ModelParams(chi=5.0, kappa=kappa), InitialState(alpha_sq), trunc, grid, min_weight=0.0)
    assert np.abs(got.values - ref).max() < 1e-8


def test_single_block_series_matches_dense():
    # initial state |1, 3, 2> only: one block carries all the weight
    dense = DenseModel(4, 4, chi=5.0, kappa=0.2)
    psi0 = np.zeros(dense.H.shape[0])
    psi0[dense.index(1, 3, 2)] = 1.0
    times = np.linspace(0, 50, 101)
    ref = dense.mean_n1(psi0, times)
    b = build_block(3, 2, ModelParams(chi=5.0, kappa=0.2), InitialState(1.0))
    amp = evolve_block(b, times)
    got = 3 - np.abs(amp[:, 1]) ** 2 - np.abs(amp[:, 2]) ** 2
    assert np.abs(got - ref).max() < 1e-8


@pytest.mark.parametrize("alpha_sq", [4.0, 25.0])
def test_initial_value(alpha_sq):
    s = mean_photon_series(ModelParams(kappa=0.0033), InitialState(alpha_sq), truncation_bound(alpha_sq), TimeGrid(0, 1, 3))
    assert s.values[0] == pytest.approx(alpha_sq, abs=1e-6)


def test_series_bounds_and_determinism():
    trunc = truncation_bound(9.0)
    args = (ModelParams(kappa=0.05), InitialState(9.0), trunc, TimeGrid(0, 0.25, 4000))
    a = mean_photon_series(*args)
    b = mean_photon_series(*args, chunk=97)
    assert np.abs(a.values - b.values).max() < 1e-9
    assert a.values.min() >= 0 and a.values.max() <= trunc.n_max


def test_grid_refinement_reproduces_shared_samples():
    args = (ModelParams(kappa=0.0033), InitialState(9.0), truncation_bound(9.0))
    coarse = mean_photon_series(*args, TimeGrid(100.0, 1.0, 500))
    fine = mean_photon_series(*args, TimeGrid(100.0, 0.5, 1000))
    assert np.array_equal(coarse.values, fine.values[::2])


def test_insufficient_truncation_raises():
    with pytest.raises(TruncationError):
        mean_photon_series(ModelParams(), InitialState(25.0), FockTruncation(20, 1e-12), TimeGrid(0, 1, 2))


def test_kappa_zero_collapse():
    # the tail window is far quieter than the first oscillations
    s = mean_photon_series(ModelParams(chi=5.0, kappa=0.0), InitialState(25.0), truncation_bound(25.0), TimeGrid(0, 0.5, 18001))
    t = s.times
    early = s.values[t <= 1500].std()
    late = s.values[(t >= 3000) & (t <= 9000)].std()
    assert late < 0.05 * early
