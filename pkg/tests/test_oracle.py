import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from reference_values import DW1D_BETA3_RATES, MB_MEP, MB_MINIMA
from tmkernel import oracle
from tmkernel.dynamics import BurstEnsemble, double_well, flat, horseshoe, muller_brown

DW = double_well(1)


def dw_committor(m, beta=3.0):
    grid = oracle.Grid(DW.box, (m,))
    return oracle.committor(DW, beta, grid, lambda x: x[:, 0] <= -1.0, lambda x: x[:, 0] >= 1.0)


# grid

def test_grid_locate_and_centers():
    g = oracle.Grid([[0, 1], [0, 2]], (2, 4))
    assert g.size == 8 and g.cell_volume == 0.25
    assert np.array_equal(g.locate([[0.1, 0.1], [0.9, 1.9], [1.0, 2.0], [1.1, 0.0], [-0.1, 0.5]]),
                          [0, 7, 7, -1, -1])
    assert np.array_equal(g.locate(g.centers()), np.arange(8))
    with pytest.raises(ValueError):
        oracle.Grid([[1, 0]], (4,))


def test_field_interpolation_is_exact_for_linear_functions():
    g = oracle.Grid([[0, 1], [0, 1]], (8, 8))
    c = g.centers()
    f = oracle.GridField(g, 2 * c[:, 0] - c[:, 1], "eigenfunction")
    pts = np.random.default_rng(0).uniform(1 / 16, 15 / 16, (50, 2))
    assert np.allclose(f.at(pts), 2 * pts[:, 0] - pts[:, 1])


# invariant density

def test_flat_density_is_uniform():
    rho = oracle.invariant_density(flat([[-1, 3], [0, 2]]), 2.0, ([[-1, 3], [0, 2]], (10, 7)))
    assert np.allclose(rho.values, 1 / 8)


@pytest.mark.parametrize("pot", [DW, double_well(2), horseshoe(), muller_brown()], ids=lambda p: p.name)
def test_density_normalized_and_nonnegative(pot):
    rho = oracle.invariant_density(pot, 0.05 if pot.name == "muller-brown" else 3.0,
                                   oracle.Grid(pot.box, (64,) * pot.dim))
    assert np.all(rho.values >= 0)
    assert abs(rho.integral() - 1.0) <= 1e-8


def test_symmetric_potential_symmetric_density():
    rho = oracle.invariant_density(horseshoe(), 2.0, oracle.Grid(horseshoe().box, (40, 40)))
    assert np.allclose(rho.values, rho.values[::-1, :], rtol=1e-12)


# generator

def test_generator_rows_sum_to_zero_and_rates_positive():
    L = oracle.generator_matrix(horseshoe(), 2.0, oracle.Grid(horseshoe().box, (20, 20)))
    scale = np.abs(L.diagonal())
    assert np.all(np.abs(np.asarray(L.sum(axis=1)).ravel()) <= 1e-12 * scale)
    off = L - np.diag(L.diagonal())
    assert off.min() >= 0


def test_symmetrized_generator_is_symmetric():
    grid = oracle.Grid(muller_brown().box, (40, 40))
    S, rho, keep = oracle.symmetrized_generator(muller_brown(), 0.05, grid)
    assert keep.all()
    assert abs(S - S.T).max() <= 1e-10 * abs(S).max()
    # a similarity transform of a reversible L: geometric mean off the diagonal
    L = oracle.generator_matrix(muller_brown(), 0.05, grid).toarray()
    S = S.toarray()
    assert np.allclose(np.diag(S), np.diag(L), rtol=1e-12)
    off = ~np.eye(grid.size, dtype=bool)
    assert np.allclose(S[off], np.sqrt(L * L.T)[off], rtol=1e-10, atol=0)


def test_energy_cutoff_leaves_dominant_rates_unchanged():
    grid = oracle.Grid(horseshoe().box, (64, 64))
    cut = [r for r, _ in oracle.generator_eigs(horseshoe(), 4.0, grid, 3)]
    full = [r for r, _ in oracle.generator_eigs(horseshoe(), 4.0, grid, 3, cutoff=np.inf)]
    assert np.allclose(cut[1:], full[1:], rtol=1e-9)
    # on a small grid the dense solver sees every cell; the cutoff keeps rate 0 clean
    small = oracle.Grid(horseshoe().box, (32, 32))
    assert abs(oracle.generator_eigs(horseshoe(), 2.0, small, 1)[0][0]) < 1e-8


def test_first_eigenfunction_is_invariant_density():
    grid = oracle.Grid(DW.box, (200,))
    (rate, psi0), *_ = oracle.generator_eigs(DW, 3.0, grid, 2)
    assert abs(rate) <= 1e-10
    rho = oracle.invariant_density(DW, 3.0, grid)
    assert np.allclose(psi0.values, rho.values, atol=1e-10)


def test_double_well_spectrum_against_central_differences():
    rates = [r for r, _ in oracle.generator_eigs(DW, 3.0, oracle.Grid(DW.box, (2000,)), 4)]
    assert rates[1] == pytest.approx(DW1D_BETA3_RATES[1], rel=1e-3)
    assert rates[2] == pytest.approx(DW1D_BETA3_RATES[2], rel=1e-3)
    assert rates[3] == pytest.approx(DW1D_BETA3_RATES[3], rel=1e-3)
    # one slow rate, then a gap
    assert rates[2] / rates[1] > 10


def test_flat_spectrum_is_neumann_laplacian():
    beta, L = 2.0, 3.0
    pairs = oracle.generator_eigs(flat([[0, L]]), beta, oracle.Grid([[0, L]], (512,)), 6)
    x = oracle.Grid([[0, L]], (512,)).centers()[:, 0]
    for k, (rate, psi) in enumerate(pairs):
        assert rate == pytest.approx(-(k * np.pi / L) ** 2 / beta, rel=1e-2, abs=1e-12)
        if k:
            assert abs(np.corrcoef(psi.values, np.cos(k * np.pi * x / L))[0, 1]) > 0.9999


def test_eigenfunction_normalizations():
    grid = oracle.Grid(horseshoe().box, (32, 32))
    dens = oracle.generator_eigs(horseshoe(), 2.0, grid, 3)
    obs = oracle.generator_eigs(horseshoe(), 2.0, grid, 3, form="observable")
    rho = oracle.invariant_density(horseshoe(), 2.0, grid).values.ravel()
    P = np.stack([f.values.ravel() for _, f in dens])
    assert np.allclose((P / rho) @ P.T * grid.cell_volume, np.eye(3), atol=1e-9)
    Q = np.stack([f.values.ravel() for _, f in obs])
    assert np.allclose((Q * rho) @ Q.T * grid.cell_volume, np.eye(3), atol=1e-9)
    assert np.allclose(Q[0], 1.0)


def test_dense_and_sparse_solvers_agree():
    pot = double_well(2)
    # 45^2 = 2025 cells go to the dense solver, 46^2 = 2116 to shift-invert
    dense = oracle.generator_eigs(pot, 1.0, oracle.Grid(pot.box, (45, 45)), 3)
    sparse = oracle.generator_eigs(pot, 1.0, oracle.Grid(pot.box, (46, 46)), 3)
    assert sparse[1][0] == pytest.approx(dense[1][0], rel=0.01)
    assert sparse[2][0] == pytest.approx(dense[2][0], rel=0.01)


# committor

def test_committor_symmetric_double_well():
    q = dw_committor(400)
    assert q.at([[0.0]])[0] == pytest.approx(0.5, abs=1e-6)
    assert np.all((q.values >= 0) & (q.values <= 1))


def test_committor_whole_grid_in_a():
    grid = oracle.Grid(DW.box, (10,))
    with pytest.raises(ValueError, match="nonempty"):
        oracle.committor(DW, 1.0, grid, lambda x: np.ones(len(x), bool), lambda x: np.zeros(len(x), bool))
    with pytest.raises(ValueError, match="overlap"):
        oracle.committor(DW, 1.0, grid, lambda x: x[:, 0] < 0.5, lambda x: x[:, 0] > -0.5)


def test_committor_all_a_except_b_is_trivial():
    grid = oracle.Grid(DW.box, (10,))
    q = oracle.committor(DW, 1.0, grid, lambda x: x[:, 0] < 1.5, lambda x: x[:, 0] >= 1.5)
    assert np.array_equal(q.values, np.r_[np.ones(9), 0.0])


def test_committor_discrete_maximum_principle():
    hs = horseshoe()
    grid = oracle.Grid(hs.box, (48, 48))
    A, B = oracle.ball((-1, 0), 0.2), oracle.ball((1, 0), 0.2)
    q = oracle.committor(hs, 3.0, grid, A, B).values
    free = ~(A(grid.centers()) | B(grid.centers())).reshape(48, 48)
    pad = np.pad(q, 1, mode="edge")
    nb = np.stack([pad[:-2, 1:-1], pad[2:, 1:-1], pad[1:-1, :-2], pad[1:-1, 2:]])
    tol = 1e-12
    assert np.all((q[free] >= nb.min(axis=0)[free] - tol) & (q[free] <= nb.max(axis=0)[free] + tol))


def test_committor_refinement_second_order():
    from scipy.integrate import quad

    # the discrete sets end at the last cell centre inside them, so compare with
    # the exact 1D committor for exactly those end points
    beta = 3.0
    errors = []
    for m in (100, 200, 400):
        q = dw_committor(m, beta)
        x = q.grid.axes()[0]
        a, b = x[x <= -1.0].max(), x[x >= 1.0].min()
        w = lambda t: np.exp(beta * (t * t - 1) ** 2)
        total = quad(w, a, b, epsabs=0, epsrel=1e-13)[0]
        free = (x > a) & (x < b)
        exact = np.array([quad(w, t, b, epsabs=0, epsrel=1e-13)[0] / total for t in x[free]])
        errors.append(np.max(np.abs(q.values[free] - exact)))
    assert errors[2] < errors[1] < errors[0]
    assert 3.0 < errors[0] / errors[1] < 5.0
    assert 3.0 < errors[1] / errors[2] < 5.0


def test_muller_brown_committor_monotone_along_path():
    mb = muller_brown()
    grid = oracle.Grid(mb.box, (128, 128))
    q = oracle.committor(mb, 0.05, grid, oracle.ball(MB_MINIMA[0], 0.1), oracle.ball(MB_MINIMA[1], 0.1))
    along = q.at(np.array(MB_MEP))
    assert along[0] == pytest.approx(1.0, abs=0.05) and along[-1] == pytest.approx(0.0, abs=0.05)
    assert np.all(np.diff(along) <= 1e-3)


# empirical densities and distances

def _ens(samples):
    samples = np.asarray(samples, dtype=float)
    return BurstEnsemble(np.zeros((samples.shape[0], samples.shape[2])), samples, 1.0)


def test_single_cell_histogram():
    grid = oracle.Grid([[0, 1], [0, 1]], (4, 4))
    ens = _ens(np.full((2, 5, 2), 0.1))
    p = oracle.empirical_density(ens, 0, grid)
    assert p.values[0, 0] == 1 / grid.cell_volume and p.values.sum() == p.values[0, 0]
    assert p.integral() == pytest.approx(1.0)


def test_outside_samples_warn():
    grid = oracle.Grid([[0, 1]], (4,))
    ens = _ens([[[0.5], [2.0], [3.0]], [[0.5], [0.5], [0.5]]])
    with pytest.warns(RuntimeWarning, match="outside"):
        p = oracle.empirical_density(ens, 0, grid)
    assert p.integral() == pytest.approx(1 / 3)


def test_disjoint_histograms_distance():
    grid = oracle.Grid([[0, 1]], (4,))
    ens = _ens([[[0.1]], [[0.9]]])
    D = oracle.density_distance_matrix(ens, grid).values
    assert D[0, 1] == pytest.approx(np.sqrt(2 / grid.cell_volume))
    assert D[0, 0] == 0.0


def test_weighted_distances_dominate_when_density_below_one():
    pot = horseshoe()
    grid = oracle.Grid(pot.box, (16, 16))
    rho = oracle.invariant_density(pot, 1.0, grid)
    assert rho.values.max() <= 1
    ens = _ens(np.random.default_rng(0).uniform(-2, 2, (6, 50, 2)))
    weighted = oracle.density_distance_matrix(ens, grid, rho).values
    plain = oracle.density_distance_matrix(ens, grid).values
    assert np.all(weighted >= plain)


def test_weighted_distances_reject_vanishing_density():
    grid = oracle.Grid([[0, 1]], (4,))
    rho = oracle.GridField(grid, [0.0, 2.0, 1.0, 1.0], "density")
    with pytest.raises(ValueError, match="vanishes"):
        oracle.density_distance_matrix(_ens([[[0.1]], [[0.9]]]), grid, rho)


@given(st.integers(0, 1000))
def test_histograms_approach_invariant_density(seed):
    from tmkernel.dynamics import SdeConfig, sample_bursts

    grid = oracle.Grid(DW.box, (20,))
    rho = oracle.invariant_density(DW, 1.0, grid).values
    errs = []
    for M in (100, 3000):
        ens = sample_bursts(DW, SdeConfig(1.0, 1e-2, 8.0, seed=seed), np.array([[-1.0], [1.0]]), M)
        errs.append(np.abs(oracle.empirical_density(ens, 0, grid).values - rho).sum() * grid.cell_volume)
    assert errs[1] < errs[0]
    assert errs[1] < 0.15


# grid transition densities

def test_transition_densities_conserve_mass_and_relax():
    grid = oracle.Grid(DW.box, (100,))
    P = oracle.transition_densities(DW, 1.0, grid, np.array([[-1.0], [0.3]]), 50.0)
    assert np.allclose(P.sum(axis=1) * grid.cell_volume, 1.0, atol=1e-10)
    rho = oracle.invariant_density(DW, 1.0, grid).values
    assert np.allclose(P, rho, atol=1e-6)


def test_transition_densities_zero_lag():
    grid = oracle.Grid(DW.box, (10,))
    P = oracle.transition_densities(DW, 1.0, grid, np.array([[0.1]]), 0.0)
    assert P[0, 5] == 1 / grid.cell_volume and P.sum() == P[0, 5]


def test_transition_densities_match_simulation():
    from tmkernel.dynamics import SdeConfig, sample_bursts

    grid = oracle.Grid(DW.box, (40,))
    # start at cell centres so the grid start cell is not a half-cell shift
    x0 = np.array([[-0.25], [0.55]])
    P = oracle.transition_densities(DW, 2.0, grid, x0, 0.5)
    ens = sample_bursts(DW, SdeConfig(2.0, 1e-4, 0.5, seed=1), x0, 20000)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        H = oracle.density_matrix(ens, grid)
    assert np.abs(P - H).sum(axis=1).max() * grid.cell_volume < 0.05
