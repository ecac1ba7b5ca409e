import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_bursts
from tmkernel.diagnostics import default_floor, distortion, rc_quality, sigma_sweep
from tmkernel.kernels import KernelSpec, SymmetricMatrix, empirical_gram, kernel_distance
from tmkernel.manifold import EmbeddingResult
from tmkernel.whitney import euclidean_distance_matrix


def points_distance(n=12, seed=0, dim=2):
    return euclidean_distance_matrix(np.random.default_rng(seed).normal(size=(n, dim)))


# distortion

def test_identity_embedding():
    D = points_distance()
    rep = distortion(D, D, floor=0.0)
    assert rep.contraction == rep.expansion == rep.distortion == 1.0
    assert rep.pairs_skipped == 0 and rep.pairs_used == 66


def test_uniform_scaling():
    D = points_distance()
    scaled = SymmetricMatrix(3.0 * D.values, "distance")
    rep = distortion(D, scaled, floor=0.0)
    assert rep.contraction == pytest.approx(1 / 3) and rep.expansion == pytest.approx(3.0)
    assert rep.distortion == pytest.approx(1.0, rel=1e-14)


def test_squared_input_is_unsquared():
    D = points_distance()
    sq = SymmetricMatrix(D.values ** 2, "distance", squared=True)
    assert distortion(D, sq, floor=0.0).distortion == pytest.approx(1.0, rel=1e-12)


def test_reports_maximizing_pairs():
    ref = np.array([[0, 1, 1], [1, 0, 1], [1, 1, 0]], float)
    emb = np.array([[0, 2, 1], [2, 0, 0.5], [1, 0.5, 0]], float)
    rep = distortion(ref, emb, floor=0.0)
    assert rep.contraction == 2.0 and rep.contraction_pair == (1, 2)
    assert rep.expansion == 2.0 and rep.expansion_pair == (0, 1)
    assert rep.distortion == 4.0


def test_ties_go_to_smallest_pair():
    ref = np.ones((4, 4)) - np.eye(4)
    emb = 2 * ref
    rep = distortion(ref, emb, floor=0.0)
    assert rep.contraction_pair == (0, 1) and rep.expansion_pair == (0, 1)


def test_collapsed_pair_gives_infinite_contraction():
    ref = np.ones((3, 3)) - np.eye(3)
    emb = ref.copy()
    emb[0, 1] = emb[1, 0] = 0.0
    assert distortion(ref, emb, floor=0.0).contraction == np.inf


def test_floor_default_and_errors():
    D = points_distance()
    iu = np.triu_indices(12, 1)
    assert default_floor(D) == pytest.approx(0.05 * np.median(D.values[iu]))
    with pytest.raises(ValueError, match="no pair"):
        distortion(D, D, floor=1e6)
    with pytest.raises(ValueError, match="floor"):
        distortion(D, D, floor=-1.0)
    with pytest.raises(ValueError, match="shapes"):
        distortion(D, points_distance(5), floor=0.0)
    with pytest.raises(ValueError, match="distance"):
        distortion(SymmetricMatrix(np.eye(3), "gram"), np.eye(3))


@given(st.integers(0, 1000), st.floats(0.0, 2.0), st.floats(0.0, 2.0))
def test_raising_the_floor_never_increases_ratios(seed, f1, f2):
    ref, emb = points_distance(10, seed), points_distance(10, seed + 1)
    lo, hi = sorted((f1, f2))
    try:
        b = distortion(ref, emb, hi)
    except ValueError:
        return
    a = distortion(ref, emb, lo)
    assert b.contraction <= a.contraction and b.expansion <= a.expansion
    assert b.pairs_skipped >= a.pairs_skipped


@given(st.integers(0, 1000), st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
def test_distortion_invariant_under_rescaling(seed, a, b):
    ref, emb = points_distance(10, seed), points_distance(10, seed + 1, dim=3)
    base = distortion(ref, emb, 0.0).distortion
    scaled = distortion(a * ref.values, b * emb.values, 0.0).distortion
    assert scaled == pytest.approx(base, rel=1e-12)
    assert base >= 1.0


# reaction-coordinate quality

def test_constant_eigenfunction_has_zero_residual():
    xi = np.random.default_rng(0).uniform(size=50)
    assert np.array_equal(rc_quality(xi, [np.full(50, 3.0)], 5), [0.0])


def test_perfect_coordinate_residual_shrinks_with_bins():
    xi = np.random.default_rng(1).uniform(-1, 1, 2000)
    res = [rc_quality(xi, [xi], b)[0] for b in (4, 16, 64, 256)]
    assert all(b < a for a, b in zip(res, res[1:]))
    assert res[-1] <= 1 / 256


def test_residual_accepts_embedding_results_and_2d_coordinates():
    rng = np.random.default_rng(2)
    xy = rng.uniform(size=(500, 2))
    psi = np.sin(3 * xy[:, 0]) * xy[:, 1]
    res = EmbeddingResult(xy, np.ones(2), "test")
    assert rc_quality(res, [psi], 10)[0] == rc_quality(xy, [psi], 10)[0]
    assert rc_quality(xy, [psi], 20)[0] < rc_quality(xy[:, :1], [psi], 20)[0]


def test_uninformative_coordinate_has_large_residual():
    rng = np.random.default_rng(3)
    x, y = rng.uniform(-1, 1, (2, 1000))
    assert rc_quality(y, [x], 20)[0] >= 0.5
    assert rc_quality(x, [x], 20)[0] <= 0.1


def test_rc_quality_errors():
    with pytest.raises(ValueError, match="constant"):
        rc_quality(np.zeros(10), [np.arange(10.0)], 4)
    with pytest.raises(ValueError, match="bins"):
        rc_quality(np.arange(10.0), [np.arange(10.0)], 1)
    with pytest.raises(ValueError, match="values"):
        rc_quality(np.arange(10.0), [np.arange(9.0)], 4)


# sigma sweep

def test_single_sigma_reproduces_distortion_call():
    ens = random_bursts(10, 8, 2, seed=4)
    ref_a, ref_b = points_distance(10, 5), points_distance(10, 6)
    rows = sigma_sweep(ens, [0.5], ref_a, ref_b, floor=0.0)
    D = kernel_distance(empirical_gram(ens, ens, KernelSpec.gaussian(0.5)))
    assert rows == [{"sigma": 0.5,
                     "distortion_inv_rho": distortion(ref_a, D, 0.0).distortion,
                     "distortion_l2": distortion(ref_b, D, 0.0).distortion}]
    with pytest.raises(ValueError):
        sigma_sweep(ens, [0.5], ref_a, ref_b, kernel="linear")


@given(st.permutations(list(range(8))))
def test_sweep_invariant_under_relabeling(perm):
    ens = random_bursts(8, 6, 2, seed=7)
    ref_a, ref_b = points_distance(8, 8), points_distance(8, 9)
    a = sigma_sweep(ens, [0.3, 1.0], ref_a, ref_b, floor=0.0)
    b = sigma_sweep(ens.subset(perm), [0.3, 1.0], ref_a.permuted(perm), ref_b.permuted(perm), floor=0.0)
    for ra, rb in zip(a, b):
        assert ra["distortion_inv_rho"] == pytest.approx(rb["distortion_inv_rho"], rel=1e-10)
        assert ra["distortion_l2"] == pytest.approx(rb["distortion_l2"], rel=1e-10)
