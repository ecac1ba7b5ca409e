"""End-to-end recipes for the two planar benchmarks.

Every stage reads and writes files through :mod:`tmkernel.io`, so running
the stages one by one gives the same bytes as a full reproduction run.
"""

import json
from dataclasses import asdict, dataclass
from pathlib import Path

from scipy.stats import spearmanr

from tmkernel import io, oracle
from tmkernel.diagnostics import distortion
from tmkernel.dynamics import (
    SdeConfig,
    get_potential,
    sample_bursts,
    test_points_grid,
    test_points_uniform,
)
from tmkernel.kernels.gram import KernelSpec, empirical_gram, kernel_distance
from tmkernel.manifold import classical_mds, diffusion_maps
from tmkernel.whitney import SPREAD_FEATURES, FeatureMatrix, near_parallel_features, euclidean_distance_matrix, whitney_embed

# Müller–Brown minima (gradient-descent refined), used as committor set centres
MB_MIN_A = (-0.5582236346, 1.4417258418)
MB_MIN_B = (0.6234994049, 0.0280377585)


def _prov(**kw):
    return {k: v for k, v in kw.items() if v is not None}


def stage_sample(out, potential, cfg, points, M):
    ens = sample_bursts(get_potential(potential), cfg, points, M)
    io.write_bursts(out, ens)
    return ens


def stage_gram(bursts, kernel, out_gram, out_distance=None):
    ens = io.read_bursts(bursts) if isinstance(bursts, (str, Path)) else bursts
    K = empirical_gram(ens, ens, kernel)
    io.write_matrix_bin(out_gram, K)
    D = kernel_distance(K)
    if out_distance is not None:
        io.write_matrix_bin(out_distance, D)
    return K, D


def as_distance(M):
    """Kernel distance for a Gram matrix, the matrix itself otherwise."""
    return kernel_distance(M) if M.kind == "gram" else M


def stage_dmap(matrix, bandwidth, n_components, stem, seed=None):
    D = as_distance(io.read_matrix(matrix) if isinstance(matrix, (str, Path)) else matrix)
    res = diffusion_maps(D.plain(), bandwidth, n_components)
    io.write_embedding(stem, res, _prov(seed=seed, bandwidth=bandwidth))
    return res


def stage_mds(matrix, k, stem, seed=None):
    D = as_distance(io.read_matrix(matrix) if isinstance(matrix, (str, Path)) else matrix)
    res = classical_mds(D.plain(), k)
    io.write_embedding(stem, res, _prov(seed=seed))
    return res


def stage_whitney(bursts, F, out, seed=None):
    ens = io.read_bursts(bursts) if isinstance(bursts, (str, Path)) else bursts
    z = whitney_embed(ens, F)
    io.write_coordinates(out, z, _prov(seed=seed, features=F.provenance), prefix="feature")
    return z


# Müller–Brown

@dataclass(frozen=True)
class MullerBrownRecipe:
    """Kernel reaction coordinate on a 32 x 32 grid of test points."""

    seed: int = 1
    beta: float = 0.05
    dt: float = 1e-5
    tau: float = 0.03
    shape: tuple = (32, 32)
    M: int = 100
    sigma: float = 0.1
    bandwidth: float = 0.1
    n_components: int = 3
    committor_shape: tuple = (128, 128)
    set_radius: float = 0.1


def repro_muller_brown(out_dir, recipe=MullerBrownRecipe()):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    pot = get_potential("muller-brown")
    cfg = SdeConfig(recipe.beta, recipe.dt, recipe.tau, seed=recipe.seed)
    points = test_points_grid(pot.box, recipe.shape)
    ens = stage_sample(out / "bursts.tmb", "muller-brown", cfg, points, recipe.M)
    _, D = stage_gram(ens, KernelSpec.gaussian(recipe.sigma), out / "gram.tmm", out / "distance.tmm")
    rc = stage_dmap(D, recipe.bandwidth, recipe.n_components, out / "dmap", seed=recipe.seed)

    grid = oracle.Grid(pot.box, recipe.committor_shape)
    q = oracle.committor(pot, recipe.beta, grid, oracle.ball(MB_MIN_A, recipe.set_radius),
                         oracle.ball(MB_MIN_B, recipe.set_radius))
    io.write_grid_field(out / "committor.grid.csv", q, _prov(seed=recipe.seed, beta=recipe.beta))
    q_at = q.at(points)
    io.write_coordinates(out / "committor_at_points.csv", q_at, _prov(seed=recipe.seed), prefix="committor")
    rho_s = float(spearmanr(rc.coords[:, 0], q_at)[0])
    summary = {"recipe": asdict(recipe), "N": int(ens.N), "spearman_rc1_committor": rho_s,
               "dmap_eigenvalues": [float(v) for v in rc.eigenvalues]}
    _write_summary(out / "summary.json", summary)
    return summary


# horseshoe

@dataclass(frozen=True)
class HorseshoeRecipe:
    """Distortion study: kernel embedding versus two linear feature maps."""

    seed: int = 1
    beta: float = 4.0
    dt: float = 1e-3
    tau: float = 2.0
    N: int = 200
    M: int = 100
    sigma: float = 1e-3
    sigmas: tuple = (1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2, 1e-1, 3e-1, 1.0)
    cells: int = 64
    eps_bad: float = 0.05
    mds_dim: int = 2
    floor: float = None
    propagation_steps: int = 400


def reference_matrices(recipe, points, ens=None):
    """L2_{1/rho} and L2 distance matrices between transition densities.

    With ``ens`` the densities are burst histograms; without, they are
    propagated on the grid from each test point.
    """
    pot = get_potential("horseshoe")
    grid = oracle.Grid(pot.box, (recipe.cells, recipe.cells))
    rho = oracle.invariant_density(pot, recipe.beta, grid)
    if ens is None:
        P = oracle.transition_densities(pot, recipe.beta, grid, points, recipe.tau, recipe.propagation_steps)
    else:
        P = oracle.density_matrix(ens, grid)
    return rho, oracle.weighted_distances(P, grid, rho), oracle.weighted_distances(P, grid, "L2")


def repro_horseshoe(out_dir, recipe=HorseshoeRecipe()):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    pot = get_potential("horseshoe")
    cfg = SdeConfig(recipe.beta, recipe.dt, recipe.tau, seed=recipe.seed)
    points = test_points_uniform(pot.box, recipe.N, recipe.seed)
    ens = stage_sample(out / "bursts.tmb", "horseshoe", cfg, points, recipe.M)
    prov = _prov(seed=recipe.seed)

    rho, ref_inv, ref_l2 = reference_matrices(recipe, points)
    _, hist_inv, hist_l2 = reference_matrices(recipe, points, ens)
    io.write_grid_field(out / "rho.grid.csv", rho, dict(prov, beta=recipe.beta))
    refs = {"inv_rho": ref_inv, "l2": ref_l2, "hist_inv_rho": hist_inv, "hist_l2": hist_l2}
    for name, D in refs.items():
        io.write_matrix_bin(out / f"reference_{name}.tmm", D)

    rows = []
    for s in recipe.sigmas:
        _, D = stage_gram(ens, KernelSpec.gaussian(s), out / f"gram_sigma{s!r}.tmm",
                          out / f"distance_sigma{s!r}.tmm")
        row = {"sigma": float(s)}
        for name, R in refs.items():
            row[f"distortion_{name}"] = distortion(R, D, recipe.floor).distortion
        rows.append(row)
    io.write_table(out / "sigma_sweep.csv", rows, list(rows[0]), "sigma-sweep", prov)

    F_good = FeatureMatrix.explicit(SPREAD_FEATURES)
    F_bad = FeatureMatrix(near_parallel_features(recipe.eps_bad), 1, f"explicit(eps={recipe.eps_bad!r})")
    io.write_feature_matrix(out / "features_good.csv", F_good)
    io.write_feature_matrix(out / "features_bad.csv", F_bad)
    embedded = {"kernel": as_distance(io.read_matrix(out / f"distance_sigma{recipe.sigma!r}.tmm"))}
    for name, F in (("whitney_good", F_good), ("whitney_bad", F_bad)):
        z = stage_whitney(ens, F, out / f"{name}.coords.csv", recipe.seed)
        embedded[name] = euclidean_distance_matrix(z)

    report_rows = []
    for name, D in embedded.items():
        for ref_name, R in refs.items():
            rep = distortion(R, D, recipe.floor)
            report_rows.append({"embedding": name, "reference": ref_name,
                                "contraction": rep.contraction, "expansion": rep.expansion,
                                "distortion": rep.distortion, "floor": rep.floor,
                                "pairs_skipped": rep.pairs_skipped})
    io.write_table(out / "distortion.csv", report_rows, list(report_rows[0]), "distortion", prov)

    stage_mds(embedded["kernel"], recipe.mds_dim, out / "mds_kernel", recipe.seed)
    stage_mds(ref_inv, recipe.mds_dim, out / "mds_reference_inv_rho", recipe.seed)
    stage_mds(ref_l2, recipe.mds_dim, out / "mds_reference_l2", recipe.seed)

    pick = {(r["embedding"], r["reference"]): r["distortion"] for r in report_rows}
    summary = {
        "recipe": asdict(recipe),
        "distortion_kernel": pick[("kernel", "inv_rho")],
        "distortion_whitney_good": pick[("whitney_good", "inv_rho")],
        "distortion_whitney_bad": pick[("whitney_bad", "inv_rho")],
        "sweep": rows,
    }
    _write_summary(out / "summary.json", summary)
    return summary


def _write_summary(path, summary):
    with io.atomic_write(path) as fh:
        fh.write(json.dumps(summary, sort_keys=True, indent=1) + "\n")


RECIPES = {"muller-brown": repro_muller_brown, "horseshoe": repro_horseshoe}
