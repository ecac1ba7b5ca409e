"""Embedding distortion and reaction-coordinate quality."""

from dataclasses import dataclass

import numpy as np

from tmkernel.kernels.gram import KernelSpec, SymmetricMatrix, empirical_gram, kernel_distance


@dataclass(frozen=True)
class DistortionReport:
    """Worst-case ratios between a reference metric and an embedded one.

    ``contraction`` is max D_ref / D_emb, ``expansion`` is max D_emb / D_ref,
    both over pairs with D_ref >= ``floor``; ``distortion`` is their product
    and is invariant under rescaling either matrix.
    """

    contraction: float
    expansion: float
    contraction_pair: tuple
    expansion_pair: tuple
    floor: float
    pairs_used: int
    pairs_skipped: int

    @property
    def distortion(self):
        return self.contraction * self.expansion


def _plain(D):
    if isinstance(D, SymmetricMatrix):
        if D.kind != "distance":
            raise ValueError("expected a distance matrix")
        return D.plain().values
    return np.asarray(D, dtype=float)


def default_floor(D_reference, fraction=0.05):
    """``fraction`` of the median off-diagonal reference distance."""
    D = _plain(D_reference)
    iu = np.triu_indices(D.shape[0], 1)
    return float(fraction * np.median(D[iu]))


def distortion(D_reference, D_embedded, floor=None):
    """Contraction, expansion and distortion of an embedding.

    Ties are resolved towards the smallest (i, j) in row-major order.
    """
    ref = _plain(D_reference)
    emb = _plain(D_embedded)
    if ref.shape != emb.shape:
        raise ValueError(f"matrix shapes differ: {ref.shape} vs {emb.shape}")
    if floor is None:
        floor = default_floor(ref)
    if floor < 0:
        raise ValueError("floor must be >= 0")
    iu, ju = np.triu_indices(ref.shape[0], 1)
    r, e = ref[iu, ju], emb[iu, ju]
    keep = r >= floor
    if not keep.any():
        raise ValueError(f"no pair has reference distance >= floor {floor:g}")
    iu, ju, r, e = iu[keep], ju[keep], r[keep], e[keep]
    with np.errstate(divide="ignore", invalid="ignore"):
        con = np.where(e > 0, r / e, np.inf)
        exp_ = np.where(r > 0, e / r, np.where(e > 0, np.inf, 1.0))
    con = np.where((r == 0) & (e == 0), 1.0, con)
    a, b = int(np.argmax(con)), int(np.argmax(exp_))
    return DistortionReport(
        contraction=float(con[a]),
        expansion=float(exp_[b]),
        contraction_pair=(int(iu[a]), int(ju[a])),
        expansion_pair=(int(iu[b]), int(ju[b])),
        floor=float(floor),
        pairs_used=int(keep.sum()),
        pairs_skipped=int((~keep).sum()),
    )


def rc_quality(coordinate, eigenfunctions, bins):
    """Range-normalized sup-residual of each eigenfunction against its bin mean along a coordinate.

    Parameters
    ----------
    coordinate : EmbeddingResult or array, shape (N,) or (N, r)
        Reaction coordinate at the test points.
    eigenfunctions : sequence of arrays, shape (N,)
        Eigenfunction values at the same test points.
    bins : int
        Bins per axis of the regular grid over the range of coordinate.

    Returns
    -------
    ndarray
        One residual per entry of ``eigenfunctions``.  Points sharing a bin are mapped
        to the bin mean, so empty bins simply do not occur in the lookup.
    """
    coords = getattr(coordinate, "coords", coordinate)
    coords = np.asarray(coords, dtype=float)
    if coords.ndim == 1:
        coords = coords[:, None]
    if bins < 2:
        raise ValueError("bins must be >= 2")
    N, r = coords.shape
    lo, hi = coords.min(axis=0), coords.max(axis=0)
    width = np.where(hi > lo, hi - lo, 1.0)
    idx = np.clip(np.floor((coords - lo) / width * bins).astype(np.int64), 0, bins - 1)
    flat = np.ravel_multi_index(tuple(idx.T), (bins,) * r)
    labels, inverse = np.unique(flat, return_inverse=True)
    if labels.size < 2:
        raise ValueError("fewer than 2 nonempty bins; the coordinate is constant")
    counts = np.bincount(inverse)
    out = []
    for values in eigenfunctions:
        v = np.asarray(values, dtype=float).ravel()
        if v.size != N:
            raise ValueError(f"eigenfunction has {v.size} values, coordinate has {N} points")
        means = np.bincount(inverse, weights=v) / counts
        span = v.max() - v.min()
        out.append(0.0 if span == 0 else float(np.max(np.abs(v - means[inverse])) / span))
    return np.array(out)


def sigma_sweep(ens, sigmas, D_inv_rho, D_l2, floor=None, kernel="gaussian"):
    """Distortion of the kernel embedding against both reference metrics per bandwidth.

    Returns a list of dicts with keys ``sigma``, ``distortion_inv_rho`` and
    ``distortion_l2``.  ``floor`` applies to both references; None picks the
    default per reference.
    """
    if kernel != "gaussian":
        raise ValueError("only the gaussian family has a bandwidth")
    rows = []
    for s in sigmas:
        D = kernel_distance(empirical_gram(ens, ens, KernelSpec.gaussian(s)))
        rows.append({
            "sigma": float(s),
            "distortion_inv_rho": distortion(D_inv_rho, D, floor).distortion,
            "distortion_l2": distortion(D_l2, D, floor).distortion,
        })
    return rows
