"""Random linear feature embedding of burst ensembles into R^(2r+1)."""

from dataclasses import dataclass

import numpy as np

from tmkernel.kernels.gram import SymmetricMatrix

# well-spread rows: every pair of horseshoe points stays separated
SPREAD_FEATURES = np.array([[-0.08, -0.20], [0.22, -0.35], [-0.49, -0.41]])


def near_parallel_features(eps=0.05):
    """Three almost parallel rows that nearly ignore the first coordinate."""
    return np.array([[0.0, 1.0], [eps, 1.0 + eps], [-eps, 1.0 - eps]])


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    weights: np.ndarray
    r: int
    provenance: str = "explicit"

    def __post_init__(self):
        A = np.array(self.weights, dtype=float)
        if A.ndim != 2 or A.shape[0] != 2 * self.r + 1:
            raise ValueError(f"feature matrix needs 2r+1 = {2 * self.r + 1} rows, got shape {A.shape}")
        A.flags.writeable = False
        object.__setattr__(self, "weights", A)

    @classmethod
    def explicit(cls, A):
        A = np.asarray(A, dtype=float)
        if A.shape[0] % 2 == 0:
            raise ValueError("row count must be odd (2r+1)")
        return cls(A, (A.shape[0] - 1) // 2, "explicit")

    def __mul__(self, c):
        return FeatureMatrix(self.weights * c, self.r, self.provenance)

    __rmul__ = __mul__


def draw_feature_matrix(r, n, distribution="uniform", seed=1):
    if r < 1 or n < 1:
        raise ValueError("need r >= 1 and n >= 1")
    rng = np.random.default_rng(seed)
    if distribution == "uniform":
        A = rng.random((2 * r + 1, n)) - 0.5
    elif distribution == "gaussian":
        A = rng.standard_normal((2 * r + 1, n))
    else:
        raise ValueError(f"unknown distribution {distribution!r}")
    return FeatureMatrix(A, r, f"seeded-random({distribution},seed={seed})")


def whitney_embed(ens, features):
    """Map each burst mean through the feature matrix.

    The map is linear, so averaging the endpoints first is exact.
    """
    W = features.weights
    if W.shape[1] != ens.dim:
        raise ValueError(f"feature matrix has {W.shape[1]} columns, ensemble dimension is {ens.dim}")
    return ens.means() @ W.T


def euclidean_distance_matrix(coords):
    coords = np.asarray(coords, dtype=float)
    if coords.ndim == 1:
        coords = coords[:, None]
    diff = coords[:, None, :] - coords[None, :, :]
    D = np.sqrt(np.sum(diff * diff, axis=-1))
    np.fill_diagonal(D, 0.0)
    return SymmetricMatrix(D, "distance", squared=False)
