"""Distance-based manifold learners: diffusion maps and classical MDS."""

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from tmkernel.kernels.gram import SymmetricMatrix


class EigenConvergenceError(ArithmeticError):
    def __init__(self, residual, tol):
        self.residual = residual
        super().__init__(f"eigenpair residual {residual:.3e} exceeds tolerance {tol:.3e}")


class DisconnectedGraphError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class EmbeddingResult:
    """Reaction coordinate values at the test points plus the learner's spectrum.

    For diffusion maps ``eigenvalues[0]`` is the trivial eigenvalue 1 whose
    constant eigenvector is not part of ``coords``.
    """

    coords: np.ndarray
    eigenvalues: np.ndarray
    method: str

    @property
    def N(self):
        return self.coords.shape[0]


def _orient(vectors):
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def symmetric_eigs(matrix, count, rtol=1e-8):
    """The ``count`` algebraically largest eigenpairs, eigenvalues nonincreasing.

    Each eigenvector is oriented so that its largest-magnitude entry is positive.
    """
    A = np.asarray(matrix, dtype=float)
    N = A.shape[0]
    if not 1 <= count <= N:
        raise ValueError(f"count must be in [1, {N}]")
    w, V = scipy.linalg.eigh(A, subset_by_index=[N - count, N - 1])
    w = w[::-1]
    V = _orient(V[:, ::-1])
    norm = np.max(np.sum(np.abs(A), axis=0))  # ||A||_1 >= ||A||_2
    residual = float(np.max(np.linalg.norm(A @ V - V * w, axis=0))) if N else 0.0
    if residual > rtol * max(norm, np.finfo(float).tiny):
        raise EigenConvergenceError(residual, rtol * norm)
    return w, V


def _plain(D):
    if isinstance(D, SymmetricMatrix):
        if D.kind != "distance":
            raise ValueError("expected a distance matrix")
        return D.plain().values
    return np.asarray(D, dtype=float)


def diffusion_maps(D, bandwidth, n_components):
    """Diffusion maps with alpha = 1 density normalization.

    W = exp(-D^2 / bandwidth), W <- W / (q q^T) with q the row sums, then row
    normalization to a Markov matrix P.  Column j of the result is
    lambda_j * psi_j for the nontrivial right eigenvectors psi_j, scaled to
    unit norm under the stationary distribution (psi_0 == 1).
    """
    Dp = _plain(D)
    N = Dp.shape[0]
    if not bandwidth > 0:
        raise ValueError("bandwidth must be > 0")
    if not 1 <= n_components < N:
        raise ValueError("need 1 <= n_components < N")
    W = np.exp(-(Dp * Dp) / bandwidth)
    off = W.sum(axis=1) - np.diag(W)
    if np.any(off <= np.finfo(float).eps):
        i = int(np.argmax(off <= np.finfo(float).eps))
        raise DisconnectedGraphError(
            f"test point {i} has no neighbours at bandwidth {bandwidth:g}; increase the bandwidth")
    q = W.sum(axis=1)
    W = W / np.outer(q, q)
    d = W.sum(axis=1)
    sd = np.sqrt(d)
    S = W / np.outer(sd, sd)
    S = 0.5 * (S + S.T)
    lam, U = symmetric_eigs(S, n_components + 1)
    psi = _orient(U * (np.sqrt(d.sum()) / sd)[:, None])
    coords = psi[:, 1:] * lam[1:]
    return EmbeddingResult(coords, lam, f"dmap(bandwidth={bandwidth!r})")


def classical_mds(D, k):
    """Torgerson scaling: top-k eigenpairs of B = -1/2 J D^2 J."""
    Dp = _plain(D)
    N = Dp.shape[0]
    if not 1 <= k <= N - 1:
        raise ValueError("need 1 <= k <= N - 1")
    J = np.eye(N) - np.full((N, N), 1.0 / N)
    B = -0.5 * J @ (Dp * Dp) @ J
    B = 0.5 * (B + B.T)
    w, V = symmetric_eigs(B, N)
    top = max(float(w[0]), 0.0)
    tol = 1e-9 * top
    if w[-1] < -tol and top > 0:
        warnings.warn(f"B has negative eigenvalues down to {w[-1]:.3g}; truncated to zero",
                      RuntimeWarning, stacklevel=2)
    positive = int(np.sum(w > tol)) if top > 0 else 0
    if positive < k:
        warnings.warn(f"only {positive} positive eigenvalues; returning {positive} of {k} coordinates",
                      RuntimeWarning, stacklevel=2)
        k = positive
    coords = V[:, :k] * np.sqrt(w[:k])
    return EmbeddingResult(coords, w, "mds")


def spectral_gap_dimension(eigenvalues, threshold=3.0, skip_trivial=True):
    """Smallest d with (mu_d - mu_{d+1}) / (mu_{d+1} - mu_{d+2}) >= threshold.

    ``mu`` are the eigenvalues with the trivial leading one removed when
    ``skip_trivial``.  Returns None when no such gap exists.
    """
    mu = np.asarray(eigenvalues, dtype=float)
    if skip_trivial:
        mu = mu[1:]
    for d in range(1, mu.size - 1):
        gap = mu[d - 1] - mu[d]
        nxt = mu[d] - mu[d + 1]
        if gap >= threshold * max(nxt, np.finfo(float).tiny):
            return d
    return None
