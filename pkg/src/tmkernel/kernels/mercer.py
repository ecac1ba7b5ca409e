"""Explicit feature maps and Mercer tooling.

Feature vectors are indexed by multi-indices in graded lexicographic order:
total degree ascending, then lexicographically descending (so for n=2,
degree 1 comes out as (1, 0), (0, 1)).
"""

from functools import lru_cache
from math import factorial

import numpy as np

from tmkernel.kernels.gram import KernelSpec, kernel_eval


@lru_cache(maxsize=None)
def multi_indices(n, max_degree):
    """All multi-indices of length n with total degree <= max_degree, graded lex."""
    out = []

    def rec(prefix, remaining, slots):
        if slots == 1:
            out_deg.append(prefix + (remaining,))
            return
        for first in range(remaining, -1, -1):
            rec(prefix + (first,), remaining - first, slots - 1)

    for deg in range(max_degree + 1):
        out_deg = []
        rec((), deg, n)
        out.extend(out_deg)
    return tuple(out)


def _monomials(x, indices):
    x = np.asarray(x, dtype=float)
    powers = np.array(indices, dtype=float)
    # x^alpha with 0^0 = 1
    return np.prod(np.where(powers == 0, 1.0, x[..., None, :] ** powers), axis=-1)


def linear_features(x):
    return np.asarray(x, dtype=float)


def poly_features(x, p):
    """Features with Phi(x).Phi(y) = (x.y + 1)^p exactly.

    One feature per multi-index alpha, |alpha| <= p, weighted by the square
    root of the multinomial coefficient p! / (alpha! (p - |alpha|)!).
    """
    x = np.asarray(x, dtype=float)
    idx = multi_indices(x.shape[-1], p)
    w = np.array([factorial(p) / (np.prod([factorial(a) for a in alpha]) * factorial(p - sum(alpha)))
                  for alpha in idx])
    return np.sqrt(w) * _monomials(x, idx)


def gaussian_mercer_features(x, max_total_degree, sigma):
    """Truncated features of exp(-|x - y|^2 / sigma).

    eta_p(x) = prod_d e_{p_d}(x_d),  e_m(t) = sqrt((2/sigma)^m / m!) t^m exp(-t^2 / sigma),
    so that sum_p eta_p(x) eta_p(y) -> k(x, y) as the degree grows.
    """
    x = np.asarray(x, dtype=float)
    idx = multi_indices(x.shape[-1], max_total_degree)
    coef = np.array([np.prod([np.sqrt((2.0 / sigma) ** m / factorial(m)) for m in alpha]) for alpha in idx])
    envelope = np.exp(-np.sum(x ** 2, axis=-1) / sigma)[..., None]
    return coef * _monomials(x, idx) * envelope


def mercer_partial_sum(x, y, max_total_degree, sigma):
    return np.sum(gaussian_mercer_features(x, max_total_degree, sigma)
                  * gaussian_mercer_features(y, max_total_degree, sigma), axis=-1)


def averaged_features(ens, feature_fn):
    """Burst-averaged feature vectors, one row per test point."""
    return feature_fn(ens.samples).mean(axis=1)


def regularity_factor(coeffs, i_max, total_sq=None):
    """1 + (sum_{i > i_max} h_i^2) / (sum_{i <= i_max} h_i^2).

    ``total_sq`` overrides the full sum of squares when the coefficient
    sequence is truncated (e.g. ||h||^2 in L2).
    """
    h = np.asarray(coeffs, dtype=float)
    # rescale so squaring neither underflows nor overflows
    scale = float(np.max(np.abs(h[: i_max + 1]), initial=0.0))
    if scale == 0.0:
        raise ValueError("all coefficients with index <= i_max vanish")
    h = h / scale
    head = float(np.sum(h[: i_max + 1] ** 2))
    total = float(np.sum(h ** 2)) if total_sq is None else float(total_sq) / scale ** 2
    return 1.0 + max(total - head, 0.0) / head


class MercerBasis:
    """Mercer eigenpairs of the 1D Gaussian kernel on [a, b] (Lebesgue measure).

    Built from the truncated features eta (degree <= ``degree``): with
    Gauss-Legendre weights W, the SVD W^(1/2) Eta = U S V^T gives
    lambda_i = s_i^2 and phi_i(x) = eta(x) . v_i / s_i, which are
    orthonormal in L2([a, b]).
    """

    def __init__(self, sigma, interval=(-1.0, 1.0), degree=40, quad_order=200):
        self.sigma = float(sigma)
        self.interval = (float(interval[0]), float(interval[1]))
        self.degree = int(degree)
        a, b = self.interval
        t, w = np.polynomial.legendre.leggauss(quad_order)
        self.nodes = 0.5 * (b - a) * t + 0.5 * (b + a)
        self.weights = 0.5 * (b - a) * w
        eta = gaussian_mercer_features(self.nodes[:, None], self.degree, self.sigma)
        U, s, Vt = np.linalg.svd(np.sqrt(self.weights)[:, None] * eta, full_matrices=False)
        self.eigenvalues = s ** 2
        self._s = s
        self._V = Vt.T
        # orient each eigenfunction so its largest-magnitude node value is positive
        vals = U / np.sqrt(self.weights)[:, None]
        flip = np.sign(vals[np.argmax(np.abs(vals), axis=0), np.arange(vals.shape[1])])
        self._V = self._V * flip

    def __len__(self):
        return self.eigenvalues.size

    def eigenfunctions(self, x, count=None):
        """phi_i(x) for i < count; shape (..., count)."""
        x = np.asarray(x, dtype=float)
        count = len(self) if count is None else count
        eta = gaussian_mercer_features(x[..., None], self.degree, self.sigma)
        return eta @ self._V[:, :count] / self._s[:count]

    def synthesize(self, coeffs, x):
        """h(x) = sum_i coeffs_i phi_i(x)."""
        coeffs = np.asarray(coeffs, dtype=float)
        return self.eigenfunctions(x, coeffs.size) @ coeffs

    def project(self, f, count=None):
        """Coefficients <f, phi_i>_{L2} of a callable f by quadrature."""
        fx = f(self.nodes)
        return (self.weights * fx) @ self.eigenfunctions(self.nodes, count)

    def rkhs_sq_norm(self, coeffs):
        """||mu(h)||_H^2 = sum_i lambda_i h_i^2 for h = sum_i h_i phi_i."""
        coeffs = np.asarray(coeffs, dtype=float)
        return float(np.sum(self.eigenvalues[: coeffs.size] * coeffs ** 2))


def embedding_sq_norm(h, k, interval, quad_order=200):
    """||mu(h)||_H^2 = int int h(x) h(y) k(x, y) dx dy by Gauss-Legendre quadrature.

    Uses the kernel directly, with no reference to any eigen-expansion.
    """
    a, b = interval
    t, w = np.polynomial.legendre.leggauss(quad_order)
    x = 0.5 * (b - a) * t + 0.5 * (b + a)
    w = 0.5 * (b - a) * w
    hw = w * h(x)
    K = kernel_eval(k, x[:, None, None], x[None, :, None])
    return float(hw @ K @ hw)


def l2_sq_norm(h, interval, quad_order=200):
    a, b = interval
    t, w = np.polynomial.legendre.leggauss(quad_order)
    x = 0.5 * (b - a) * t + 0.5 * (b + a)
    return float(np.sum(0.5 * (b - a) * w * h(x) ** 2))


__all__ = [
    "KernelSpec", "multi_indices", "linear_features", "poly_features", "gaussian_mercer_features",
    "mercer_partial_sum", "averaged_features", "regularity_factor", "MercerBasis",
    "embedding_sq_norm", "l2_sq_norm",
]
