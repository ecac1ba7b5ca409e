"""Kernel evaluation, empirical Gram matrices between bursts, kernel distances."""

import warnings
from dataclasses import dataclass

import numba as nb
import numpy as np

_LINEAR, _POLY, _GAUSS = 0, 1, 2


@dataclass(frozen=True)
class KernelSpec:
    """``linear``: x.y, ``polynomial``: (x.y + 1)^degree, ``gaussian``: exp(-|x-y|^2 / sigma)."""

    kind: str
    degree: int = 1
    sigma: float = 1.0

    def __post_init__(self):
        if self.kind not in ("linear", "polynomial", "gaussian"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "polynomial" and (int(self.degree) != self.degree or self.degree < 1):
            raise ValueError("polynomial degree must be an integer >= 1")
        if self.kind == "gaussian" and not self.sigma > 0:
            raise ValueError("gaussian bandwidth must be > 0")

    @classmethod
    def linear(cls):
        return cls("linear")

    @classmethod
    def polynomial(cls, degree):
        return cls("polynomial", degree=degree)

    @classmethod
    def gaussian(cls, sigma):
        return cls("gaussian", sigma=sigma)

    @classmethod
    def parse(cls, text):
        """``linear``, ``polynomial:3`` or ``gaussian:0.1``."""
        kind, _, arg = text.partition(":")
        if kind == "linear":
            return cls.linear()
        if kind == "polynomial":
            return cls.polynomial(int(arg))
        if kind == "gaussian":
            return cls.gaussian(float(arg))
        raise ValueError(f"cannot parse kernel {text!r}")

    def __str__(self):
        if self.kind == "linear":
            return "linear"
        if self.kind == "polynomial":
            return f"polynomial:{self.degree}"
        return f"gaussian:{self.sigma!r}"

    @property
    def _code(self):
        return {"linear": _LINEAR, "polynomial": _POLY, "gaussian": _GAUSS}[self.kind]

    @property
    def _param(self):
        return float(self.degree) if self.kind == "polynomial" else float(self.sigma)


def kernel_eval(k, x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape[-1] != y.shape[-1]:
        raise ValueError("dimension mismatch")
    if k.kind == "linear":
        return np.sum(x * y, axis=-1)
    if k.kind == "polynomial":
        return (np.sum(x * y, axis=-1) + 1.0) ** k.degree
    return np.exp(-np.sum((x - y) ** 2, axis=-1) / k.sigma)


class SymmetricMatrix:
    """Symmetric N x N matrix tagged as ``gram`` or ``distance``.

    Distance matrices carry ``squared``: kernel distances come out squared
    (D = K_ii + K_jj - 2 K_ij), Euclidean ones plain.
    """

    def __init__(self, values, kind, squared=False):
        values = np.array(values, dtype=float)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise ValueError("matrix must be square")
        if kind not in ("gram", "distance"):
            raise ValueError(f"unknown matrix kind {kind!r}")
        if not np.array_equal(values, values.T):
            raise ValueError("matrix is not symmetric")
        if kind == "distance":
            if np.any(np.diag(values) != 0) or np.any(values < 0):
                raise ValueError("distance matrix needs zero diagonal and nonnegative entries")
        values.flags.writeable = False
        self.values = values
        self.kind = kind
        self.squared = bool(squared) if kind == "distance" else False

    @property
    def N(self):
        return self.values.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def __repr__(self):
        sq = " squared" if self.squared else ""
        return f"SymmetricMatrix(N={self.N}, kind={self.kind}{sq})"

    def plain(self):
        """Plain (non-squared) distances."""
        if self.kind != "distance":
            raise ValueError("plain() applies to distance matrices")
        if not self.squared:
            return self
        return SymmetricMatrix(np.sqrt(self.values), "distance", squared=False)

    def lower_triangle(self):
        return self.values[np.tril_indices(self.N)]

    @classmethod
    def from_lower_triangle(cls, tri, N, kind, squared=False):
        m = np.zeros((N, N))
        m[np.tril_indices(N)] = tri
        m = m + np.tril(m, -1).T
        return cls(m, kind, squared)

    def permuted(self, perm):
        perm = np.asarray(perm)
        return SymmetricMatrix(self.values[np.ix_(perm, perm)], self.kind, self.squared)

    def min_eigenvalue(self):
        return float(np.linalg.eigvalsh(self.values)[0])


@nb.njit(cache=True, inline="always")
def _k(code, param, x, y):
    n = x.shape[0]
    if code == _GAUSS:
        s = 0.0
        for d in range(n):
            t = x[d] - y[d]
            s += t * t
        return np.exp(-s / param)
    s = 0.0
    for d in range(n):
        s += x[d] * y[d]
    if code == _POLY:
        return (s + 1.0) ** param
    return s


@nb.njit(cache=True, inline="always")
def _pairwise_sum(buf, m):
    # in-place pairwise reduction, fixed order
    while m > 1:
        half = m // 2
        for t in range(half):
            buf[t] = buf[2 * t] + buf[2 * t + 1]
        if m % 2 == 1:
            buf[half] = buf[m - 1]
            m = half + 1
        else:
            m = half
    return buf[0]


@nb.njit(cache=True, parallel=True)
def _gram(code, param, A, B, symmetric, out):
    N, M, n = A.shape
    N2, M2, _ = B.shape
    for i in nb.prange(N):
        inner = np.empty(M2)
        rows = np.empty(M)
        j0 = i if symmetric else 0
        for j in range(j0, N2):
            for l1 in range(M):
                for l2 in range(M2):
                    inner[l2] = _k(code, param, A[i, l1], B[j, l2])
                rows[l1] = _pairwise_sum(inner, M2)
            out[i, j] = _pairwise_sum(rows, M) / (M * M2)
    if symmetric:
        for i in range(N):
            for j in range(i):
                out[i, j] = out[j, i]


def empirical_gram(a, b, k):
    """K_ij = (1/M^2) sum_{l1,l2} k(y_i^(l1), y_j^(l2)).

    Returns a :class:`SymmetricMatrix` when ``b is a`` (or ``b`` is None),
    otherwise a plain N_a x N_b array.
    """
    symmetric = b is None or b is a
    b = a if b is None else b
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    A = np.ascontiguousarray(a.samples)
    B = np.ascontiguousarray(b.samples)
    out = np.empty((A.shape[0], B.shape[0]))
    _gram(k._code, k._param, A, B, symmetric, out)
    if symmetric:
        return SymmetricMatrix(out, "gram")
    return out


def kernel_distance(K, warn_tol=1e-9):
    """Squared RKHS distances max(K_ii + K_jj - 2 K_ij, 0) between embeddings."""
    if K.kind != "gram":
        raise ValueError("kernel_distance expects a gram matrix")
    Kv = K.values
    d = np.diag(Kv)
    D = d[:, None] + d[None, :] - 2.0 * Kv
    scale = max(float(np.max(np.abs(d))), np.finfo(float).tiny)
    worst = float(D.min())
    if worst < -warn_tol * scale:
        warnings.warn(f"squared kernel distance {worst:.3g} below -{warn_tol:g} relative; clamped to 0",
                      RuntimeWarning, stacklevel=2)
    D = np.maximum(D, 0.0)
    D = 0.5 * (D + D.T)
    np.fill_diagonal(D, 0.0)
    return SymmetricMatrix(D, "distance", squared=True)
