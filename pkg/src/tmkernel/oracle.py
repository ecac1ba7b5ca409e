"""Grid reference solutions for 1D/2D benchmarks.

The generator beta^-1 Laplacian - grad V . grad is discretized as a reversible
jump process between neighbouring cells with rates

    r(c -> c') = exp(-beta (V(c') - V(c)) / 2) / (beta h^2)

(square-root approximation).  Rates satisfy detailed balance with respect to
exp(-beta V) exactly, are always positive (discrete maximum principle), and
the scheme is second-order consistent.  No flux leaves the box.
"""

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.interpolate import RegularGridInterpolator

from tmkernel.dynamics import test_points_grid
from tmkernel.kernels.gram import SymmetricMatrix


@dataclass(frozen=True, eq=False)
class Grid:
    """Regular cell-centred grid on an axis-aligned box."""

    box: np.ndarray
    shape: tuple

    def __post_init__(self):
        box = np.atleast_2d(np.asarray(self.box, dtype=float))
        shape = tuple(int(m) for m in np.atleast_1d(self.shape))
        if box.shape != (len(shape), 2) or np.any(box[:, 1] <= box[:, 0]) or min(shape) < 1:
            raise ValueError("box must be (n, 2) with low < high and shape positive per axis")
        object.__setattr__(self, "box", box)
        object.__setattr__(self, "shape", shape)

    @property
    def dim(self):
        return len(self.shape)

    @property
    def size(self):
        return int(np.prod(self.shape))

    @property
    def spacing(self):
        return (self.box[:, 1] - self.box[:, 0]) / np.array(self.shape)

    @property
    def cell_volume(self):
        return float(np.prod(self.spacing))

    def axes(self):
        return [lo + h * (np.arange(m) + 0.5) for (lo, _), h, m in zip(self.box, self.spacing, self.shape)]

    def centers(self):
        return test_points_grid(self.box, self.shape)

    def locate(self, points):
        """Flat cell index of each point, -1 outside the box."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        rel = (points - self.box[:, 0]) / self.spacing
        idx = np.floor(rel).astype(np.int64)
        m = np.array(self.shape)
        # the upper box face belongs to the last cell
        on_top = points == self.box[:, 1]
        idx = np.where(on_top, m - 1, idx)
        inside = np.all((idx >= 0) & (idx < m), axis=1)
        flat = np.full(points.shape[0], -1, dtype=np.int64)
        if inside.any():
            flat[inside] = np.ravel_multi_index(tuple(idx[inside].T), self.shape)
        return flat


@dataclass(frozen=True, eq=False)
class GridField:
    grid: Grid
    values: np.ndarray
    kind: str

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).reshape(self.grid.shape)
        object.__setattr__(self, "values", values)

    def integral(self):
        return float(self.values.sum() * self.grid.cell_volume)

    def at(self, points):
        """Linear interpolation between cell centres (clamped at the outer half cells)."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        axes = self.grid.axes()
        clipped = np.column_stack([np.clip(points[:, d], a[0], a[-1]) for d, a in enumerate(axes)])
        if any(len(a) == 1 for a in axes):
            return self.values.ravel()[self.grid.locate(points)]
        return RegularGridInterpolator(axes, self.values)(clipped)


def _as_grid(grid):
    if isinstance(grid, Grid):
        return grid
    box, shape = grid
    return Grid(box, shape)


def invariant_density(potential, beta, grid):
    """rho = exp(-beta V) / Z at cell centres, Z by midpoint quadrature."""
    grid = _as_grid(grid)
    V = potential.eval(grid.centers())
    e = np.exp(-beta * (V - V.min()))
    rho = e / (e.sum() * grid.cell_volume)
    return GridField(grid, rho, "density")


def _edges(potential, beta, grid):
    """Neighbour pairs (a, b), rates a -> b and b -> a, and the symmetric weight."""
    V = potential.eval(grid.centers()).reshape(grid.shape)
    flat = np.arange(grid.size).reshape(grid.shape)
    out = []
    for d, h in enumerate(grid.spacing):
        lo = [slice(None)] * grid.dim
        hi = [slice(None)] * grid.dim
        lo[d] = slice(0, -1)
        hi[d] = slice(1, None)
        a, b = flat[tuple(lo)].ravel(), flat[tuple(hi)].ravel()
        dV = (V[tuple(hi)] - V[tuple(lo)]).ravel()
        c = 1.0 / (beta * h * h)
        up = c * np.exp(np.clip(-0.5 * beta * dV, -700, 700))
        down = c * np.exp(np.clip(0.5 * beta * dV, -700, 700))
        out.append((a, b, up, down, np.full(a.size, c)))
    return [np.concatenate(parts) for parts in zip(*out)]


def generator_matrix(potential, beta, grid):
    """Sparse rate matrix L (rows sum to zero) acting on functions of the cells."""
    grid = _as_grid(grid)
    a, b, up, down, _ = _edges(potential, beta, grid)
    L = sp.csr_matrix((np.r_[up, down], (np.r_[a, b], np.r_[b, a])), shape=(grid.size, grid.size))
    L = L - sp.diags(np.asarray(L.sum(axis=1)).ravel())
    return L.tocsr()


def _energy_mask(potential, beta, grid, cutoff):
    V = potential.eval(grid.centers())
    return beta * (V - V.min()) <= cutoff


def symmetrized_generator(potential, beta, grid, cutoff=None):
    """S = Pi^(1/2) L Pi^(-1/2) with Pi the discrete stationary weights.

    Off-diagonal entries are exactly 1 / (beta h^2).  With ``cutoff`` only
    cells with beta (V - V_min) <= cutoff are kept and jumps into the others
    are dropped (reflection at the truncation boundary).  Returns S, rho and
    the boolean mask of kept cells.
    """
    grid = _as_grid(grid)
    rho = invariant_density(potential, beta, grid).values.ravel()
    keep = np.ones(grid.size, bool) if cutoff is None else _energy_mask(potential, beta, grid, cutoff)
    a, b, up, down, c = _edges(potential, beta, grid)
    inside = keep[a] & keep[b]
    a, b, up, down, c = a[inside], b[inside], up[inside], down[inside], c[inside]
    diag = -(np.bincount(a, up, grid.size) + np.bincount(b, down, grid.size))
    index = np.cumsum(keep) - 1
    n = int(keep.sum())
    S = sp.csr_matrix((np.r_[c, c, diag[keep]], (np.r_[index[a], index[b], np.arange(n)],
                                                  np.r_[index[b], index[a], np.arange(n)])), shape=(n, n))
    return S, rho, keep


def generator_eigs(potential, beta, grid, d, form="density", cutoff=80.0):
    """The d dominant eigenpairs (rate, field) of the discretized generator.

    Rates are <= 0 and sorted decreasing; theta_i^t = exp(rate_i t).  With
    ``form="density"`` fields are transfer-operator eigenfunctions psi_i
    (psi_0 = rho), orthonormal in L2_{1/rho}; ``form="observable"`` returns
    psi_i / rho instead (psi_0 = 1, orthonormal in L2_rho).

    Cells with beta (V - V_min) > ``cutoff`` carry less than exp(-cutoff) of
    the peak density and are left out of the eigenproblem: their escape
    rates, up to exp(beta |dV| / 2) / (beta h^2), would otherwise swamp the
    small dominant rates in rounding error.
    """
    grid = _as_grid(grid)
    if d < 1:
        raise ValueError("d must be >= 1")
    if form not in ("density", "observable"):
        raise ValueError(f"unknown form {form!r}; use density or observable")
    S, rho, keep = symmetrized_generator(potential, beta, grid, cutoff)
    n = S.shape[0]
    if d > n:
        raise ValueError(f"d = {d} exceeds the {n} cells below the energy cutoff")
    if n <= 2048:
        w, U = scipy.linalg.eigh(S.toarray(), subset_by_index=[n - d, n - 1])
    else:
        shift = 1e-6 / (beta * float(np.min(grid.spacing)) ** 2)
        try:
            w, U = spla.eigsh(S, k=d, sigma=shift, which="LM", v0=np.sqrt(rho[keep]))
        except spla.ArpackNoConvergence as exc:
            raise ArithmeticError(f"generator eigensolver did not converge: {exc}") from exc
    order = np.argsort(w)[::-1]
    w, U = w[order], U[:, order]
    idx = np.argmax(np.abs(U), axis=0)
    U = U * np.sign(U[idx, np.arange(U.shape[1])])
    if U[:, 0] @ np.sqrt(rho[keep]) < 0:
        U[:, 0] *= -1
    # U columns are Euclidean-orthonormal; psi = sqrt(rho) u / sqrt(vol) gives
    # sum psi_i psi_j / rho * vol = delta_ij
    psi = np.zeros((grid.size, d))
    psi[keep] = np.sqrt(rho[keep])[:, None] * U / np.sqrt(grid.cell_volume)
    if form == "density":
        fields = psi.T
    else:
        fields = _observables(potential, beta, grid, psi, rho, w)
    return [(float(w[k]), GridField(grid, fields[k], "eigenfunction")) for k in range(d)]


def _observables(potential, beta, grid, psi, rho, rates, cutoff=1e-12):
    """psi_i / rho, with cells of negligible rho filled by solving (L - rate) phi = 0.

    Dividing by rho amplifies the rounding noise of psi wherever rho underflows
    relative to its peak; there phi is instead extended from the well-resolved
    cells, which is how the generator determines it.
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        out = psi.T / rho
    out[0] = 1.0
    low = rho < cutoff * rho.max()
    if low.any() and psi.shape[1] > 1:
        L = generator_matrix(potential, beta, grid)
        Lll = L[low][:, low].tocsc()
        Llh = L[low][:, ~low]
        eye = sp.identity(int(low.sum()), format="csc")
        for k in range(1, psi.shape[1]):
            out[k, low] = spla.spsolve(Lll - rates[k] * eye, -(Llh @ out[k, ~low]))
    return out


def _region_mask(region, grid):
    if callable(region):
        return np.asarray(region(grid.centers()), dtype=bool)
    return np.asarray(region, dtype=bool).ravel()


def ball(center, radius):
    center = np.asarray(center, dtype=float)
    return lambda pts: np.sum((pts - center) ** 2, axis=1) <= radius ** 2


def committor(potential, beta, grid, A, B):
    """q = P(hit A before B): L q = 0 off A u B, q = 1 on A, q = 0 on B."""
    grid = _as_grid(grid)
    in_a = _region_mask(A, grid)
    in_b = _region_mask(B, grid)
    if not in_a.any() or not in_b.any():
        raise ValueError("committor needs nonempty regions A and B")
    if np.any(in_a & in_b):
        raise ValueError("regions A and B overlap")
    q = np.where(in_a, 1.0, 0.0)
    free = ~(in_a | in_b)
    if free.any():
        L = generator_matrix(potential, beta, grid)
        Lff = L[free][:, free].tocsc()
        rhs = -(L[free][:, in_a] @ np.ones(int(in_a.sum())))
        q[free] = spla.spsolve(Lff, rhs)
        if not np.all(np.isfinite(q)):
            raise ArithmeticError("committor system is singular")
    return GridField(grid, np.clip(q, 0.0, 1.0), "committor")


def empirical_density(ens, i, grid):
    """Normalized histogram of the M endpoints of burst i (outside samples dropped)."""
    grid = _as_grid(grid)
    idx = grid.locate(ens.samples[i])
    outside = float(np.mean(idx < 0))
    if outside > 0.1:
        warnings.warn(f"{outside:.0%} of burst {i} lies outside the grid", RuntimeWarning, stacklevel=2)
    counts = np.bincount(idx[idx >= 0], minlength=grid.size).astype(float)
    return GridField(grid, counts / (ens.M * grid.cell_volume), "density")


def density_matrix(ens, grid):
    """All N histograms stacked as an N x cells array."""
    grid = _as_grid(grid)
    return np.stack([empirical_density(ens, i, grid).values.ravel() for i in range(ens.N)])


def transition_densities(potential, beta, grid, points, tau, steps=400):
    """Grid transition densities p^tau_x for each start point, shape (N, cells).

    The cell masses obey m' = L^T m starting from the cell holding x.
    Backward Euler keeps them nonnegative for any step (I - dt L^T is an
    M-matrix); extrapolating from step counts ``steps`` and ``steps/2``
    lifts the scheme to second order.  Propagating masses directly avoids
    the exp(beta V / 2) amplification a spectral expansion suffers at
    high-energy start points.
    """
    grid = _as_grid(grid)
    if tau < 0 or steps < 2 or steps % 2:
        raise ValueError("need tau >= 0 and an even step count >= 2")
    idx = grid.locate(points)
    if np.any(idx < 0):
        raise ValueError("start points must lie inside the grid")
    m0 = np.zeros((grid.size, idx.size))
    m0[idx, np.arange(idx.size)] = 1.0
    if tau == 0:
        return m0.T / grid.cell_volume
    LT = generator_matrix(potential, beta, grid).T.tocsc()
    eye = sp.identity(grid.size, format="csc")

    def march(n):
        lu = spla.splu((eye - (tau / n) * LT).tocsc())
        m = m0
        for _ in range(n):
            m = lu.solve(m)
        return m

    m = 2.0 * march(steps) - march(steps // 2)
    return m.T / grid.cell_volume


def weighted_distances(P, grid, weight):
    vol = grid.cell_volume
    if isinstance(weight, str):
        if weight != "L2":
            raise ValueError(f"unknown weight {weight!r}")
        w = np.full(grid.size, vol)
    else:
        rho = weight.values.ravel()
        if np.any(rho <= 0):
            raise ValueError("invariant density vanishes on some cells; use a larger beta or a smaller grid")
        w = vol / rho
    P = P * np.sqrt(w)
    N = P.shape[0]
    D = np.zeros((N, N))
    for i in range(N - 1):
        diff = P[i + 1:] - P[i]
        D[i, i + 1:] = np.sqrt(np.sum(diff * diff, axis=1))
    return SymmetricMatrix(D + D.T, "distance", squared=False)


def density_distance_matrix(ens, grid, weight="L2"):
    """D_ij = (sum_cells (p_i - p_j)^2 w vol)^(1/2) between burst histograms.

    ``weight`` is ``"L2"`` (w = 1) or the invariant density as a GridField
    (w = 1 / rho).
    """
    grid = _as_grid(grid)
    return weighted_distances(density_matrix(ens, grid), grid, weight)


def transition_distance_matrix(potential, beta, grid, points, tau, weight="L2", steps=400):
    """Same metric as :func:`density_distance_matrix` on grid-propagated densities."""
    grid = _as_grid(grid)
    return weighted_distances(transition_densities(potential, beta, grid, points, tau, steps), grid, weight)
