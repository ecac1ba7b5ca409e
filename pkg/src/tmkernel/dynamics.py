"""Benchmark potentials, overdamped Langevin integration and burst sampling."""

import math
from dataclasses import dataclass, field

import numba as nb
import numpy as np

from tmkernel.rng import Stream, normal_block, stream_key

FLAT = 0
DOUBLE_WELL = 1
MULLER_BROWN = 2
HORSESHOE = 3

# Mueller & Brown (1979), four exponential terms
MB_A = np.array([-200.0, -100.0, -170.0, 15.0])
MB_a = np.array([-1.0, -1.0, -6.5, 0.7])
MB_b = np.array([0.0, 0.0, 11.0, 0.6])
MB_c = np.array([-10.0, -10.0, -6.5, 0.7])
MB_X0 = np.array([1.0, 0.0, -0.5, -1.0])
MB_Y0 = np.array([0.0, 0.5, 1.5, 1.0])

HORSESHOE_STIFFNESS = 5.0


class DivergenceError(FloatingPointError):
    """A trajectory left the finite numbers; usually dt is too large."""

    def __init__(self, step, i=None, l=None):
        self.step = step
        self.i = i
        self.l = l
        where = "" if i is None else f" in burst (i={i}, l={l})"
        super().__init__(
            f"trajectory diverged at step {step}{where}; reduce dt")


@dataclass(frozen=True, eq=False)
class PotentialModel:
    """Analytic potential energy on an axis-aligned box.

    ``box`` has shape ``(dim, 2)`` with rows ``(low, high)``.  ``code`` and
    ``params`` select the jitted gradient used by the integrator.
    """

    name: str
    dim: int
    box: np.ndarray
    code: int
    params: np.ndarray = field(default_factory=lambda: np.zeros(1))

    def eval(self, x):
        x = np.asarray(x, dtype=float)
        if self.code == FLAT:
            return np.zeros(x.shape[:-1])
        if self.code == DOUBLE_WELL:
            v = (x[..., 0] ** 2 - 1.0) ** 2
            if self.dim > 1:
                v = v + 0.5 * self.params[0] * np.sum(x[..., 1:] ** 2, axis=-1)
            return v
        if self.code == MULLER_BROWN:
            dx = x[..., 0, None] - MB_X0
            dy = x[..., 1, None] - MB_Y0
            return np.sum(MB_A * np.exp(MB_a * dx * dx + MB_b * dx * dy + MB_c * dy * dy), axis=-1)
        if self.code == HORSESHOE:
            x1, x2 = x[..., 0], x[..., 1]
            return (x1 ** 2 - 1.0) ** 2 + HORSESHOE_STIFFNESS * (x1 ** 2 + x2 - 1.0) ** 2
        raise ValueError(f"unknown potential code {self.code}")

    def grad(self, x):
        x = np.asarray(x, dtype=float)
        g = np.zeros_like(x)
        if self.code == FLAT:
            return g
        if self.code == DOUBLE_WELL:
            g[..., 0] = 4.0 * x[..., 0] * (x[..., 0] ** 2 - 1.0)
            if self.dim > 1:
                g[..., 1:] = self.params[0] * x[..., 1:]
            return g
        if self.code == MULLER_BROWN:
            dx = x[..., 0, None] - MB_X0
            dy = x[..., 1, None] - MB_Y0
            e = MB_A * np.exp(MB_a * dx * dx + MB_b * dx * dy + MB_c * dy * dy)
            g[..., 0] = np.sum(e * (2.0 * MB_a * dx + MB_b * dy), axis=-1)
            g[..., 1] = np.sum(e * (MB_b * dx + 2.0 * MB_c * dy), axis=-1)
            return g
        if self.code == HORSESHOE:
            x1, x2 = x[..., 0], x[..., 1]
            s = x1 ** 2 + x2 - 1.0
            g[..., 0] = 4.0 * x1 * (x1 ** 2 - 1.0) + 4.0 * HORSESHOE_STIFFNESS * x1 * s
            g[..., 1] = 2.0 * HORSESHOE_STIFFNESS * s
            return g
        raise ValueError(f"unknown potential code {self.code}")

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        return np.all((x >= self.box[:, 0]) & (x <= self.box[:, 1]), axis=-1)


def muller_brown():
    return PotentialModel("muller-brown", 2, np.array([[-1.5, 1.5], [-0.5, 2.5]]), MULLER_BROWN)


def horseshoe():
    """Two wells at (+-1, 0) joined by the curved valley y = 1 - x^2."""
    return PotentialModel("horseshoe", 2, np.array([[-2.0, 2.0], [-2.0, 2.0]]), HORSESHOE)


def double_well(dim=1, stiffness=4.0):
    """(x_0^2 - 1)^2 plus a harmonic term (stiffness/2) |x_rest|^2 for dim > 1."""
    name = "double-well" if dim == 1 else f"double-well-{dim}d"
    box = np.tile([-2.0, 2.0], (dim, 1))
    return PotentialModel(name, dim, box, DOUBLE_WELL, np.array([float(stiffness)]))


def flat(box):
    box = np.atleast_2d(np.asarray(box, dtype=float))
    return PotentialModel("flat", box.shape[0], box, FLAT)


POTENTIALS = {
    "muller-brown": muller_brown,
    "horseshoe": horseshoe,
    "double-well": double_well,
    "double-well-2d": lambda: double_well(2),
}


def get_potential(name):
    try:
        return POTENTIALS[name]()
    except KeyError:
        raise ValueError(f"unknown potential {name!r}; choose from {sorted(POTENTIALS)}") from None


@dataclass(frozen=True)
class SdeConfig:
    beta: float
    dt: float
    tau: float
    seed: int = 1

    def __post_init__(self):
        if not self.beta > 0 or not self.dt > 0:
            raise ValueError("beta and dt must be positive")
        if self.tau < 0:
            raise ValueError("tau must be nonnegative")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must fit in 64 unsigned bits")
        ratio = self.tau / self.dt
        if abs(ratio - round(ratio)) > np.spacing(max(ratio, 1.0)):
            raise ValueError(f"tau/dt = {ratio!r} is not an integer")

    @property
    def steps(self):
        return int(round(self.tau / self.dt))

    @property
    def noise_scale(self):
        return math.sqrt(2.0 * self.dt / self.beta)


@dataclass(frozen=True, eq=False)
class BurstEnsemble:
    """Test points and the endpoints of M short trajectories from each."""

    points: np.ndarray
    samples: np.ndarray
    tau: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        points = np.array(self.points, dtype=float)
        samples = np.array(self.samples, dtype=float)
        if points.ndim != 2 or samples.ndim != 3:
            raise ValueError("points must be N x n and samples N x M x n")
        N, n = points.shape
        if samples.shape[0] != N or samples.shape[2] != n:
            raise ValueError(f"samples shape {samples.shape} does not match points {points.shape}")
        if N < 2 or samples.shape[1] < 1:
            raise ValueError("need N >= 2 test points and M >= 1 samples")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples contain non-finite values")
        points.flags.writeable = False
        samples.flags.writeable = False
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "samples", samples)

    @property
    def N(self):
        return self.samples.shape[0]

    @property
    def M(self):
        return self.samples.shape[1]

    @property
    def dim(self):
        return self.samples.shape[2]

    def means(self):
        return self.samples.mean(axis=1)

    def subset(self, index):
        index = np.asarray(index)
        return BurstEnsemble(self.points[index], self.samples[index], self.tau, dict(self.meta))


@nb.njit(cache=True)
def _grad(code, params, x, g):
    if code == FLAT:
        for d in range(x.shape[0]):
            g[d] = 0.0
    elif code == DOUBLE_WELL:
        g[0] = 4.0 * x[0] * (x[0] * x[0] - 1.0)
        for d in range(1, x.shape[0]):
            g[d] = params[0] * x[d]
    elif code == MULLER_BROWN:
        g[0] = 0.0
        g[1] = 0.0
        for k in range(4):
            dx = x[0] - MB_X0[k]
            dy = x[1] - MB_Y0[k]
            e = MB_A[k] * np.exp(MB_a[k] * dx * dx + MB_b[k] * dx * dy + MB_c[k] * dy * dy)
            g[0] += e * (2.0 * MB_a[k] * dx + MB_b[k] * dy)
            g[1] += e * (MB_b[k] * dx + 2.0 * MB_c[k] * dy)
    else:
        s = x[0] * x[0] + x[1] - 1.0
        g[0] = 4.0 * x[0] * (x[0] * x[0] - 1.0) + 4.0 * HORSESHOE_STIFFNESS * x[0] * s
        g[1] = 2.0 * HORSESHOE_STIFFNESS * s


@nb.njit(cache=True)
def _advance(code, params, x, s0, s1, dt, scale, seed, key, g, buf):
    # Normal number k = step * n + coord lives in block k // 4, so any chunk
    # [s0, s1) reproduces the same stream as one uninterrupted run.
    n = x.shape[0]
    k = s0 * n
    if scale != 0.0 and k % 4 != 0:
        normal_block(k // 4, seed, key, buf)
    for s in range(s0, s1):
        _grad(code, params, x, g)
        bad = False
        for d in range(n):
            if scale != 0.0:
                if k % 4 == 0:
                    normal_block(k // 4, seed, key, buf)
                x[d] = x[d] - dt * g[d] + scale * buf[k % 4]
            else:
                x[d] = x[d] - dt * g[d]
            k += 1
            if not np.isfinite(x[d]):
                bad = True
        if bad:
            return s + 1
    return 0


@nb.njit(cache=True, parallel=True)
def _run_bursts(code, params, points, M, steps, dt, scale, seed, out, status):
    N, n = points.shape
    for t in nb.prange(N * M):
        i = t // M
        l = t % M
        x = points[i].copy()
        g = np.empty(n)
        buf = np.empty(4)
        status[t] = _advance(code, params, x, 0, steps, dt, scale, seed, stream_key(i, l), g, buf)
        out[i, l, :] = x


@nb.njit(cache=True)
def _run_trajectory(code, params, x0, nframes, stride, dt, scale, seed, key, frames):
    x = x0.copy()
    n = x.shape[0]
    g = np.empty(n)
    buf = np.empty(4)
    frames[0, :] = x
    for f in range(1, nframes):
        s0 = (f - 1) * stride
        bad = _advance(code, params, x, s0, s0 + stride, dt, scale, seed, key, g, buf)
        if bad != 0:
            return bad
        frames[f, :] = x
    return 0


def euler_maruyama(potential, cfg, x0, steps, stream=None, noise=True):
    """Advance one trajectory by ``steps`` Euler-Maruyama steps.

    ``stream`` defaults to ``Stream(cfg.seed)``; ``noise=False`` gives the
    deterministic gradient flow (test aid only).
    """
    if steps < 0:
        raise ValueError("steps must be >= 0")
    stream = stream or Stream(cfg.seed)
    x = np.array(x0, dtype=float).reshape(potential.dim)
    scale = cfg.noise_scale if noise else 0.0
    bad = _advance(potential.code, potential.params, x, 0, int(steps), cfg.dt, scale,
                   np.uint64(stream.seed), np.uint64(stream.key), np.empty(potential.dim), np.empty(4))
    if bad:
        raise DivergenceError(bad)
    return x


def trajectory(potential, cfg, x0, nframes, stride=1, stream=None, noise=True):
    """Record ``nframes`` frames (including ``x0``) spaced ``stride`` steps apart.

    Frame ``f`` equals ``euler_maruyama(..., steps=f * stride)`` with the same stream.
    """
    stream = stream or Stream(cfg.seed)
    x0 = np.array(x0, dtype=float).reshape(potential.dim)
    frames = np.empty((int(nframes), potential.dim))
    scale = cfg.noise_scale if noise else 0.0
    bad = _run_trajectory(potential.code, potential.params, x0, int(nframes), int(stride), cfg.dt,
                          scale, np.uint64(stream.seed), np.uint64(stream.key), frames)
    if bad:
        raise DivergenceError(bad)
    return frames


def sample_bursts(potential, cfg, points, M, noise=True):
    """Endpoints of M independent trajectories of length tau from each test point.

    Trajectory ``(i, l)`` uses ``Stream(cfg.seed, i, l)``, so the ensemble is
    bitwise reproducible for any execution order or thread count.
    """
    points = np.ascontiguousarray(points, dtype=float)
    if points.ndim != 2 or points.shape[1] != potential.dim:
        raise ValueError(f"points must have shape (N, {potential.dim})")
    if M < 1:
        raise ValueError("M must be >= 1")
    N = points.shape[0]
    out = np.empty((N, M, potential.dim))
    status = np.zeros(N * M, dtype=np.int64)
    scale = cfg.noise_scale if noise else 0.0
    _run_bursts(potential.code, potential.params, points, int(M), cfg.steps, cfg.dt, scale,
                np.uint64(cfg.seed), out, status)
    failed = np.flatnonzero(status)
    if failed.size:
        t = failed[0]
        raise DivergenceError(int(status[t]), int(t // M), int(t % M))
    meta = {"seed": cfg.seed, "dt": cfg.dt, "beta": cfg.beta, "potential": potential.name}
    return BurstEnsemble(points, out, cfg.tau, meta)


def test_points_grid(box, shape):
    """Cell centres of a regular grid, lexicographic order (last axis fastest)."""
    box = np.atleast_2d(np.asarray(box, dtype=float))
    axes = [lo + (hi - lo) * (np.arange(m) + 0.5) / m for (lo, hi), m in zip(box, shape)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def test_points_uniform(box, N, seed):
    box = np.atleast_2d(np.asarray(box, dtype=float))
    rng = np.random.default_rng(seed)
    return box[:, 0] + (box[:, 1] - box[:, 0]) * rng.random((N, box.shape[0]))


def test_points_subsample(frames, N, stride):
    frames = np.asarray(frames, dtype=float)
    if frames.shape[0] < N * stride:
        raise ValueError(f"trajectory has {frames.shape[0]} frames, need at least {N * stride}")
    return frames[::stride][:N].copy()


# keep pytest from collecting the test_points_* helpers
test_points_grid.__test__ = False
test_points_uniform.__test__ = False
test_points_subsample.__test__ = False
