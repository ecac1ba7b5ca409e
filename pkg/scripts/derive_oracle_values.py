"""Independent reference values frozen into tests/reference_values.py.

Nothing here imports tmkernel: potentials are retyped from their formulas,
the generator is a central-difference discretization (not the package's
square-root approximation), and random numbers come from numpy's Philox.

    python3 scripts/derive_oracle_values.py
"""

import numpy as np
from scipy.integrate import quad
from scipy.linalg import eig
from scipy.optimize import minimize

A = [-200.0, -100.0, -170.0, 15.0]
a = [-1.0, -1.0, -6.5, 0.7]
b = [0.0, 0.0, 11.0, 0.6]
c = [-10.0, -10.0, -6.5, 0.7]
X0 = [1.0, 0.0, -0.5, -1.0]
Y0 = [0.0, 0.5, 1.5, 1.0]


def mb(p):
    x, y = p
    return sum(A[k] * np.exp(a[k] * (x - X0[k]) ** 2 + b[k] * (x - X0[k]) * (y - Y0[k])
                             + c[k] * (y - Y0[k]) ** 2) for k in range(4))


def mb_grad(p, h=1e-7):
    p = np.asarray(p, dtype=float)
    return np.array([(mb(p + h * e) - mb(p - h * e)) / (2 * h) for e in np.eye(2)])


def horseshoe(p):
    x, y = p
    return (x * x - 1) ** 2 + 5 * (x * x + y - 1) ** 2


def horseshoe_grad(p):
    x, y = p
    s = x * x + y - 1
    return np.array([4 * x * (x * x - 1) + 20 * x * s, 10 * s])


def string_method(grad, start, end, nodes=41, step=1e-4, iters=20000):
    """Simplified zero-temperature string: gradient step, then equal-arclength reparametrization."""
    s = np.linspace(0, 1, nodes)[:, None]
    path = (1 - s) * np.asarray(start) + s * np.asarray(end)
    # bend the initial guess upward so it does not sit on a ridge
    path[:, 1] += 0.5 * np.sin(np.pi * s[:, 0])
    for _ in range(iters):
        path = path - step * np.array([grad(p) for p in path])
        seg = np.r_[0, np.cumsum(np.linalg.norm(np.diff(path, axis=0), axis=1))]
        t = np.linspace(0, seg[-1], nodes)
        path = np.stack([np.interp(t, seg, path[:, k]) for k in range(2)], axis=1)
    return path


def central_generator_1d(V, dV, beta, lo, hi, m):
    """beta^-1 u'' - V' u' with central differences, reflecting ends (ghost nodes)."""
    h = (hi - lo) / m
    x = lo + h * (np.arange(m) + 0.5)
    L = np.zeros((m, m))
    for i in range(m):
        up = 1 / (beta * h * h) - dV(x[i]) / (2 * h)
        dn = 1 / (beta * h * h) + dV(x[i]) / (2 * h)
        if i + 1 < m:
            L[i, i + 1] += up
            L[i, i] -= up
        if i > 0:
            L[i, i - 1] += dn
            L[i, i] -= dn
    return L


def main():
    out = {}
    mins = []
    for guess in [(-0.55, 1.45), (0.62, 0.03), (-0.05, 0.47)]:
        r = minimize(mb, guess, jac=mb_grad, method="BFGS", options={"gtol": 1e-10})
        mins.append(tuple(float(v) for v in r.x))
    out["MB_MINIMA"] = mins
    out["MB_AT_ORIGIN"] = float(mb((0.0, 0.0)))

    path = string_method(horseshoe_grad, (-1.0, 0.0), (1.0, 0.0))
    top = path[np.argmax(path[:, 1])]
    out["HORSESHOE_MEP_TOP"] = (float(top[0]), float(top[1]))
    out["HORSESHOE_MEP_XRANGE"] = (float(path[:, 0].min()), float(path[:, 0].max()))

    mb_path = string_method(mb_grad, mins[0], mins[1], step=2e-5, iters=20000)
    out["MB_MEP"] = [tuple(float(v) for v in p) for p in mb_path[::4]]

    beta = 3.0
    V = lambda x: (x * x - 1) ** 2
    dV = lambda x: 4 * x * (x * x - 1)
    rates = np.sort(eig(central_generator_1d(V, dV, beta, -2.0, 2.0, 2000))[0].real)[::-1]
    out["DW1D_BETA3_RATES"] = [float(v) for v in rates[:4]]
    Z = quad(lambda x: np.exp(-beta * V(x)), -2, 2)[0]
    out["DW1D_BETA3_Z"] = float(Z)

    bg = np.random.Generator(np.random.Philox(key=np.array([7, 11], dtype=np.uint64),
                                              counter=np.array([0, 0, 0, 0], dtype=np.uint64)))
    # numpy increments the counter before the first block
    out["PHILOX_KEY_7_11_FIRST_WORDS"] = [int(v) for v in bg.bit_generator.random_raw(4)]

    for k, v in out.items():
        print(f"{k} = {v!r}")


if __name__ == "__main__":
    main()
