"""Independent reference solvers used by the unit and acceptance tests.

Each one solves the same problem as a library routine by a different method
(brute-force grids, cyclic coordinate descent), so agreement is evidence
rather than a restatement.
"""

import numpy as np


def prox_objective(x, v, k):
    return 0.5 * np.sum((x - v) ** 2, axis=-1) + k * np.sum(np.abs(x), axis=-1)


def grid_prox(v, k, R):
    """Minimise the constrained prox objective over nested 3-dim grids.

    Coarse 0.05 spacing over [-2, 2]^3, then two zooms down to 4e-4 spacing.
    Returns ``(argmin, value)``.
    """
    def search(center, half, step):
        axes = [np.arange(c - half, c + half + step / 2, step) for c in center]
        P = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, 3)
        P = P[np.abs(P).sum(1) <= R]
        f = prox_objective(P, v, k)
        i = np.argmin(f)
        return P[i], f[i]

    x, _ = search(np.zeros(3), 2.0, 0.05)
    x, _ = search(x, 0.08, 0.004)
    return search(x, 0.008, 0.0004)


def cd_lasso(G, g, lam, sweeps=20000, tol=1e-15):
    """Cyclic coordinate descent on ``0.5 b'Gb - g'b + lam |b|_1`` (``G`` positive definite)."""
    b = np.zeros(len(g))
    for _ in range(sweeps):
        old = b.copy()
        for j in range(len(g)):
            r = g[j] - G[j] @ b + G[j, j] * b[j]
            b[j] = np.sign(r) * max(abs(r) - lam, 0.0) / G[j, j]
        if np.max(np.abs(b - old)) < tol:
            break
    return b


def conic_grid(G, g, mu, omega, lam=1.0, step=1e-3):
    """Best value of ``|b| + lam t`` on a grid over ``[-2, 2] x [0, 4]`` for scalar data.

    For each grid ``b`` the smallest feasible grid ``t`` is taken, which is
    the same as scanning the full 2-dim grid.
    """
    b = np.arange(-2.0, 2.0 + step / 2, step)
    t_need = np.maximum(np.abs(b), (np.abs(g - G * b) - omega) / mu)
    t = np.ceil(np.maximum(t_need, 0.0) / step - 1e-9) * step
    f = np.where(t <= 4.0, np.abs(b) + lam * t, np.inf)
    return float(f.min())
