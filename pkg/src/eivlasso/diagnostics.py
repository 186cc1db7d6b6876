"""Empirical probes of restricted-eigenvalue type conditions.

These are falsifiers, not certifiers.  Checking a Lower-RE inequality over all
of R^m is a nonconvex global problem, so a clean report only means no
violation was found among the directions tried.  A reported violation is
always genuine: its margin is recomputed from the returned witness.

The directions tried are coordinate vectors, every 2-sparse direction (solved
exactly per sign pattern), eigenvectors of the matrix, random unit vectors of
mixed sparsity, and a local sign-pattern refinement of the worst few.
"""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from eivlasso.rng import generator

PAIR_LIMIT = 256
BATCH = 4096


@dataclass
class ReProbeResult:
    condition: str
    parameters: dict
    worst_margin: float
    witness: np.ndarray
    exact: bool
    samples_used: int
    details: dict = field(default_factory=dict)

    @property
    def violated(self):
        # margins within rounding of zero (e.g. equality on eigenvectors) are not violations
        return self.worst_margin < -self.details.get("atol", 0.0)

    def to_dict(self):
        return {
            "condition": self.condition,
            "parameters": self.parameters,
            "worst_margin": self.worst_margin,
            "violated": self.violated,
            "exact": self.exact,
            "samples_used": self.samples_used,
            "witness_support": np.flatnonzero(self.witness).tolist(),
        }


def _sym(G):
    G = np.asarray(G, dtype=float)
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise ValueError("Gamma must be square")
    return 0.5 * (G + G.T)


def re_margin(Gamma, theta, curvature, tau, upper=False):
    """Margin of one direction, normalised to ``||theta||_2 = 1``.

    Lower: ``t'Gt - alpha ||t||^2 + tau ||t||_1^2``.
    Upper: ``alpha ||t||^2 + tau ||t||_1^2 - t'Gt``.
    """
    theta = np.asarray(theta, dtype=float)
    theta = theta / np.linalg.norm(theta)
    quad = float(theta @ (_sym(Gamma) @ theta))
    l1sq = float(np.abs(theta).sum()) ** 2
    if upper:
        return curvature + tau * l1sq - quad
    return quad - curvature + tau * l1sq


def _batch_margins(G, thetas, curvature, tau, sign):
    """Row-wise margins for unit rows; ``sign=+1`` lower, ``-1`` upper."""
    quad = np.einsum("ij,ij->i", thetas @ G, thetas)
    l1sq = np.abs(thetas).sum(axis=1) ** 2
    return sign * (quad - curvature) + tau * l1sq


def _pair_candidates(G, curvature, tau, sign):
    """Exact minimum over every 2-sparse direction.

    Within one orthant the margin is the quadratic form of
    ``sign*(G_J - alpha I) + tau s s'`` for the orthant's sign vector ``s``;
    its smallest eigenvector is the orthant minimiser when it lies in that
    orthant, otherwise the minimum sits on a coordinate axis (covered
    separately).
    """
    m = G.shape[0]
    i, j = np.triu_indices(m, k=1)
    best_val, best_vec = np.inf, None
    for s in (1.0, -1.0):
        a = sign * (G[i, i] - curvature) + tau
        c = sign * (G[j, j] - curvature) + tau
        b = sign * G[i, j] + tau * s
        mid, rad = 0.5 * (a + c), np.hypot(0.5 * (a - c), b)
        lam = mid - rad
        # eigenvector of [[a, b], [b, c]] for lam
        v1 = np.where(np.abs(b) > 0, b, np.where(a <= c, 1.0, 0.0))
        v2 = np.where(np.abs(b) > 0, lam - a, np.where(a <= c, 0.0, 1.0))
        ok = (v1 * v2 * s) > 0
        if not ok.any():
            continue
        k = int(np.argmin(np.where(ok, lam, np.inf)))
        if lam[k] < best_val:
            v = np.zeros(m)
            v[i[k]], v[j[k]] = v1[k], v2[k]
            best_val, best_vec = float(lam[k]), v / np.linalg.norm(v)
    return best_val, best_vec


def _random_directions(rng, m, count):
    """Unit vectors whose sparsity is log-uniform on ``1..m``."""
    out = np.zeros((count, m))
    sizes = np.clip(np.round(np.exp(rng.uniform(0, math.log(m), size=count))), 1, m)
    sizes = sizes.astype(int)
    for r, k in enumerate(sizes):
        J = rng.choice(m, size=k, replace=False)
        out[r, J] = rng.standard_normal(k)
    norms = np.linalg.norm(out, axis=1)
    norms[norms == 0] = 1.0
    return out / norms[:, None]


def _refine(G, theta, curvature, tau, sign, rounds=5):
    """Fix support and signs of ``theta``, take the smallest eigenvector of the
    orthant quadratic form, and repeat while the margin improves."""
    best = theta
    best_val = _batch_margins(G, theta[None, :], curvature, tau, sign)[0]
    for _ in range(rounds):
        J = np.flatnonzero(np.abs(best) > 1e-12 * np.abs(best).max())
        s = np.sign(best[J])
        M = sign * (G[np.ix_(J, J)] - curvature * np.eye(J.size)) + tau * np.outer(s, s)
        w, V = np.linalg.eigh(M)
        v = V[:, 0] * (1.0 if V[:, 0] @ s >= 0 else -1.0)
        cand = np.zeros_like(best)
        cand[J] = v
        val = _batch_margins(G, cand[None, :], curvature, tau, sign)[0]
        if val < best_val - 1e-15:
            best, best_val = cand, val
        else:
            break
    return best


def _falsify(Gamma, curvature, tau, trials, seed, upper):
    if curvature <= 0 or tau < 0:
        raise ValueError("need positive curvature and nonnegative tau")
    G = _sym(Gamma)
    m = G.shape[0]
    sign = -1.0 if upper else 1.0
    rng = generator(seed, "falsify_upper" if upper else "falsify_lower")

    pool = [np.eye(m)]
    w, V = np.linalg.eigh(G)
    pool.append(V.T)
    exact_pairs = m <= PAIR_LIMIT and m >= 2
    if exact_pairs:
        _, vec = _pair_candidates(G, curvature, tau, sign)
        if vec is not None:
            pool.append(vec[None, :])
    cands = np.vstack(pool)
    margins = _batch_margins(G, cands, curvature, tau, sign)
    used = cands.shape[0]

    done = 0
    worst_rows = [cands[np.argsort(margins)[:5]]]
    worst_vals = [np.sort(margins)[:5]]
    while done < trials:
        k = min(BATCH, trials - done)
        T = _random_directions(rng, m, k)
        mg = _batch_margins(G, T, curvature, tau, sign)
        order = np.argsort(mg)[:5]
        worst_rows.append(T[order])
        worst_vals.append(mg[order])
        done += k
    used += trials
    rows = np.vstack(worst_rows)
    vals = np.concatenate(worst_vals)
    order = np.argsort(vals)[:5]
    refined = [_refine(G, rows[r], curvature, tau, sign) for r in order]
    rows = np.vstack([rows[order]] + [r[None, :] for r in refined])
    witness = rows[int(np.argmin(_batch_margins(G, rows, curvature, tau, sign)))]

    margin = re_margin(G, witness, curvature, tau, upper=upper)
    # exact when the candidate set provably contains the minimiser
    exact = tau == 0 or m <= 2
    name = "upper_re" if upper else "lower_re"
    key = "smoothness" if upper else "alpha"
    return ReProbeResult(
        condition=name, parameters={key: curvature, "tau": tau},
        worst_margin=margin, witness=witness / np.linalg.norm(witness),
        exact=bool(exact), samples_used=int(used),
        details={"pairs_enumerated": exact_pairs,
                 "atol": 1e-12 * (curvature + tau + float(np.max(np.abs(w))))},
    )


def falsify_lower_re(Gamma, alpha, tau, trials=10000, seed=0):
    """Search for ``theta`` with ``theta' G theta < alpha ||theta||^2 - tau ||theta||_1^2``.

    Returns a :class:`ReProbeResult`; ``worst_margin < 0`` certifies a
    violation, ``exact`` is set only when the search is provably complete
    (``tau = 0`` where the eigenvectors suffice, or ``m <= 2``).
    """
    return _falsify(Gamma, alpha, tau, trials, seed, upper=False)


def falsify_upper_re(Gamma, smoothness, tau, trials=10000, seed=0):
    """Upper-RE analogue: search for ``theta' G theta > smoothness ||theta||^2 + tau ||theta||_1^2``."""
    return _falsify(Gamma, smoothness, tau, trials, seed, upper=True)


def sample_cone(rng, p, s, k0, count):
    """Random members of ``W_J(k0)`` with random ``|J| = s``.

    ``v_J`` is uniform on the unit sphere; ``v_{J^c}`` gets l1 mass
    ``theta k0 ||v_J||_1`` with ``theta ~ U[0, 1]`` spread over a random
    number of random coordinates.  Returns ``(vectors, supports)``.
    """
    V = np.zeros((count, p))
    Js = np.zeros((count, s), dtype=int)
    for r in range(count):
        J = rng.choice(p, size=s, replace=False)
        vJ = rng.standard_normal(s)
        vJ /= np.linalg.norm(vJ)
        V[r, J] = vJ
        Js[r] = J
        rest = np.setdiff1d(np.arange(p), J, assume_unique=True)
        if k0 > 0 and rest.size:
            k = int(rng.integers(1, rest.size + 1))
            pick = rng.choice(rest, size=k, replace=False)
            wts = rng.exponential(size=k)
            mass = rng.uniform() * k0 * np.abs(vJ).sum()
            V[r, pick] = mass * wts / wts.sum() * rng.choice([-1.0, 1.0], size=k)
    return V, Js


def _cone_l1_descent(A, J, vJ, k0, iters=200):
    """Minimise ``||A v||_2`` over ``v_{J^c}`` in the l1 ball of radius
    ``k0 ||v_J||_1`` with ``v_J`` fixed (projected gradient)."""
    from eivlasso.gd import project_l1_ball

    p = A.shape[1]
    rest = np.setdiff1d(np.arange(p), J, assume_unique=True)
    R = k0 * np.abs(vJ).sum()
    base = A[:, J] @ vJ
    Ar = A[:, rest]
    L = max(np.linalg.norm(Ar, 2) ** 2, 1e-12)
    w = np.zeros(rest.size)
    for _ in range(iters):
        grad = Ar.T @ (base + Ar @ w)
        w = project_l1_ball(w - grad / L, R) if R > 0 else w * 0
    v = np.zeros(p)
    v[J] = vJ
    v[rest] = w
    return v


def estimate_re_constant(design, s0, k0, samples=2000, seed=0, budget=5000):
    """Upper estimate of ``1/K(s0, k0)``, the RE minimum of ``||A v|| / ||v_J||``.

    Supports of size ``s0`` suffice because enlarging ``J`` only enlarges
    the cone.  Each support contributes ``sigma_min(A_J)`` (cone vectors
    supported on ``J``), sampled cone vectors and a projected-gradient
    refinement of its worst sample.  ``exact`` holds when every support is
    enumerated and the cone is just the supported vectors (``k0 = 0``) or
    ``s0 = p``.
    """
    A = np.asarray(design, dtype=float)
    if A.ndim != 2:
        raise ValueError("design must be a matrix")
    p = A.shape[1]
    if not 1 <= s0 <= p:
        raise ValueError(f"s0={s0} outside [1, {p}]")
    if k0 < 0:
        raise ValueError("k0 must be nonnegative")
    if not np.any(A):
        return 0.0, True
    rng = generator(seed, "estimate_re_constant")
    enumerate_all = math.comb(p, s0) <= budget
    if enumerate_all:
        supports = [np.array(J) for J in itertools.combinations(range(p), s0)]
    else:
        supports = [np.sort(rng.choice(p, size=s0, replace=False)) for _ in range(budget)]
        norms = np.linalg.norm(A, axis=0)
        supports.append(np.sort(np.argsort(norms)[:s0]))

    best = np.inf
    for J in supports:
        sv = np.linalg.svd(A[:, J], compute_uv=False)
        best = min(best, float(sv[-1]))
    if k0 > 0 and s0 < p:
        V, Js = sample_cone(rng, p, s0, k0, samples)
        ratios = np.linalg.norm(V @ A.T, axis=1) / np.linalg.norm(
            np.take_along_axis(V, Js, axis=1), axis=1)
        best = min(best, float(ratios.min()))
        for r in np.argsort(ratios)[:3]:
            v = _cone_l1_descent(A, Js[r], V[r, Js[r]], k0)
            best = min(best, float(np.linalg.norm(A @ v) / np.linalg.norm(v[Js[r]])))
    exact = enumerate_all and (k0 == 0 or s0 == p)
    return best, bool(exact)


def estimate_lq_sensitivity(Psi, d0, k0, q=2.0, samples=2000, seed=0):
    """Sampled upper bound on ``min ||Psi D||_inf / ||D||_q`` over the cone.

    The sample set depends only on ``seed``, not on ``q``, so estimates at
    different ``q`` are computed on identical directions.
    """
    P = np.asarray(Psi, dtype=float)
    if not 1 <= q <= 2:
        raise ValueError("q must lie in [1, 2]")
    p = P.shape[1]
    if not 1 <= d0 <= p:
        raise ValueError(f"d0={d0} outside [1, {p}]")
    if not np.any(P):
        return 0.0
    rng = generator(seed, "estimate_lq_sensitivity")
    V, _ = sample_cone(rng, p, d0, k0, samples)
    V = np.vstack([np.eye(p), V])
    num = np.max(np.abs(V @ P.T), axis=1)
    den = np.linalg.norm(V, ord=q, axis=1)
    return float(np.min(num / den))


def in_cone(x, d0, k0, rtol=1e-12):
    """Membership in ``W(d0, k0)``: the top ``d0`` entries are the best ``J``."""
    a = np.sort(np.abs(np.asarray(x, dtype=float)))[::-1]
    head, tail = a[:d0].sum(), a[d0:].sum()
    return tail <= k0 * head + rtol * max(a.sum(), 1e-300)


def cone_top_norm_check(x, d0, k0, rtol=1e-12):
    """``||x_T0||_2 >= ||x||_2 / sqrt(1 + k0)`` for the top-``d0`` index set ``T0``."""
    x = np.asarray(x, dtype=float)
    if not in_cone(x, d0, k0, rtol):
        raise ValueError("x is not in the cone W(d0, k0)")
    a = np.sort(np.abs(x))[::-1]
    top = np.linalg.norm(a[:d0])
    return bool(top >= np.linalg.norm(x) / math.sqrt(1.0 + k0) * (1 - rtol))
