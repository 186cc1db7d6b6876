"""Covariance models and spectral utilities.

``CovarianceSpec`` wraps a dense symmetric PSD matrix and lazily caches its
eigendecomposition and symmetric square root.  The constructors below build
the column covariance ``A`` (AR(1), Star-Block) and the row covariance ``B``
(AR(1), random sparse precision) used in the simulations.
"""

import itertools
import math
import threading
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from eivlasso.rng import generator

SYM_RTOL = 1e-12
PSD_RTOL = 1e-10
SQRT_NEG_RTOL = 1e-8


@dataclass(frozen=True, eq=False)
class CovarianceSpec:
    """Symmetric positive-semidefinite covariance matrix.

    The matrix is copied, symmetrised and made read-only on construction.
    Eigenvalues are stored in nonincreasing order.
    """

    matrix: np.ndarray
    name: str = "custom"
    _cache: dict = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def __post_init__(self):
        M = np.array(self.matrix, dtype=float, copy=True)
        if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 1:
            raise ValueError(f"covariance must be a nonempty square matrix, got {M.shape}")
        if not np.all(np.isfinite(M)):
            raise ValueError("covariance has non-finite entries")
        scale = max(np.max(np.abs(M)), 1e-300)
        if np.max(np.abs(M - M.T)) > SYM_RTOL * scale:
            raise ValueError("covariance is not symmetric")
        M = 0.5 * (M + M.T)
        M.setflags(write=False)
        object.__setattr__(self, "matrix", M)

    @property
    def dim(self):
        return self.matrix.shape[0]

    def _eigh(self):
        with self._lock:
            if "eig" not in self._cache:
                w, V = scipy.linalg.eigh(self.matrix, driver="evd")
                w, V = w[::-1].copy(), V[:, ::-1].copy()
                top = max(abs(w[0]), abs(w[-1]))
                if w[-1] < -PSD_RTOL * max(top, 1e-300) and top > 0:
                    raise ValueError(
                        f"covariance is not PSD: smallest eigenvalue {w[-1]:.3e}"
                    )
                w.setflags(write=False)
                V.setflags(write=False)
                self._cache["eig"] = (w, V)
            return self._cache["eig"]

    @property
    def eigenvalues(self):
        return self._eigh()[0]

    @property
    def eigenvectors(self):
        return self._eigh()[1]

    @property
    def lambda_max(self):
        return float(self.eigenvalues[0])

    @property
    def lambda_min(self):
        return float(self.eigenvalues[-1])

    @property
    def op_norm(self):
        return max(self.lambda_max, 0.0)

    @property
    def trace(self):
        return float(np.trace(self.matrix))

    @property
    def fro_norm(self):
        return float(np.linalg.norm(self.matrix, "fro"))

    @property
    def max_diag(self):
        return float(np.max(np.diag(self.matrix)))

    @property
    def is_zero(self):
        return not np.any(self.matrix)

    def sqrt(self):
        """Cached symmetric PSD square root (see :func:`sqrt`)."""
        with self._lock:
            root = self._cache.get("sqrt")
        if root is None:
            root = _sqrt_from_eig(self)
            with self._lock:
                self._cache["sqrt"] = root
        return root

    def scaled(self, c):
        """``c * matrix``; for ``c > 0`` any cached spectrum and root are rescaled, not recomputed."""
        out = CovarianceSpec(c * self.matrix, name=self.name)
        if c > 0:
            with self._lock:
                eig, root = self._cache.get("eig"), self._cache.get("sqrt")
            if eig is not None:
                w = eig[0] * c
                w.setflags(write=False)
                out._cache["eig"] = (w, eig[1])
            if root is not None:
                r = root * np.sqrt(c)
                r.setflags(write=False)
                out._cache["sqrt"] = r
        return out


def _sqrt_from_eig(spec):
    if spec.is_zero:
        root = np.zeros_like(spec.matrix)
        root.setflags(write=False)
        return root
    w, V = spec._eigh()
    if w[-1] < -SQRT_NEG_RTOL * max(w[0], 0.0):
        raise ValueError(f"matrix has eigenvalue {w[-1]:.3e} below the PSD tolerance")
    root = (V * np.sqrt(np.clip(w, 0.0, None))) @ V.T
    root = 0.5 * (root + root.T)
    root.setflags(write=False)
    return root


def sqrt(spec):
    """Symmetric PSD square root with negative eigenvalues clamped to zero."""
    return spec.sqrt()


def identity(dim):
    return CovarianceSpec(np.eye(dim), name="identity")


def zeros(dim):
    return CovarianceSpec(np.zeros((dim, dim)), name="zero")


def ar1(dim, rho):
    """AR(1) covariance with entries ``rho**|i-j|``."""
    if dim < 1:
        raise ValueError("dim must be positive")
    if not abs(rho) < 1:
        raise ValueError(f"AR(1) parameter must satisfy |rho| < 1, got {rho}")
    idx = np.arange(dim)
    lag = np.abs(idx[:, None] - idx[None, :])
    return CovarianceSpec(np.power(float(rho), lag), name=f"ar1({rho})")


def star_block(dim, rho, hub_block, n_blocks=None):
    """Block-diagonal covariance whose blocks are star graphs.

    Each block has one hub (its first coordinate) and ``hub_block - 1``
    leaves.  Hub-leaf entries are ``rho``, leaf-leaf entries ``rho**2`` and
    the diagonal is one.  ``n_blocks`` defaults to ``dim // hub_block``;
    coordinates past the last block are independent unit-variance singletons.
    """
    if hub_block < 2:
        raise ValueError("hub_block must be at least 2 (a hub plus one leaf)")
    if not 0 < rho < 1:
        raise ValueError("Star-Block parameter must lie in (0, 1)")
    if n_blocks is None:
        n_blocks = dim // hub_block
    if n_blocks * hub_block > dim:
        raise ValueError(f"{n_blocks} blocks of size {hub_block} exceed dim={dim}")
    block = np.full((hub_block, hub_block), rho**2)
    block[0, :] = rho
    block[:, 0] = rho
    np.fill_diagonal(block, 1.0)
    S = np.eye(dim)
    for b in range(n_blocks):
        sl = slice(b * hub_block, (b + 1) * hub_block)
        S[sl, sl] = block
    return CovarianceSpec(S, name=f"star_block({rho},{hub_block}x{n_blocks})")


def random_precision(dim, c_diag=1.0, w_min=0.1, w_max=0.3, seed=0):
    """Inverse of a random Erdos-Renyi precision matrix.

    Starts from ``c_diag * I`` and applies ``ceil(dim * log(dim))`` edge
    updates (capped at the number of distinct pairs).  Each edge is drawn
    without replacement; its weight ``w ~ U[w_min, w_max]`` is subtracted
    from the two off-diagonal entries and added to the two diagonal entries,
    i.e. a weighted graph Laplacian is added, so the precision stays PD.
    """
    if not 0 < w_min < w_max:
        raise ValueError("need 0 < w_min < w_max")
    if c_diag <= 0:
        raise ValueError("c_diag must be positive")
    Pi = c_diag * np.eye(dim)
    n_pairs = dim * (dim - 1) // 2
    n_edges = min(math.ceil(dim * math.log(dim)) if dim > 1 else 0, n_pairs)
    if n_edges:
        rng = generator(seed, "random_precision")
        flat = rng.choice(n_pairs, size=n_edges, replace=False)
        iu, ju = np.triu_indices(dim, k=1)
        i, j = iu[flat], ju[flat]
        w = rng.uniform(w_min, w_max, size=n_edges)
        np.subtract.at(Pi, (i, j), w)
        np.subtract.at(Pi, (j, i), w)
        np.add.at(Pi, (i, i), w)
        np.add.at(Pi, (j, j), w)
    assert np.linalg.eigvalsh(Pi)[0] > 0, "precision lost positive definiteness"
    B = np.linalg.inv(Pi)
    return CovarianceSpec(0.5 * (B + B.T), name=f"random_precision(seed={seed})")


def scale_to_trace(B, n, tau_B_target):
    """Rescale ``B`` so that ``trace(B') / n == tau_B_target``."""
    tr = B.trace
    if tr <= 0:
        raise ValueError("cannot rescale a covariance with nonpositive trace")
    return B.scaled(tau_B_target * n / tr)


def _top_eig(M):
    return float(np.linalg.eigvalsh(M)[-1])


def _truncated_power(M, d, start, iters=100):
    x = start / np.linalg.norm(start)
    support = None
    for _ in range(iters):
        y = M @ x
        keep = np.argpartition(np.abs(y), -d)[-d:]
        keep.sort()
        if support is not None and np.array_equal(keep, support):
            break
        support = keep
        z = np.zeros_like(y)
        z[keep] = y[keep]
        nz = np.linalg.norm(z)
        if nz == 0:
            break
        x = z / nz
    return support


def sparse_eigenvalue(spec, d, which="max", budget=20000, seed=0):
    """Largest or smallest ``d``-sparse eigenvalue ``t^T A t`` over unit ``t``.

    Returns ``(value, exact)``.  When ``C(dim, d) <= budget`` every support is
    enumerated and the result is exact.  Otherwise the value is the best
    found over truncated-power supports, greedy supports and ``budget``
    random supports, so it is a lower bound for ``max`` and an upper bound
    for ``min`` (``exact=False``).
    """
    A = spec.matrix if isinstance(spec, CovarianceSpec) else np.asarray(spec, float)
    p = A.shape[0]
    if not 1 <= d <= p:
        raise ValueError(f"sparsity d={d} outside [1, {p}]")
    if which not in ("max", "min"):
        raise ValueError("which must be 'max' or 'min'")
    sign = 1.0 if which == "max" else -1.0
    if d == p:
        w = np.linalg.eigvalsh(A)
        return (float(w[-1]) if which == "max" else float(w[0])), True
    if d == 1:
        diag = np.diag(A)
        return (float(diag.max()) if which == "max" else float(diag.min())), True

    def score(J):
        return sign * _top_eig(sign * A[np.ix_(J, J)])

    if math.comb(p, d) <= budget:
        best = max(score(list(J)) for J in itertools.combinations(range(p), d))
        return sign * best, True

    M = sign * A
    if not np.any(M - np.diag(np.diag(M))):
        # diagonal: the extremal quadratic form sits on a single coordinate
        return sign * float(np.max(np.diag(M))), True
    shift = max(0.0, -float(np.linalg.eigvalsh(M)[0]))
    Mp = M + shift * np.eye(p)
    candidates = []
    order = np.argsort(-np.diag(M))
    eye = np.eye(p)
    for i in order[: min(p, 8)]:
        candidates.append(_truncated_power(Mp, d, eye[i] + 1e-3))
    w, V = np.linalg.eigh(Mp)
    candidates.append(_truncated_power(Mp, d, V[:, -1]))
    candidates.append(_greedy_support(M, d, int(order[0])))
    rng = generator(seed, "sparse_eigenvalue")
    for _ in range(int(min(budget, 500))):
        candidates.append(np.sort(rng.choice(p, size=d, replace=False)))
    best = max(_top_eig(M[np.ix_(J, J)]) for J in candidates)
    return sign * best, False


def _greedy_support(M, d, first):
    """Forward selection adding the coordinate with the largest first-order
    gain ``(M x)_k^2`` for the current top eigenvector ``x``."""
    p = M.shape[0]
    J = [first]
    while len(J) < d:
        w, V = np.linalg.eigh(M[np.ix_(J, J)])
        x = np.zeros(p)
        x[J] = V[:, -1]
        gain = (M @ x) ** 2
        gain[J] = -np.inf
        J.append(int(np.argmax(gain)))
    return np.array(sorted(J))


def save_csv(spec, path):
    """Dense row-major CSV with a ``# dim=<k>`` header line."""
    M = spec.matrix if isinstance(spec, CovarianceSpec) else np.asarray(spec)
    np.savetxt(path, M, delimiter=",", header=f"dim={M.shape[0]}", comments="# ",
               fmt="%.17g")


def load_csv(path, name=None):
    with open(path) as fh:
        first = fh.readline().strip()
    if not first.startswith("#") or "dim=" not in first:
        raise ValueError(f"{path}: missing '# dim=<k>' header")
    dim = int(first.split("dim=")[1].split()[0])
    M = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    if M.shape != (dim, dim):
        raise ValueError(f"{path}: header says dim={dim} but matrix is {M.shape}")
    return CovarianceSpec(M, name=name or str(path))
