"""Interaction matrix of the point-scatterer family and its coercivity scan.

Xi couples the scatterer charges: strengths plus the finite diagonal
regularization on the diagonal, minus the background Green function off it.
Positivity of (1/N) Xi at a given lambda certifies that the quadratic form of
the N-scatterer operator is bounded below by -lambda^2 there.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist

from .kernels import (QuadratureSpec, DEFAULT_QUAD, free_green,
                      diagonal_regularization, _harmonic_green_batch,
                      _harmonic_diag_batch)
from .sampling import PointCloud, sample_points
from .scenario import Background, Scenario, spectral_bottom

__all__ = [
    "XiMatrix", "assemble_xi", "min_eigenvalue_scaled",
    "offdiag_hs_norm_scaled", "coercivity_onset", "dump_xi_csv",
]

DENSE_LIMIT = 4096
_PAIR_CHUNK = 65536


@dataclass(frozen=True)
class XiMatrix:
    N: int
    s: float
    s0: float
    entries: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=float)
        if e.shape != (self.N, self.N):
            raise ValueError(f"entries must be {self.N}x{self.N}")
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)


def assemble_xi(cloud: PointCloud, bg: Background, s: float, s0: float,
                q: QuadratureSpec = DEFAULT_QUAD) -> XiMatrix:
    """Build Xi from a cloud: symmetric by construction, each pair once."""
    bottom = spectral_bottom(bg, cloud.d)
    if s <= -bottom or s0 <= -bottom:
        raise ValueError("s and s0 must lie above -spectral_bottom")
    N, d = cloud.N, cloud.d
    if N > DENSE_LIMIT:
        raise ValueError(f"dense Xi assembly capped at N = {DENSE_LIMIT}")
    X = cloud.positions
    entries = np.zeros((N, N))
    if N > 1:
        iu = np.triu_indices(N, 1)
        if bg.kind == "Free":
            g = free_green(d, math.sqrt(s), pdist(X))
        else:
            g = np.empty(len(iu[0]))
            for a in range(0, len(g), _PAIR_CHUNK):
                b = min(a + _PAIR_CHUNK, len(g))
                g[a:b] = _harmonic_green_batch(d, bg.omega, s,
                                               X[iu[0][a:b]], X[iu[1][a:b]], q)
        entries[iu] = -g
        entries += entries.T
    if bg.kind == "Free":
        reg = diagonal_regularization(bg, d, s, s0, X[0], q)
        diag = cloud.strengths + reg
    else:
        diag = cloud.strengths + _harmonic_diag_batch(d, bg.omega, s, s0, X, q)
    entries[np.diag_indices(N)] = diag
    return XiMatrix(N=N, s=s, s0=s0, entries=entries)


def min_eigenvalue_scaled(xi: XiMatrix) -> float:
    """Smallest eigenvalue of (1/N) Xi (dense symmetric solve)."""
    return float(np.linalg.eigvalsh(xi.entries)[0]) / xi.N


def offdiag_hs_norm_scaled(xi: XiMatrix) -> float:
    """(1/N) Hilbert-Schmidt norm of the off-diagonal Green block."""
    off = xi.entries - np.diag(np.diag(xi.entries))
    return float(np.linalg.norm(off)) / xi.N


def weyl_lower_bound(xi: XiMatrix) -> float:
    """min diag / N - scaled HS norm; always <= min_eigenvalue_scaled."""
    return float(np.min(np.diag(xi.entries))) / xi.N - offdiag_hs_norm_scaled(xi)


def coercivity_onset(scn: Scenario, Ns, lambda_max: float = 64.0,
                     threshold: float = 0.5, hs_factor: float = 0.6,
                     seed: int = 0, q: QuadratureSpec = DEFAULT_QUAD):
    """Scan the doubling grid lambda = 1, 2, 4, ... for uniform coercivity.

    Returns (lambda_star, rows) where lambda_star is the first grid value
    such that, for every N in Ns, min_eigenvalue_scaled >= threshold at both
    lambda_star and 2*lambda_star and the off-diagonal HS norm contracts by
    at least hs_factor under the doubling. None if the scan reaches
    lambda_max without success. rows collects (N, lambda, min_eig,
    hs_offdiag) for everything evaluated.
    """
    s0 = scn.lambda0 ** 2
    clouds = {N: sample_points(scn, N, seed) for N in Ns}
    cache = {}

    def stats(N, lam):
        if (N, lam) not in cache:
            xi = assemble_xi(clouds[N], scn.background, lam * lam, s0, q)
            cache[(N, lam)] = (min_eigenvalue_scaled(xi),
                               offdiag_hs_norm_scaled(xi))
        return cache[(N, lam)]

    lam = 1.0
    lambda_star = None
    while lam <= lambda_max:
        ok = all(stats(N, lam)[0] >= threshold
                 and stats(N, 2.0 * lam)[0] >= threshold
                 and stats(N, 2.0 * lam)[1] <= hs_factor * stats(N, lam)[1]
                 for N in Ns)
        if ok:
            lambda_star = lam
            break
        lam *= 2.0
    rows = [(N, l, me, hs) for (N, l), (me, hs) in sorted(cache.items())]
    return lambda_star, rows


def dump_xi_csv(xi: XiMatrix, path):
    """Debug dump of entries; deliberately capped at N = 64."""
    if xi.N > 64:
        raise ValueError("matrix dump limited to N <= 64")
    with open(path, "w") as fh:
        fh.write(",".join(f"c{j}" for j in range(xi.N)) + "\n")
        for row in xi.entries:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
        fh.write(f"# rows={xi.N}\n")
