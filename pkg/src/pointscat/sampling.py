"""Scatterer cloud generation and empirical-measure diagnostics.

Clouds must sit inside supp U, keep mutual distances >= ell * N^(-1/d), and
carry strengths alpha_j = N * a(x_j). Random clouds come from density-weighted
dart throwing on a counter-based generator (one stream per cloud, so results
do not depend on thread count); lattice clouds are a deterministic alternative
for ball/box supports.
"""
from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.spatial.distance import pdist

from .scenario import (Scenario, DensitySpec, density_eval, strength_eval,
                       validate)

__all__ = [
    "PointCloud", "Monomials", "Gaussians",
    "sample_points", "lattice_points", "pairwise_min_distance",
    "weak_convergence_gap", "save_cloud", "load_cloud",
]

_CANDIDATE_BATCH = 512


@dataclass(frozen=True)
class PointCloud:
    """Immutable scatterer configuration with per-point coupling strengths."""
    d: int
    N: int
    positions: np.ndarray
    strengths: np.ndarray
    min_pair_distance: float
    seed: int

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        al = np.asarray(self.strengths, dtype=float)
        if pos.shape != (self.N, self.d):
            raise ValueError(f"positions must have shape ({self.N}, {self.d})")
        if al.shape != (self.N,):
            raise ValueError(f"strengths must have shape ({self.N},)")
        pos.setflags(write=False)
        al.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "strengths", al)


def pairwise_min_distance(positions: np.ndarray) -> float:
    """Minimum over i < j of |x_i - x_j|; +inf for a single point."""
    if len(positions) < 2:
        return math.inf
    return float(np.min(pdist(positions)))


def _require_valid(scn: Scenario):
    rep = validate(scn)
    if not rep.ok:
        raise ValueError("scenario fails validation: "
                         + "; ".join(m for _, m in rep.violations))


def sample_points(scn: Scenario, N: int, seed: int) -> PointCloud:
    """Draw N points from U by dart throwing with a hard minimal distance.

    Candidates are drawn uniformly from the support bounding box, thinned by
    rejection against U/max(U), and accepted only when at least
    ell * N^(-1/d) away from every point kept so far. The candidate budget is
    1000*N draws; running out signals an infeasible ell/N combination.
    """
    if N < 1:
        raise ValueError("N must be positive")
    _require_valid(scn)
    d = scn.d
    lo, hi = scn.density.support_bbox(d)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    umax = scn.density.max_value(d)
    r_min = scn.ell * N ** (-1.0 / d)
    rng = np.random.Generator(np.random.Philox([scn.seed, seed, N, d]))

    pts = np.empty((N, d))
    n_kept = 0
    budget = 1000 * N
    drawn = 0
    r2 = r_min * r_min
    while n_kept < N:
        m = min(_CANDIDATE_BATCH, budget - drawn)
        if m <= 0:
            raise RuntimeError(
                f"dart throwing exhausted {budget} candidates at N={N}, "
                f"ell={scn.ell}; configuration infeasible")
        cand = lo + (hi - lo) * rng.random((m, d))
        drawn += m
        keep = rng.random(m) * umax < density_eval(scn.density, cand)
        for c in cand[keep]:
            if n_kept and np.min(np.sum((pts[:n_kept] - c) ** 2, axis=1)) < r2:
                continue
            pts[n_kept] = c
            n_kept += 1
            if n_kept == N:
                break

    strengths = N * strength_eval(scn.strength, pts)
    return PointCloud(d=d, N=N, positions=pts,
                      strengths=np.atleast_1d(strengths),
                      min_pair_distance=pairwise_min_distance(pts), seed=seed)


def lattice_points(scn: Scenario, N: int) -> PointCloud:
    """Deterministic cloud on a cell-centered lattice inside supp U.

    The per-axis resolution grows until the lattice holds at least N points
    of positive density; the excess is trimmed by distance from the origin
    (lexicographic tie-break) so the result is reproducible. Ball and box
    supports only.
    """
    if N < 1:
        raise ValueError("N must be positive")
    if scn.density.shape not in ("UniformBall", "UniformBox"):
        raise ValueError("lattice_points supports UniformBall and UniformBox only")
    _require_valid(scn)
    d = scn.d
    lo, hi = scn.density.support_bbox(d)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    r_min = scn.ell * N ** (-1.0 / d)

    m = max(1, math.ceil(N ** (1.0 / d)))
    while True:
        axes = [lo[k] + (hi[k] - lo[k]) * (np.arange(m) + 0.5) / m
                for k in range(d)]
        grids = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=1)
        pts = pts[density_eval(scn.density, pts) > 0]
        if len(pts) >= N:
            break
        m += 1
        if m > 4096:
            raise RuntimeError("lattice resolution runaway; support too thin")
    spacing = float(np.min((hi - lo) / m))
    if spacing < r_min:
        raise RuntimeError(
            f"lattice spacing {spacing:.4g} below required minimal distance "
            f"{r_min:.4g}; cannot host N={N} points at ell={scn.ell}")
    if len(pts) > N:
        # closest-to-origin first keeps the trimmed cloud compact and unique
        order = np.lexsort(tuple(pts[:, k] for k in range(d - 1, -1, -1))
                           + (np.sum(pts * pts, axis=1),))
        pts = pts[order[:N]]

    strengths = N * strength_eval(scn.strength, pts)
    return PointCloud(d=d, N=N, positions=pts,
                      strengths=np.atleast_1d(strengths),
                      min_pair_distance=pairwise_min_distance(pts), seed=0)


# ---------------------------------------------------------------------------
# weak convergence of the empirical measure against U dx
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Monomials:
    max_degree: int


@dataclass(frozen=True)
class Gaussians:
    centers: tuple  # of coordinate tuples
    widths: tuple


def _monomial_exponents(d: int, max_degree: int):
    out = []
    for total in range(max_degree + 1):
        for exps in itertools.product(range(total + 1), repeat=d):
            if sum(exps) == total:
                out.append(exps)
    return out


def _monomial_id(exps) -> str:
    parts = [f"x{k + 1}" + (f"^{e}" if e > 1 else "")
             for k, e in enumerate(exps) if e > 0]
    return "*".join(parts) if parts else "1"


def _density_quad(spec: DensitySpec, d: int, f) -> float:
    """integral of f(x) U(x) dx by adaptive quadrature, boundary-conforming.

    Balls are integrated in polar/spherical coordinates so the integrand stays
    smooth up to the boundary; boxes and cells integrate f directly.
    """
    opts = {"epsabs": 1e-10, "epsrel": 1e-10}
    if spec.shape == "UniformBall":
        R = spec.radius
        v = 1.0 / spec.support_volume(d)
        if d == 2:
            val, _ = integrate.nquad(
                lambda r, th: r * f(np.array([r * math.cos(th), r * math.sin(th)])),
                [(0.0, R), (0.0, 2.0 * math.pi)], opts=opts)
        else:
            val, _ = integrate.nquad(
                lambda r, th, ph: r * r * math.sin(ph) * f(np.array([
                    r * math.sin(ph) * math.cos(th),
                    r * math.sin(ph) * math.sin(th),
                    r * math.cos(ph)])),
                [(0.0, R), (0.0, 2.0 * math.pi), (0.0, math.pi)], opts=opts)
        return v * val
    if spec.shape == "UniformBox":
        v = 1.0 / spec.support_volume(d)
        ranges = [(-w, w) for w in spec.halfwidths]
        val, _ = integrate.nquad(lambda *xs: f(np.array(xs)), ranges, opts=opts)
        return v * val
    total = 0.0
    for cell, value in zip(spec.cells, spec.values):
        ranges = [(float(a), float(b)) for a, b in cell]
        val, _ = integrate.nquad(lambda *xs: f(np.array(xs)), ranges, opts=opts)
        total += value * val
    return total


@functools.lru_cache(maxsize=512)
def _monomial_integral(spec: DensitySpec, d: int, exps) -> float:
    e = np.asarray(exps, dtype=float)
    return _density_quad(spec, d, lambda x: float(np.prod(x ** e)))


@functools.lru_cache(maxsize=512)
def _gaussian_integral(spec: DensitySpec, d: int, center, width: float) -> float:
    c = np.asarray(center, dtype=float)
    return _density_quad(
        spec, d,
        lambda x: math.exp(-float(np.sum((x - c) ** 2)) / (2.0 * width * width)))


def weak_convergence_gap(cloud: PointCloud, scn: Scenario, test_family):
    """Per test function, |empirical average - integral of f U dx|.

    Returns a list of (test_fn_id, gap) pairs; the continuum side is cached
    per (density, function) since it does not depend on the cloud.
    """
    X = cloud.positions
    out = []
    if isinstance(test_family, Monomials):
        for exps in _monomial_exponents(cloud.d, test_family.max_degree):
            emp = float(np.mean(np.prod(X ** np.asarray(exps, dtype=float), axis=1)))
            cont = _monomial_integral(scn.density, cloud.d, tuple(exps))
            out.append((_monomial_id(exps), abs(emp - cont)))
        return out
    if isinstance(test_family, Gaussians):
        if len(test_family.centers) != len(test_family.widths):
            raise ValueError("centers and widths must pair up")
        for i, (c, w) in enumerate(zip(test_family.centers, test_family.widths)):
            cv = np.asarray(c, dtype=float)
            emp = float(np.mean(np.exp(-np.sum((X - cv) ** 2, axis=1) / (2.0 * w * w))))
            cont = _gaussian_integral(scn.density, cloud.d, tuple(float(v) for v in c),
                                      float(w))
            out.append((f"gauss{i}", abs(emp - cont)))
        return out
    raise TypeError(f"unknown test family {type(test_family).__name__}")


# ---------------------------------------------------------------------------
# CSV round trip: header j,x1,...,xd,alpha; footer records seed and row count
# ---------------------------------------------------------------------------

def save_cloud(cloud: PointCloud, path):
    cols = ",".join(f"x{k + 1}" for k in range(cloud.d))
    with open(path, "w") as fh:
        fh.write(f"j,{cols},alpha\n")
        for j in range(cloud.N):
            coords = ",".join(f"{v:.17g}" for v in cloud.positions[j])
            fh.write(f"{j},{coords},{cloud.strengths[j]:.17g}\n")
        fh.write(f"# seed={cloud.seed}\n")
        fh.write(f"# rows={cloud.N}\n")


def load_cloud(path) -> PointCloud:
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    header = lines[0].split(",")
    if header[0] != "j" or header[-1] != "alpha":
        raise ValueError(f"unrecognized cloud CSV header: {lines[0]!r}")
    d = len(header) - 2
    seed = 0
    rows = []
    declared = None
    for ln in lines[1:]:
        if ln.startswith("#"):
            key, _, val = ln[1:].strip().partition("=")
            if key.strip() == "seed":
                seed = int(val)
            elif key.strip() == "rows":
                declared = int(val)
            continue
        rows.append([float(v) for v in ln.split(",")[1:]])
    data = np.asarray(rows, dtype=float)
    if declared is not None and declared != len(data):
        raise ValueError(f"row count footer says {declared}, found {len(data)}")
    pts = data[:, :d]
    return PointCloud(d=d, N=len(data), positions=pts, strengths=data[:, d],
                      min_pair_distance=pairwise_min_distance(pts), seed=seed)
