"""Empirical-measure functionals: Riesz energies and singular pair sums.

The discrete quantities are normalized double sums over distinct pairs; their
continuum counterparts are double integrals against U(x)U(y). For uniform
balls and disks with constant weight the double integral collapses exactly to
one radial integral against the pair-distance density; everything else goes
through seeded Monte-Carlo over 10^7 independent pairs.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad
from scipy.spatial.distance import pdist

from .kernels import (QuadratureSpec, DEFAULT_QUAD, free_green, zeta0,
                      _harmonic_green_batch)
from .sampling import PointCloud
from .scenario import Background, Scenario, density_eval

__all__ = [
    "Riesz", "Zeta0TimesXi", "GreenFull", "riesz_energy", "pair_sum",
    "continuum_pair_integral", "pair_sum_gap",
]

_PAIR_CHUNK = 1 << 16
MC_PAIRS = 10_000_000
CHARGE_BOUND = 10.0


def _pair_distance_density(d: int, r) -> np.ndarray:
    """Density of |X - Y| for X, Y independent uniform on the unit ball/disk.

    d=3: 3r^2 - (9/4)r^3 + (3/16)r^5 on [0, 2]; d=2: the arccos lens-area
    form. Both integrate to one.
    """
    r = np.asarray(r, dtype=float)
    if d == 3:
        w = 3.0 * r**2 - 2.25 * r**3 + (3.0 / 16.0) * r**5
    elif d == 2:
        half = np.clip(r / 2.0, 0.0, 1.0)
        w = (4.0 * r / np.pi) * (np.arccos(half) - half * np.sqrt(1.0 - half**2))
    else:
        raise ValueError(f"d must be 2 or 3, got {d}")
    return np.where((r >= 0) & (r <= 2.0), w, 0.0)


@dataclass(frozen=True)
class Riesz:
    s_exp: float


@dataclass(frozen=True)
class Zeta0TimesXi:
    """zeta0(|x-y|) times a continuous factor xi(x, y); xi_fn=None means 1."""
    xi_fn: Optional[Callable] = None


@dataclass(frozen=True)
class GreenFull:
    bg: Background
    s: float


def _kernel_radial(kernel, d: int):
    """Radial profile k(r) when the kernel depends on |x-y| only, else None."""
    if isinstance(kernel, Riesz):
        if not 0 < kernel.s_exp < d:
            raise ValueError(f"Riesz exponent must lie in (0, {d})")
        return lambda r: np.asarray(r, dtype=float) ** (-kernel.s_exp)
    if isinstance(kernel, Zeta0TimesXi) and kernel.xi_fn is None:
        return lambda r: zeta0(d, r)
    if isinstance(kernel, GreenFull) and kernel.bg.kind == "Free":
        lam = math.sqrt(kernel.s)
        return lambda r: free_green(d, lam, r)
    return None


def _kernel_pairs(kernel, d: int, X: np.ndarray, Y: np.ndarray,
                  q: QuadratureSpec) -> np.ndarray:
    """k(x_i, y_i) row by row for matched batches."""
    radial = _kernel_radial(kernel, d)
    if radial is not None:
        return radial(np.linalg.norm(X - Y, axis=1))
    if isinstance(kernel, Zeta0TimesXi):
        r = np.linalg.norm(X - Y, axis=1)
        return zeta0(d, r) * np.asarray(kernel.xi_fn(X, Y), dtype=float)
    if isinstance(kernel, GreenFull):
        return _harmonic_green_batch(d, kernel.bg.omega, kernel.s, X, Y, q)
    raise TypeError(f"unknown kernel {kernel!r}")


def riesz_energy(cloud: PointCloud, s_exp: float) -> float:
    """(1/N^2) sum_{i != j} |x_i - x_j|^{-s_exp}, s_exp in (0, d)."""
    if not 0 < s_exp < cloud.d:
        raise ValueError(f"s_exp must lie in (0, {cloud.d}), got {s_exp}")
    if cloud.N < 2:
        raise ValueError("riesz_energy needs at least two points")
    r = pdist(cloud.positions)
    return 2.0 * float(np.sum(r ** (-s_exp))) / cloud.N ** 2


def _weight(p):
    """Normalize the weight argument to (callable, constant value or None)."""
    if p is None:
        return (lambda x: np.ones(len(x))), 1.0
    if np.isscalar(p):
        c = float(p)
        return (lambda x: np.full(len(x), c)), c
    return p, None


def _draw_pairs(scn: Scenario, m: int, rng) -> tuple:
    """m independent (x, y) pairs from U x U by bounding-box rejection."""
    lo, hi = scn.density.support_bbox(scn.d)
    umax = scn.density.max_value(scn.d)
    out = np.empty((2 * m, scn.d))
    have = 0
    while have < 2 * m:
        cand = rng.uniform(lo, hi, size=(2 * m, scn.d))
        u = density_eval(scn.density, cand)
        keep = cand[rng.uniform(0.0, umax, size=2 * m) < u]
        take = min(len(keep), 2 * m - have)
        out[have:have + take] = keep[:take]
        have += take
    return out[:m], out[m:]


def _mc_pair_integral(scn: Scenario, kernel, p_fn, tol: float,
                      n_pairs: int, seed: int, q: QuadratureSpec) -> float:
    rng = np.random.Generator(np.random.Philox([2718, seed, scn.seed]))
    batch = 1 << 18
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < n_pairs:
        m = min(batch, n_pairs - done)
        X, Y = _draw_pairs(scn, m, rng)
        w = _kernel_pairs(kernel, scn.d, X, Y, q) * p_fn(X) * p_fn(Y)
        total += float(np.sum(w))
        total_sq += float(np.dot(w, w))
        done += m
    mean = total / n_pairs
    var = max(total_sq - n_pairs * mean * mean, 0.0) / (n_pairs - 1)
    stderr = math.sqrt(var / n_pairs)
    if 2.0 * stderr > tol:
        raise RuntimeError(
            f"monte carlo pair integral missed tol={tol:g}: "
            f"estimate {mean:.10g} with standard error {stderr:.3g}")
    return mean


def continuum_pair_integral(scn: Scenario, kernel, p=None, tol: float = 1e-6,
                            n_pairs: int = MC_PAIRS, seed: int = 0,
                            q: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Double integral of k(x,y) p(x) p(y) U(x) U(y) to absolute tolerance tol.

    Uniform ball/disk with constant weight reduces exactly to one radial
    integral against the pair-distance density; all other cases use seeded
    Monte-Carlo with n_pairs samples and a standard-error gate.
    """
    p_fn, p_const = _weight(p)
    if p_const == 0.0:
        return 0.0
    radial = _kernel_radial(kernel, scn.d)
    if (radial is not None and p_const is not None
            and scn.density.shape == "UniformBall"):
        R = scn.density.radius
        val, err = quad(lambda r: float(radial(r)) * float(
            _pair_distance_density(scn.d, r / R)) / R, 0.0, 2.0 * R,
            epsabs=0.1 * tol, epsrel=1e-12, limit=400)
        if err > tol:
            raise RuntimeError(
                f"radial pair quadrature missed tol={tol:g}: "
                f"estimate {val:.10g} with error bound {err:.3g}")
        return p_const * p_const * val
    return _mc_pair_integral(scn, kernel, p_fn, tol, n_pairs, seed, q)


def pair_sum(cloud: PointCloud, charges, kernel,
             q: QuadratureSpec = DEFAULT_QUAD) -> float:
    """(1/N^2) sum over i != j of k(x_i, x_j) p_i p_j."""
    charges = np.asarray(charges, dtype=float)
    N, d = cloud.N, cloud.d
    iu, ju = np.triu_indices(N, 1)
    X = cloud.positions
    acc = 0.0
    radial = _kernel_radial(kernel, d)
    for a in range(0, len(iu), _PAIR_CHUNK):
        b = min(a + _PAIR_CHUNK, len(iu))
        i, j = iu[a:b], ju[a:b]
        if radial is not None:
            kv = radial(np.linalg.norm(X[i] - X[j], axis=1))
        else:
            kv = _kernel_pairs(kernel, d, X[i], X[j], q)
        acc += float(np.dot(kv, charges[i] * charges[j]))
    return 2.0 * acc / N ** 2


def pair_sum_gap(cloud: PointCloud, charges, kernel, scn: Scenario,
                 tol: float = 1e-6, weight=None,
                 charge_bound: float = CHARGE_BOUND,
                 q: QuadratureSpec = DEFAULT_QUAD) -> float:
    """|normalized discrete pair sum - continuum pair integral|.

    weight is the continuous function the charges sample; omitting it is only
    allowed when all charges are equal, in which case the constant is used.
    """
    charges = np.asarray(charges, dtype=float)
    if charges.shape != (cloud.N,):
        raise ValueError(f"need {cloud.N} charges")
    if cloud.N < 2:
        raise ValueError("pair sums need at least two points")
    if float(np.dot(charges, charges)) / cloud.N > charge_bound:
        raise ValueError(
            f"charge norm (1/N) sum p_j^2 exceeds the bound {charge_bound}")
    if isinstance(kernel, GreenFull) and kernel.bg.kind != "Free":
        warnings.warn("harmonic pair sums are exploratory: the smooth "
                      "remainder of the Green function is continuous but not "
                      "Lipschitz", RuntimeWarning, stacklevel=2)
    if weight is None:
        if not np.all(charges == charges[0]):
            raise ValueError("non-constant charges require the matching "
                             "continuous weight")
        weight = float(charges[0])
    discrete = pair_sum(cloud, charges, kernel, q)
    continuum = continuum_pair_integral(scn, kernel, weight, tol, q=q)
    return abs(discrete - continuum)
