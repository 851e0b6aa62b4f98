"""Quadratic forms of the scatterer family, the limit form, and recovery.

Elements of the scatterer form domain split as psi = phi + (1/N) sum_j p_j
G0(., x_j) with phi regular. In the lambda-shifted representative the mixed
terms cancel exactly, leaving Q0[phi] + lambda^2 |phi|^2 + (1/N^2) p' Xi p;
norms of elements, by contrast, need the singular-singular closed forms and
grid cross terms, and are exposed separately. Free background throughout
(the harmonic singular inner products have no closed form here).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import squareform, pdist

from .grids import gradient_energy, interpolate, grid_points
from .kernels import QuadratureSpec, DEFAULT_QUAD, green_l2_inner
from .resolvent import GridField, free_resolvent_apply, _green_columns
from .sampling import PointCloud, sample_points
from .scenario import (Background, Scenario, density_eval, strength_eval)
from .spectra import grid_operator
from .xi import XiMatrix, assemble_xi

__all__ = [
    "FormElement", "qn_eval", "qinf_eval", "element_norm_sq",
    "element_distance", "recovery_sequence", "gamma_limsup_gap", "GammaRow",
]


@dataclass(frozen=True)
class FormElement:
    """psi = regular_part + (1/N) sum_j charges[j] * G0^lambda(., x_j)."""
    regular_part: GridField
    charges: np.ndarray
    lam: float
    cloud: PointCloud

    def __post_init__(self):
        c = np.asarray(self.charges, dtype=float)
        if c.shape != (self.cloud.N,):
            raise ValueError(f"charges must have length {self.cloud.N}")
        if self.lam <= 0:
            raise ValueError("lambda must be positive")
        object.__setattr__(self, "charges", c)


def qn_eval(elem: FormElement, xi: XiMatrix) -> float:
    """Shifted scatterer form: Q0[phi] + lambda^2 |phi|^2 + (1/N^2) p' Xi p.

    The phi-G cross terms of the shifted representative cancel analytically,
    so no singular quadrature enters. xi must be assembled at s = lambda^2
    for the same cloud.
    """
    if xi.N != elem.cloud.N:
        raise ValueError("xi and element refer to different clouds")
    if abs(xi.s - elem.lam ** 2) > 1e-12 * max(1.0, xi.s):
        raise ValueError(f"xi assembled at s={xi.s}, element has lambda^2="
                         f"{elem.lam ** 2}")
    grid = elem.regular_part.grid
    phi = elem.regular_part.values
    quad = gradient_energy(grid, phi) \
        + elem.lam ** 2 * float(np.dot(phi, phi)) * grid.cell_volume
    p = elem.charges
    if elem.cloud.N:
        quad += float(p @ xi.entries @ p) / elem.cloud.N ** 2
    return quad


def qinf_eval(psi: GridField, scn: Scenario, lam: float) -> float:
    """Shifted limit form |grad psi|^2 + <psi, (V_bg - U/a) psi> + lambda^2 |psi|^2."""
    op = grid_operator(scn, psi.grid.L, psi.grid.h)
    if op.grid != psi.grid:
        raise ValueError("grid geometries must match exactly")
    v = psi.values
    pot = float(np.dot(v * op.potential_values, v)) * psi.grid.cell_volume
    return gradient_energy(psi.grid, v) + pot \
        + lam ** 2 * float(np.dot(v, v)) * psi.grid.cell_volume


def _singular_gram(elem: FormElement) -> np.ndarray:
    """Matrix of <G_i, G_j>_{L2} from the closed-form squared-resolvent kernel."""
    X = elem.cloud.positions
    d = elem.cloud.d
    if elem.cloud.N == 1:
        r = np.zeros((1, 1))
    else:
        r = squareform(pdist(X))
    return green_l2_inner(d, elem.lam, r.reshape(-1)).reshape(r.shape)


def element_norm_sq(elem: FormElement, q: QuadratureSpec = DEFAULT_QUAD) -> float:
    """|psi|_2^2 combining grid, cross, and closed-form singular terms."""
    grid = elem.regular_part.grid
    phi = elem.regular_part.values
    N = elem.cloud.N
    out = float(np.dot(phi, phi)) * grid.cell_volume
    if N == 0:
        return out
    cols = _green_columns(Background("Free"), elem.cloud.d, elem.lam ** 2,
                          grid, elem.cloud.positions, q)
    cross = (phi @ cols) * grid.cell_volume
    p = elem.charges
    out += 2.0 / N * float(np.dot(p, cross))
    out += float(p @ _singular_gram(elem) @ p) / N ** 2
    return out


def element_distance(elem: FormElement, psi: GridField,
                     q: QuadratureSpec = DEFAULT_QUAD) -> float:
    """L2 distance between the element's function and a plain grid field."""
    diff = GridField(grid=elem.regular_part.grid,
                     values=elem.regular_part.values - psi.values)
    shifted = FormElement(regular_part=diff, charges=elem.charges,
                          lam=elem.lam, cloud=elem.cloud)
    return math.sqrt(max(element_norm_sq(shifted, q), 0.0))


def recovery_sequence(psi_inf: GridField, cloud: PointCloud, scn: Scenario,
                      lam: float) -> FormElement:
    """Recovery element for a smooth limit function.

    Charges p_j = psi_inf(x_j)/a(x_j) by multilinear interpolation; regular
    part phi = psi_inf - R0^lambda(U * psi_inf/a). Free background only.
    """
    if scn.background.kind != "Free":
        raise ValueError("recovery sequence requires the free background")
    grid = psi_inf.grid
    margin = grid.L - 2.0 * grid.h
    if np.any(np.abs(cloud.positions) > margin):
        raise ValueError("scatterer within 2h of the grid boundary; "
                         "interpolated charges would be unreliable")
    a_at = strength_eval(scn.strength, cloud.positions)
    if np.any(a_at == 0):
        raise ValueError("strength vanishes at a scatterer position")
    charges = interpolate(grid, psi_inf.values, cloud.positions) / a_at

    pts = grid_points(grid)
    u = density_eval(scn.density, pts)
    afield = np.where(u > 0, strength_eval(scn.strength, pts), 1.0)
    source = GridField(grid=grid, values=u * psi_inf.values / afield)
    corr = free_resolvent_apply(grid.d, lam, source)
    phi = GridField(grid=grid, values=psi_inf.values - corr.values)
    return FormElement(regular_part=phi, charges=charges, lam=lam, cloud=cloud)


@dataclass(frozen=True)
class GammaRow:
    N: int
    seed: int
    QN: float
    Qinf: float
    gap: float
    psi_dist: float


def gamma_limsup_gap(scn: Scenario, psi_inf: GridField, N_list, n_seeds: int,
                     lam: float, q: QuadratureSpec = DEFAULT_QUAD):
    """Recovery-sequence experiment: per (N, seed), |Q_N[psi_N] - Q_inf[psi_inf]|.

    Also records the L2 distance |psi_N - psi_inf| whose decay certifies the
    sequence converges to the right limit. Deterministic given seeds.
    """
    if scn.background.kind != "Free":
        raise ValueError("free background only")
    Qinf = qinf_eval(psi_inf, scn, lam)
    s0 = scn.lambda0 ** 2
    rows = []
    for N in sorted(N_list):
        for seed in range(n_seeds):
            cloud = sample_points(scn, N, seed)
            elem = recovery_sequence(psi_inf, cloud, scn, lam)
            xi = assemble_xi(cloud, scn.background, lam * lam, s0, q)
            QN = qn_eval(elem, xi)
            dist = element_distance(elem, psi_inf, q)
            rows.append(GammaRow(N=N, seed=seed, QN=QN, Qinf=Qinf,
                                 gap=abs(QN - Qinf), psi_dist=dist))
    return rows
