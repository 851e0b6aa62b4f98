"""Discrete pair energies against their continuum limits."""
import math
import warnings

import numpy as np
import pytest
from scipy.spatial.distance import squareform, pdist

from pointscat.kernels import zeta0
from pointscat.measures import (
    GreenFull, Riesz, Zeta0TimesXi, continuum_pair_integral, pair_sum,
    pair_sum_gap, riesz_energy,
)
from pointscat.oracles import ball_pair_kernel_oracle
from pointscat.sampling import PointCloud, sample_points
from pointscat.scenario import (Background, DensitySpec, Scenario,
                                StrengthSpec, load_scenario)


def _ball_scn():
    return load_scenario("scenarios/ball3d.toml")


def _cloud_at(positions):
    positions = np.asarray(positions, dtype=float)
    return PointCloud(d=positions.shape[1], N=len(positions),
                      positions=positions, strengths=np.ones(len(positions)),
                      min_pair_distance=float(np.min(pdist(positions))),
                      seed=0)


def test_riesz_energy_two_points():
    cloud = _cloud_at([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
    assert riesz_energy(cloud, 1.0) == 0.5


def test_riesz_energy_scaling_homogeneity():
    cloud = sample_points(_ball_scn(), 16, 3)
    scaled = PointCloud(d=3, N=16, positions=2.5 * cloud.positions,
                        strengths=cloud.strengths,
                        min_pair_distance=2.5 * cloud.min_pair_distance,
                        seed=3)
    s = 1.3
    assert riesz_energy(scaled, s) == pytest.approx(
        2.5 ** (-s) * riesz_energy(cloud, s), rel=1e-13)


def test_riesz_energy_domain_errors():
    cloud = _cloud_at([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
    for bad in (0.0, 3.0, -1.0):
        with pytest.raises(ValueError):
            riesz_energy(cloud, bad)
    single = PointCloud(d=3, N=1, positions=np.zeros((1, 3)),
                        strengths=np.ones(1), min_pair_distance=math.inf,
                        seed=0)
    with pytest.raises(ValueError):
        riesz_energy(single, 1.0)


def test_continuum_radial_closed_forms():
    assert continuum_pair_integral(_ball_scn(), Riesz(1.0)) == pytest.approx(
        1.2, rel=1e-10)
    disk = load_scenario("scenarios/disk2d.toml")
    assert continuum_pair_integral(disk, Riesz(1.0)) == pytest.approx(
        1.6976527263135506, rel=1e-9)
    assert continuum_pair_integral(_ball_scn(), Zeta0TimesXi()) == \
        pytest.approx(3.0 / (10.0 * math.pi), rel=1e-10)
    free_green_kernel = GreenFull(Background("Free"), 4.0)
    ref = ball_pair_kernel_oracle(3, lambda r: math.exp(-2.0 * r)
                                  / (4.0 * math.pi * r))
    assert continuum_pair_integral(_ball_scn(), free_green_kernel) == \
        pytest.approx(ref, rel=1e-10)


def test_continuum_radius_scaling():
    # Riesz energy of the uniform ball of radius R scales like R^{-s}
    scn = Scenario(d=3, background=Background("Free"),
                   density=DensitySpec(shape="UniformBall", radius=2.0),
                   strength=StrengthSpec(form="Constant", a0=1.0), ell=1.0)
    assert continuum_pair_integral(scn, Riesz(1.0)) == pytest.approx(
        0.6, rel=1e-10)


def test_continuum_monte_carlo_agrees_with_radial():
    # a callable weight forces the sampling route; frozen error 2.7e-5
    val = continuum_pair_integral(_ball_scn(), Riesz(1.0),
                                  p=lambda x: np.ones(len(x)),
                                  tol=2e-3, n_pairs=2_000_000, seed=0)
    assert val == pytest.approx(1.2, abs=1e-3)


def test_continuum_monte_carlo_tolerance_gate():
    with pytest.raises(RuntimeError, match="missed tol"):
        continuum_pair_integral(_ball_scn(), Riesz(1.0),
                                p=lambda x: np.ones(len(x)),
                                tol=1e-9, n_pairs=100_000, seed=0)


def test_pair_sum_matches_dense_formula():
    cloud = sample_points(_ball_scn(), 64, 1)
    charges = np.linspace(0.5, 1.5, 64)
    K = squareform(pdist(cloud.positions) ** -1.0)
    expected = float(charges @ K @ charges) / 64 ** 2
    assert pair_sum(cloud, charges, Riesz(1.0)) == pytest.approx(expected,
                                                                 rel=1e-12)

    def xi_fn(X, Y):
        return 1.0 + 0.1 * X[:, 0] * Y[:, 0]

    r = squareform(pdist(cloud.positions))
    np.fill_diagonal(r, 1.0)  # excluded pairs, value irrelevant
    Kz = zeta0(3, r.reshape(-1)).reshape(r.shape) \
        * (1.0 + 0.1 * np.outer(cloud.positions[:, 0], cloud.positions[:, 0]))
    np.fill_diagonal(Kz, 0.0)
    expected_z = float(charges @ Kz @ charges) / 64 ** 2
    assert pair_sum(cloud, charges, Zeta0TimesXi(xi_fn)) == pytest.approx(
        expected_z, rel=1e-12)


def test_pair_sum_chunking_boundary(monkeypatch):
    import pointscat.measures as measures_mod
    cloud = sample_points(_ball_scn(), 48, 2)
    charges = np.ones(48)
    whole = pair_sum(cloud, charges, Riesz(1.0))
    monkeypatch.setattr(measures_mod, "_PAIR_CHUNK", 100)  # non-divisor
    assert pair_sum(cloud, charges, Riesz(1.0)) == pytest.approx(whole,
                                                                 rel=1e-13)


def test_pair_sum_gap_zeta0_frozen():
    # frozen: 3.45e-3 for the unit-ball cloud at N = 256, seed 0
    cloud = sample_points(_ball_scn(), 256, 0)
    gap = pair_sum_gap(cloud, np.ones(256), Zeta0TimesXi(), _ball_scn())
    assert 1e-4 < gap < 0.01
    # constant weight 2 scales both sides by exactly 4
    gap2 = pair_sum_gap(cloud, np.full(256, 2.0), Zeta0TimesXi(), _ball_scn())
    assert gap2 == pytest.approx(4.0 * gap, rel=1e-12)


def test_pair_sum_gap_guards():
    scn = _ball_scn()
    cloud = sample_points(scn, 8, 0)
    with pytest.raises(ValueError, match="charge norm"):
        pair_sum_gap(cloud, np.full(8, 4.0), Riesz(1.0), scn)
    with pytest.raises(ValueError, match="charges"):
        pair_sum_gap(cloud, np.ones(7), Riesz(1.0), scn)
    with pytest.raises(ValueError, match="non-constant"):
        pair_sum_gap(cloud, np.linspace(0.5, 1.0, 8), Riesz(1.0), scn)
    single = PointCloud(d=3, N=1, positions=np.zeros((1, 3)),
                        strengths=np.ones(1), min_pair_distance=math.inf,
                        seed=0)
    with pytest.raises(ValueError, match="two points"):
        pair_sum_gap(single, np.ones(1), Riesz(1.0), scn)


def test_pair_sum_gap_harmonic_is_flagged_exploratory():
    scn = load_scenario("scenarios/harmonic2d.toml")
    cloud = sample_points(scn, 2, 0)
    kernel = GreenFull(scn.background, 2.0)
    with pytest.warns(RuntimeWarning, match="exploratory"):
        gap = pair_sum_gap(cloud, np.full(2, 0.5), kernel, scn, weight=0.0)
    assert math.isfinite(gap)
