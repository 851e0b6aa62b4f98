"""Xi matrix assembly, scaled spectral statistics, coercivity scan."""
import math

import numpy as np
import pytest
from scipy.spatial.distance import pdist, squareform

from pointscat.kernels import diagonal_regularization, free_green
from pointscat.sampling import PointCloud, sample_points
from pointscat.scenario import Background, DensitySpec, Scenario, StrengthSpec
from pointscat.xi import (
    XiMatrix, assemble_xi, coercivity_onset, dump_xi_csv,
    min_eigenvalue_scaled, offdiag_hs_norm_scaled, weyl_lower_bound,
)


def _scn(ell=1.0, a0=1.0):
    return Scenario(d=3, background=Background("Free"),
                    density=DensitySpec(shape="UniformBall", radius=1.0),
                    strength=StrengthSpec(form="Constant", a0=a0), ell=ell)


def _cloud(N=64, seed=0, ell=1.0):
    return sample_points(_scn(ell=ell), N, seed)


def test_assemble_xi_entries_free():
    cloud = _cloud(N=16)
    s, s0 = 9.0, 1.0
    xi = assemble_xi(cloud, Background("Free"), s, s0)
    assert xi.N == 16 and xi.entries.shape == (16, 16)
    np.testing.assert_allclose(xi.entries, xi.entries.T, rtol=0, atol=0)
    reg = diagonal_regularization(Background("Free"), 3, s, s0,
                                  cloud.positions[0])
    np.testing.assert_allclose(np.diag(xi.entries), cloud.strengths + reg,
                               rtol=1e-14)
    G = squareform(free_green(3, math.sqrt(s), pdist(cloud.positions)))
    off = xi.entries - np.diag(np.diag(xi.entries))
    np.testing.assert_allclose(off, -G, rtol=1e-14)


def test_assemble_xi_rejects_bad_spectral_params():
    cloud = _cloud(N=8)
    with pytest.raises(ValueError):
        assemble_xi(cloud, Background("Free"), -1.0, 1.0)
    with pytest.raises(ValueError):
        assemble_xi(cloud, Background("Free"), 1.0, 0.0)


def test_xi_matrix_shape_guard():
    with pytest.raises(ValueError):
        XiMatrix(N=3, s=1.0, s0=1.0, entries=np.zeros((2, 2)))


def test_scaled_statistics_frozen_values():
    # N = 256, unit ball, ell = 1, alpha = N: the lambda doubling 4 -> 8
    # contracts the off-diagonal HS norm by ~0.40
    cloud = _cloud(N=256)
    x4 = assemble_xi(cloud, Background("Free"), 16.0, 1.0)
    x8 = assemble_xi(cloud, Background("Free"), 64.0, 1.0)
    assert min_eigenvalue_scaled(x4) == pytest.approx(0.991789, abs=2e-6)
    assert offdiag_hs_norm_scaled(x4) == pytest.approx(0.023524, abs=2e-6)
    assert min_eigenvalue_scaled(x8) == pytest.approx(0.999689, abs=2e-6)
    ratio = offdiag_hs_norm_scaled(x8) / offdiag_hs_norm_scaled(x4)
    assert ratio == pytest.approx(0.395211, abs=1e-4)
    assert ratio <= 2.0 ** -0.9


def test_weyl_bound_below_min_eigenvalue():
    for seed in range(3):
        cloud = _cloud(N=64, seed=seed)
        xi = assemble_xi(cloud, Background("Free"), 4.0, 1.0)
        assert weyl_lower_bound(xi) <= min_eigenvalue_scaled(xi) + 1e-12


def test_min_eigenvalue_grows_with_lambda():
    cloud = _cloud(N=128)
    vals = [min_eigenvalue_scaled(assemble_xi(cloud, Background("Free"),
                                              lam * lam, 1.0))
            for lam in (1.0, 2.0, 4.0, 8.0)]
    assert all(a < b for a, b in zip(vals, vals[1:]))


def test_coercivity_onset_contract():
    scn = _scn()
    lam_star, rows = coercivity_onset(scn, (32, 64), lambda_max=64.0,
                                      threshold=0.5, hs_factor=0.6)
    assert lam_star == 2.0
    stats = {(N, lam): (me, hs) for N, lam, me, hs in rows}
    for N in (32, 64):
        assert stats[(N, lam_star)][0] >= 0.5
        assert stats[(N, 2 * lam_star)][0] >= 0.5
        assert stats[(N, 2 * lam_star)][1] <= 0.6 * stats[(N, lam_star)][1]
    # rows are sorted and cover every (N, lambda) the scan touched
    assert rows == sorted(rows)


def test_dump_xi_csv_capped(tmp_path):
    xi = assemble_xi(_cloud(N=4), Background("Free"), 4.0, 1.0)
    path = tmp_path / "xi.csv"
    dump_xi_csv(xi, path)
    lines = path.read_text().strip().splitlines()
    assert len(lines) == 6  # header + 4 rows + row-count footer
    assert lines[-1] == "# rows=4"
    big = assemble_xi(_cloud(N=65), Background("Free"), 4.0, 1.0)
    with pytest.raises(ValueError):
        dump_xi_csv(big, path)
