"""Grid geometry, difference operators, and the sine-transform solver."""
import math

import numpy as np
import pytest

from pointscat.grids import (
    BoxGrid, dst_eigenvalues, dst_helmholtz_solve, eval_on_grid,
    gradient_energy, grid_points, interpolate, l2_inner, laplacian_apply,
    make_grid,
)


def test_make_grid_geometry():
    grid = make_grid(2, 1.0, 0.25)
    # interior Dirichlet nodes only: 2L/h - 1 per axis
    assert grid.n == 7
    assert grid.shape == (7, 7)
    assert grid.size == 49
    assert grid.cell_volume == pytest.approx(0.0625)
    pts = grid_points(grid)
    assert pts.shape == (49, 2)
    assert pts.min() == pytest.approx(-0.75)
    assert pts.max() == pytest.approx(0.75)


def test_make_grid_rejects_bad_input():
    with pytest.raises(ValueError):
        make_grid(4, 1.0, 0.25)
    with pytest.raises(ValueError):
        make_grid(2, -1.0, 0.25)
    with pytest.raises(ValueError):
        make_grid(2, 1.0, 0.7)  # fewer than 3 interior nodes


def test_eval_on_grid_matches_direct():
    grid = make_grid(3, 1.0, 0.25)
    f = lambda pts: np.sum(pts**2, axis=1)
    np.testing.assert_allclose(eval_on_grid(grid, f, chunk=17),
                               f(grid_points(grid)), rtol=1e-15)


def test_laplacian_on_dst_eigenvector():
    # sine modes are exact eigenvectors of the Dirichlet difference operator
    grid = make_grid(2, 1.0, 0.125)
    n, h = grid.n, grid.h
    j = np.arange(1, n + 1)
    k1, k2 = 2, 5
    v = np.outer(np.sin(math.pi * k1 * j / (n + 1)),
                 np.sin(math.pi * k2 * j / (n + 1))).reshape(-1)
    ev = (4.0 / (h * h)) * (math.sin(math.pi * k1 / (2 * (n + 1))) ** 2
                            + math.sin(math.pi * k2 / (2 * (n + 1))) ** 2)
    np.testing.assert_allclose(laplacian_apply(grid, v), ev * v, atol=1e-10)


def test_gradient_energy_of_sine_mode():
    # summation by parts makes the energy equal the eigenvalue times the norm
    grid = make_grid(2, 1.0, 0.0625)
    n, h = grid.n, grid.h
    j = np.arange(1, n + 1)
    v = np.outer(np.sin(math.pi * j / (n + 1)),
                 np.sin(math.pi * 2 * j / (n + 1))).reshape(-1)
    ev = (4.0 / (h * h)) * (math.sin(math.pi / (2 * (n + 1))) ** 2
                            + math.sin(math.pi * 2 / (2 * (n + 1))) ** 2)
    direct = float(v @ laplacian_apply(grid, v)) * grid.cell_volume
    assert gradient_energy(grid, v) == pytest.approx(direct, rel=1e-12)
    assert gradient_energy(grid, v) == pytest.approx(
        ev * l2_inner(grid, v, v), rel=1e-12)


def test_interpolate_exact_on_multilinear():
    grid = make_grid(2, 1.0, 0.125)
    pts = grid_points(grid)
    vals = 2.0 + 3.0 * pts[:, 0] - pts[:, 1] + 0.5 * pts[:, 0] * pts[:, 1]
    probe = np.array([[0.11, -0.23], [0.4, 0.31], [-0.55, 0.02]])
    expected = (2.0 + 3.0 * probe[:, 0] - probe[:, 1]
                + 0.5 * probe[:, 0] * probe[:, 1])
    np.testing.assert_allclose(interpolate(grid, vals, probe), expected,
                               rtol=1e-13)


def test_dst_helmholtz_solve_inverts_operator():
    grid = make_grid(3, 1.0, 0.125)
    rng = np.random.Generator(np.random.Philox([11]))
    rhs = rng.standard_normal(grid.size)
    u = dst_helmholtz_solve(grid, rhs, shift=2.5)
    np.testing.assert_allclose(laplacian_apply(grid, u) + 2.5 * u, rhs,
                               atol=1e-10)
    evs = dst_eigenvalues(grid)
    assert evs.shape == (grid.n,)
    assert float(evs.min()) > 0.0
    # an exact discrete eigenvalue of -Delta_h is a resonance
    with pytest.raises(ValueError):
        dst_helmholtz_solve(grid, rhs, shift=-3.0 * float(evs[0]))
