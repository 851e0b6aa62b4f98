"""Reference values for the oracle layer itself.

Literals here were produced by the oracle functions once and frozen; the
tests pin them against drift. Where a closed form exists (Riesz s=1 on the
ball, the zeta0 pair integral) the oracle is checked against it instead.
"""
import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import j0

from pointscat import oracles


def test_bessel_oracle_frozen_values():
    assert oracles.bessel_integral_oracle(0, 1.0) == pytest.approx(
        0.4210244382407084, rel=1e-12)
    assert oracles.bessel_integral_oracle(1, 1.0) == pytest.approx(
        0.6019072301972346, rel=1e-12)
    assert oracles.bessel_integral_oracle(0, 5.0) == pytest.approx(
        0.0036910983340425947, rel=1e-12)
    assert oracles.bessel_integral_oracle(1, 5.0) == pytest.approx(
        0.004044613445452164, rel=1e-12)


def test_bessel_oracle_extreme_arguments():
    # relative accuracy must survive both the log-singular and the denormal end
    assert oracles.bessel_integral_oracle(0, 1e-3) == pytest.approx(
        7.023688800562382, rel=1e-11)
    assert oracles.bessel_integral_oracle(0, 600.0) == pytest.approx(
        1.3558285309948473e-262, rel=1e-10)


def test_bessel_oracle_rejects_bad_input():
    with pytest.raises(ValueError):
        oracles.bessel_integral_oracle(2, 1.0)
    with pytest.raises(ValueError):
        oracles.bessel_integral_oracle(0, 0.0)


def test_square_well_ground_state():
    assert oracles.square_well_ground_state(4.0, 1.0) == pytest.approx(
        -0.4071014836413056, rel=1e-12)
    # below the binding threshold (pi/2)^2 there is no bound state
    assert oracles.square_well_ground_state(2.0, 1.0) is None
    with pytest.raises(ValueError):
        oracles.square_well_ground_state(-1.0, 1.0)


def test_ball_pair_density_normalized():
    r = np.linspace(0.0, 2.0, 20001)
    for d in (2, 3):
        w = oracles.ball_pair_density(d, r)
        assert np.all(w >= 0.0)
        assert np.trapezoid(w, r) == pytest.approx(1.0, abs=1e-7)
    assert oracles.ball_pair_density(3, np.array([2.5]))[0] == 0.0


def test_ball_riesz_oracle():
    # s = 1 in d = 3 has the classical closed form 6/5
    assert oracles.ball_riesz_oracle(3, 1.0) == pytest.approx(1.2, rel=1e-14)
    assert oracles.ball_riesz_oracle(3, 0.5) == pytest.approx(
        1.0579052102946793, rel=1e-12)
    assert oracles.ball_riesz_oracle(3, 1.5) == pytest.approx(
        1.5084944665313014, rel=1e-12)
    assert oracles.ball_riesz_oracle(2, 1.0) == pytest.approx(
        1.6976527263135506, rel=1e-12)
    with pytest.raises(ValueError):
        oracles.ball_riesz_oracle(3, 3.0)


def test_ball_pair_kernel_oracle_matches_closed_form():
    # kernel 1/(4 pi r) over the unit ball: 3/(10 pi)
    val = oracles.ball_pair_kernel_oracle(3, lambda r: 1.0 / (4.0 * math.pi * r))
    assert val == pytest.approx(3.0 / (10.0 * math.pi), rel=1e-12)


def test_oscillator_green_oracle_frozen_value():
    val = oracles.oscillator_green_oracle(
        2, 1.0, 1.0, (0.0, 0.0), (1.0, 0.0), n_terms=32000)
    assert val == pytest.approx(0.04326292482813398, rel=1e-10)


def test_oscillator_green_oracle_self_convergence():
    # the smooth spectral window converges superalgebraically once it spans
    # a few oscillation periods; doubling the terms must not move the value
    args = (2, 1.0, 1.0, (0.0, 0.0), (1.0, 0.0))
    v16 = oracles.oscillator_green_oracle(*args, n_terms=16000)
    v32 = oracles.oscillator_green_oracle(*args, n_terms=32000)
    assert abs(v16 - v32) / abs(v32) < 5e-6


def test_oscillator_green_oracle_rejects_bad_input():
    with pytest.raises(ValueError):
        oracles.oscillator_green_oracle(4, 1.0, 1.0, (0.0,) * 4, (1.0,) * 4)
    with pytest.raises(ValueError):
        oracles.oscillator_green_oracle(2, -1.0, 1.0, (0.0, 0.0), (1.0, 0.0))
    with pytest.raises(ValueError):
        oracles.oscillator_green_oracle(2, 1.0, -5.0, (0.0, 0.0), (1.0, 0.0))


def test_oscillator_diag_difference_frozen_value():
    val = oracles.oscillator_diag_difference_oracle(2, 1.0, 4.0, 1.0, (0.0, 0.0))
    assert val == pytest.approx(0.0893138216123232, rel=1e-10)


def test_oscillator_diag_difference_positive_and_monotone():
    # (s - s0) > 0 makes the diagonal difference positive, and it grows in s
    v1 = oracles.oscillator_diag_difference_oracle(2, 1.0, 2.0, 1.0, (0.1, 0.2))
    v2 = oracles.oscillator_diag_difference_oracle(2, 1.0, 6.0, 1.0, (0.1, 0.2))
    assert 0.0 < v1 < v2


def test_gaussian_resolvent_oracle_dual_route_3d():
    # second derivation: reduce the Yukawa convolution to the elementary
    # 1d integral (2 lam r)^{-1} int s f(s) (e^{-lam|r-s|} - e^{-lam(r+s)}) ds
    lam, sig = 1.0, 0.5

    def conv(r):
        if r == 0.0:
            val, _ = quad(lambda s: s * math.exp(-lam * s - s * s / (2 * sig * sig)),
                          0.0, 12.0, epsabs=1e-14, epsrel=1e-13, limit=300)
            return val
        val, _ = quad(
            lambda s: s * math.exp(-s * s / (2 * sig * sig))
            * (math.exp(-lam * abs(r - s)) - math.exp(-lam * (r + s))),
            0.0, 12.0, epsabs=1e-14, epsrel=1e-13, limit=300)
        return val / (2.0 * lam * r)

    radii = [0.0, 0.3, 1.0, 2.2]
    semi = oracles.gaussian_resolvent_oracle(3, lam, sig, radii)
    np.testing.assert_allclose(semi, [conv(r) for r in radii], rtol=1e-11)
    assert semi[0] == pytest.approx(0.140454442943288, rel=1e-10)


def test_gaussian_resolvent_oracle_dual_route_2d():
    # second derivation: Fourier-Bessel, sig^2 int k J0(kr) e^{-sig^2 k^2/2}
    # / (k^2 + lam^2) dk
    lam, sig = 1.3, 0.5

    def fb(r):
        val, _ = quad(lambda k: k * j0(k * r) * math.exp(-sig * sig * k * k / 2)
                      / (k * k + lam * lam),
                      0.0, 60.0, epsabs=1e-14, epsrel=1e-13, limit=400)
        return sig * sig * val

    radii = [0.0, 0.7, 1.8]
    semi = oracles.gaussian_resolvent_oracle(2, lam, sig, radii)
    np.testing.assert_allclose(semi, [fb(r) for r in radii], rtol=1e-11)
    assert semi[0] == pytest.approx(0.181900883553597, rel=1e-10)


def test_gaussian_resolvent_oracle_rejects_bad_input():
    with pytest.raises(ValueError):
        oracles.gaussian_resolvent_oracle(4, 1.0, 0.5, [0.0])
    with pytest.raises(ValueError):
        oracles.gaussian_resolvent_oracle(3, 0.0, 0.5, [0.0])
    with pytest.raises(ValueError):
        oracles.gaussian_resolvent_oracle(3, 1.0, -0.5, [0.0])
