"""Independent reference computations for tests and the verify harness.

Everything in this module is deliberately brute force or closed form and
imports nothing from the rest of the package, so that main-path code and
its checks cannot share a bug. Performance is a non-goal.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.signal import fftconvolve


def bessel_integral_oracle(order: int, x: float) -> float:
    """Modified Bessel function K_order(x) from its cosh-integral form.

    Integrates exp(-x cosh u) cosh(order u) over u in (0, inf), written as
    exp(-x) * int exp(-x (cosh u - 1)) cosh(order u) du so the quadrature
    runs at O(1) scale and the result keeps full relative accuracy even
    when K_order(x) itself is denormal-small.
    """
    if order not in (0, 1):
        raise ValueError(f"order must be 0 or 1, got {order}")
    if x <= 0:
        raise ValueError(f"argument must be positive, got {x}")
    # upper cutoff where x (cosh u - 1) > 750 kills the integrand
    u_max = math.acosh(1.0 + 760.0 / x)
    val, err = quad(
        lambda u: math.exp(-x * (math.cosh(u) - 1.0)) * math.cosh(order * u),
        0.0,
        u_max,
        epsabs=1e-13,
        epsrel=1e-13,
        limit=400,
    )
    if err > 1e-10 * max(1.0, abs(val)):
        raise RuntimeError(f"bessel oracle quadrature error {err:.2e} too large")
    return math.exp(-x) * val


def square_well_ground_state(depth: float, radius: float):
    """Ground-state energy of -Laplacian - depth*1_{|x|<radius} in d=3.

    Solves k cot(k R) = -sqrt(V0 - k^2) for k in (pi/2R, min(pi/R, sqrt(V0)))
    and returns E = k^2 - V0. Returns None when the well is too shallow to
    bind (V0 <= (pi / 2R)^2).
    """
    if depth <= 0 or radius <= 0:
        raise ValueError("depth and radius must be positive")
    threshold = (math.pi / (2.0 * radius)) ** 2
    if depth <= threshold:
        return None

    def f(k):
        return k / math.tan(k * radius) + math.sqrt(depth - k * k)

    lo = math.pi / (2.0 * radius) * (1.0 + 1e-12)
    hi = min(math.pi / radius, math.sqrt(depth)) * (1.0 - 1e-12)
    k = brentq(f, lo, hi, xtol=1e-14, rtol=1e-15)
    return k * k - depth


def _hermite_products(a: float, b: float, n_max: int, beta: float) -> np.ndarray:
    """Array p[n] = phi_n(a) phi_n(b) for the 1D oscillator -d^2/dx^2 + omega^2 x^2.

    phi_n(x) = sqrt(beta) h_n(beta x) with beta = sqrt(omega) and h_n the
    standard normalized Hermite functions, built by the stable three-term
    recurrence.
    """
    ya, yb = beta * a, beta * b
    h = np.empty((n_max + 1, 2))
    y = np.array([ya, yb])
    h[0] = np.pi ** -0.25 * np.exp(-y * y / 2.0)
    if n_max >= 1:
        h[1] = math.sqrt(2.0) * y * h[0]
    for n in range(1, n_max):
        h[n + 1] = math.sqrt(2.0 / (n + 1)) * y * h[n] - math.sqrt(n / (n + 1.0)) * h[n - 1]
    return beta * h[:, 0] * h[:, 1]


def _smooth_cutoff(u: np.ndarray) -> np.ndarray:
    """C-infinity window: 1 on [0, 1/2], smooth bump transition to 0 at 1."""
    t = np.clip((u - 0.5) / 0.5, 0.0, 1.0)
    f = np.where(t > 0, np.exp(-1.0 / np.maximum(t, 1e-300)), 0.0)
    g = np.where(t < 1, np.exp(-1.0 / np.maximum(1.0 - t, 1e-300)), 0.0)
    return g / (f + g)


def oscillator_green_oracle(d: int, omega: float, s: float, x, y, n_terms: int = 4000) -> float:
    """Green function of (-Laplacian + omega^2 |x|^2 + s) by eigenfunction expansion.

    Sums phi_n(x) phi_n(y) / (E_n + s) over multi-indices n with |n| <= n_terms,
    using a convolution across axes to collapse the multi-index sum into a
    single series over the total level K (E = omega (2K + d)). A sharp cutoff
    would leave a tail oscillating with phase ~ r sqrt(2 omega K) (r the scaled
    separation), so the terms are multiplied by a C-infinity window instead;
    the truncation error then decays superalgebraically once the window ramp
    spans a few oscillation periods, which needs roughly
    n_terms > (24 pi / (r sqrt(2 omega)))^2. The default handles r of order 1;
    small separations need more terms (r = 0.4 converges by n_terms ~ 32000).
    """
    if d not in (2, 3):
        raise ValueError(f"d must be 2 or 3, got {d}")
    if omega <= 0:
        raise ValueError("omega must be positive")
    if s <= -d * omega:
        raise ValueError(f"s must exceed -d*omega = {-d * omega}")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    beta = math.sqrt(omega)
    conv = _hermite_products(x[0], y[0], n_terms, beta)
    for k in range(1, d):
        axis = _hermite_products(x[k], y[k], n_terms, beta)
        conv = fftconvolve(conv, axis)[: n_terms + 1]
    levels = np.arange(n_terms + 1)
    terms = conv / (omega * (2 * levels + d) + s)
    return float(np.dot(terms, _smooth_cutoff(levels / n_terms)))


# pair-distance density of two independent uniform points, unit ball / unit disk
def ball_pair_density(d: int, r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if d == 3:
        w = 3.0 * r**2 - 2.25 * r**3 + (3.0 / 16.0) * r**5
    elif d == 2:
        half = np.clip(r / 2.0, 0.0, 1.0)
        w = (4.0 * r / np.pi) * (np.arccos(half) - half * np.sqrt(1.0 - half**2))
    else:
        raise ValueError(f"d must be 2 or 3, got {d}")
    return np.where((r >= 0) & (r <= 2.0), w, 0.0)


def ball_riesz_oracle(d: int, s_exp: float) -> float:
    """Continuum Riesz energy int int |x-y|^{-s} dmu dmu, mu uniform on the unit ball.

    d=3 reduces to a polynomial radial integral with the closed form below;
    d=2 keeps the arccos density and integrates it numerically.
    """
    if not 0 <= s_exp < d:
        raise ValueError(f"s_exp must lie in [0, {d}) for an integrable kernel")
    if d == 3:
        return (
            3.0 * 2.0 ** (3 - s_exp) / (3 - s_exp)
            - 2.25 * 2.0 ** (4 - s_exp) / (4 - s_exp)
            + (3.0 / 16.0) * 2.0 ** (6 - s_exp) / (6 - s_exp)
        )
    val, err = quad(lambda r: r ** (-s_exp) * float(ball_pair_density(2, r)), 0.0, 2.0,
                    epsabs=1e-12, epsrel=1e-12, limit=200)
    if err > 1e-9:
        raise RuntimeError(f"riesz oracle quadrature error {err:.2e} too large")
    return val


def ball_pair_kernel_oracle(d: int, kernel, tol: float = 1e-10) -> float:
    """int int kernel(|x-y|) dmu dmu for mu uniform on the unit ball/disk.

    kernel must be integrable against the pair-distance density on (0, 2];
    the reduction to one radial integral is exact.
    """
    val, err = quad(lambda r: kernel(r) * float(ball_pair_density(d, r)), 0.0, 2.0,
                    epsabs=tol, epsrel=tol, limit=400)
    if err > 100 * tol:
        raise RuntimeError(f"pair kernel quadrature error {err:.2e} too large")
    return val


def oscillator_diag_difference_oracle(d: int, omega: float, s: float, s0: float,
                                      x, n_terms: int = 6000) -> float:
    """Eigenfunction route to lim_{y->x} (G^{s0}(x,y) - G^{s}(x,y)).

    The difference of resolvent kernels on the diagonal is an absolutely
    convergent positive sum (s - s0) sum phi_n(x)^2 / ((E_n+s)(E_n+s0)) whose
    tail decays like N^{-p} with p = 2 - d/2; one Richardson step with that
    exponent removes the leading truncation error.
    """
    if s <= -d * omega or s0 <= -d * omega:
        raise ValueError("s, s0 must exceed the spectral bottom")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    beta = math.sqrt(omega)
    conv = _hermite_products(x[0], x[0], n_terms, beta)
    for k in range(1, d):
        conv = np.convolve(conv, _hermite_products(x[k], x[k], n_terms, beta))[: n_terms + 1]
    e = omega * (2 * np.arange(n_terms + 1) + d)
    partial = np.cumsum(conv / ((e + s) * (e + s0)))
    p = 2.0 - d / 2.0
    full, half = partial[-1], partial[len(partial) // 2]
    return float((s - s0) * (2.0**p * full - half) / (2.0**p - 1.0))


def gaussian_resolvent_oracle(d: int, lam: float, sigma: float, radii) -> np.ndarray:
    """(-Laplacian + lam^2)^{-1} applied to exp(-|x|^2 / (2 sigma^2)).

    Heat-semigroup route: e^{t Laplacian} keeps the input Gaussian with
    variance sigma^2 + 2t, so the resolvent collapses to a scalar Laplace
    transform in t, integrated adaptively out to where exp(-lam^2 t) is
    below 1e-35. Returns the radial profile at the requested radii.
    """
    if d not in (2, 3):
        raise ValueError(f"d must be 2 or 3, got {d}")
    if lam <= 0 or sigma <= 0:
        raise ValueError("lam and sigma must be positive")
    radii = np.atleast_1d(np.asarray(radii, dtype=float))
    s2 = sigma * sigma
    t_max = 80.0 / (lam * lam)
    out = np.empty_like(radii)
    for i, r in enumerate(radii):
        val, err = quad(
            lambda t: math.exp(-lam * lam * t)
            * (s2 / (s2 + 2.0 * t)) ** (d / 2.0)
            * math.exp(-r * r / (2.0 * (s2 + 2.0 * t))),
            0.0, t_max, epsabs=1e-13, epsrel=1e-12, limit=400)
        # absolute floor: far-tail values sit below any relative target
        if err > 1e-11 + 1e-10 * abs(val):
            raise RuntimeError(f"resolvent oracle quadrature error {err:.2e}")
        out[i] = val
    return out
