import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from dampnls.grid import Grid, NonFiniteFieldError
from dampnls.groundstate import q_closed_form, qy_closed_form


def test_points_layout():
    g = Grid(256, 16.0)
    assert g.x[0] == -16.0
    assert g.spacing == pytest.approx(0.125)
    assert np.all(np.diff(g.x) > 0)
    assert np.allclose(np.diff(g.x), g.spacing, rtol=0, atol=1e-14)


@pytest.mark.parametrize("n", [32, 100, 1000])
def test_rejects_bad_sizes(n):
    with pytest.raises(ValueError):
        Grid(n, 16.0)


def test_rejects_nonpositive_width():
    with pytest.raises(ValueError):
        Grid(256, 0.0)


def test_derivative_single_mode():
    g = Grid(256, 16.0)
    L = g.half_width
    f = np.sin(2 * np.pi * g.x / (2 * L))
    df = g.derivative(f)
    assert np.max(np.abs(df - (np.pi / L) * np.cos(np.pi * g.x / L))) < 1e-12


def test_derivative_of_constant_is_zero():
    g = Grid(256, 16.0)
    assert np.max(np.abs(g.derivative(np.ones(256)))) == 0.0


def test_derivative_of_q_matches_closed_form():
    # Q decays like exp(-|x|), so the torus tail at L=16 is e^-16 ~ 1e-7; the
    # periodized sum is the function actually represented on the grid.
    g = Grid(512, 16.0)
    q = sum(q_closed_form(g.x + m * g.length) for m in range(-3, 4))
    qy = sum(qy_closed_form(g.x + m * g.length) for m in range(-3, 4))
    assert np.max(np.abs(g.derivative(q) - qy)) < 1e-9


def test_derivative_of_raw_q_reports_truncation_floor():
    g = Grid(512, 16.0)
    err = np.max(np.abs(g.derivative(q_closed_form(g.x)) - qy_closed_form(g.x)))
    # the jump of Q at the torus seam is ~ 2 Q(16) ~ 4e-7
    assert err < 1e-5


def test_derivative_rejects_nonfinite():
    g = Grid(64, 4.0)
    f = np.ones(64)
    f[3] = np.nan
    with pytest.raises(NonFiniteFieldError):
        g.derivative(f)


def test_quadrature_constant():
    assert Grid(256, 16.0).integrate(np.ones(256)) == pytest.approx(32.0, abs=1e-13)


def test_quadrature_q_squared():
    g = Grid(1024, 16.0)
    oracle, _ = quad(lambda x: q_closed_form(x) ** 2, -np.inf, np.inf, epsabs=1e-13)
    assert oracle == pytest.approx(math.sqrt(3) * math.pi / 2, abs=1e-10)
    q = sum(q_closed_form(g.x + m * g.length) for m in range(-3, 4))
    assert g.integrate(q ** 2) == pytest.approx(oracle, abs=1e-10)


def test_quadrature_odd_vanishes():
    g = Grid(1024, 16.0)
    f = g.x / np.cosh(2 * g.x)
    f[0] = 0.0  # x_0 = -L has no mirror partner on the torus
    assert abs(g.integrate(f)) < 1e-14


def test_weighted_norm_zero():
    g = Grid(256, 16.0)
    assert g.weighted_norm(np.zeros(256)) == 0.0


def test_weighted_norm_of_q_against_quad():
    g = Grid(1024, 16.0)
    q = sum(q_closed_form(g.x + m * g.length) for m in range(-3, 4))

    def integrand(x):
        return qy_closed_form(x) ** 2 + q_closed_form(x) ** 2 * math.exp(-1.5 * abs(x))

    oracle = math.sqrt(2 * quad(integrand, 0, 40, epsabs=1e-14, limit=200)[0])
    assert g.weighted_norm(q, 1.5) == pytest.approx(oracle, abs=1e-8)


@pytest.mark.parametrize("kappa", [0.0, 2.0, -1.0, 3.0])
def test_weighted_norm_rejects_kappa(kappa):
    g = Grid(64, 4.0)
    with pytest.raises(ValueError):
        g.weighted_norm(np.ones(64), kappa)


def test_evaluate_affine_reproduces_grid_and_shift():
    g = Grid(256, 16.0)
    f = np.exp(-g.x ** 2) * (1 + 0.3j * g.x)
    assert np.max(np.abs(g.evaluate_affine(f, g.x[0], g.spacing, g.n_points) - f)) < 1e-12
    z0, dz = -3.217, 0.0137
    z = z0 + dz * np.arange(400)
    exact = np.exp(-z ** 2) * (1 + 0.3j * z)
    assert np.max(np.abs(g.evaluate_affine(f, z0, dz, 400) - exact)) < 1e-12
    dexact = (-2 * z) * exact + 0.3j * np.exp(-z ** 2)
    assert np.max(np.abs(g.evaluate_affine(f, z0, dz, 400, order=1) - dexact)) < 1e-11


def test_kink_weighted_integral_matches_quad():
    g = Grid(1024, 16.0)

    def fn(t):
        return np.exp(-t ** 2) * (1 + t) + 0.3 / np.cosh(t) ** 2

    exact = sum(quad(lambda t: fn(t) * math.exp(-0.7 * abs(t)), a, b, epsabs=1e-15, limit=200)[0]
                for a, b in ((-16, 0), (0, 16)))
    assert g.kink_weighted_integral(fn(g.x), 0.7) == pytest.approx(exact, abs=1e-12)


def test_wrap_range():
    g = Grid(64, 2.0)
    w = g.wrap(np.array([-2.0, 2.0, 5.0, -7.5]))
    assert np.all((w >= -2.0) & (w < 2.0))
    assert np.allclose(w, [-2.0, -2.0, 1.0, 0.5])


# ---- properties


def _band_limited(g, coeffs):
    f = np.zeros(g.n_points, dtype=complex)
    for m, c in enumerate(coeffs, start=1):
        f += c * np.exp(1j * np.pi * m * g.x / g.half_width)
    return f


coeff = st.complex_numbers(max_magnitude=2.0, allow_nan=False, allow_infinity=False)
# magnitudes below 1e-6 are excluded so that squares never underflow
entry = st.one_of(st.just(0.0), st.floats(1e-6, 3.0), st.floats(-3.0, -1e-6))
fields = st.lists(entry, min_size=128, max_size=128)


@given(st.lists(coeff, min_size=1, max_size=8))
def test_parseval(coeffs):
    g = Grid(128, 5.0)
    f = _band_limited(g, coeffs)
    a = g.integrate(np.abs(f) ** 2).real
    b = g.spectral_energy(f)
    assert abs(a - b) <= 1e-12 * max(abs(a), 1e-300) + 1e-300


@given(fields)
def test_parseval_generic(vals):
    g = Grid(128, 5.0)
    f = np.asarray(vals)
    a = g.integrate(f ** 2)
    assert abs(a - g.spectral_energy(f)) <= 1e-12 * max(a, 1e-300)


@given(st.lists(coeff, min_size=1, max_size=8))
def test_double_derivative(coeffs):
    g = Grid(128, 5.0)
    f = _band_limited(g, coeffs)
    d2 = g.derivative(f, 2)
    dd = g.derivative(g.derivative(f))
    scale = max(np.max(np.abs(d2)), 1e-300)
    assert np.max(np.abs(d2 - dd)) <= 1e-10 * scale


@given(fields, st.floats(0.05, 1.95))
def test_weighted_norm_below_h1(vals, kappa):
    g = Grid(128, 5.0)
    f = np.asarray(vals)
    w = g.weighted_norm(f, kappa)
    h1 = g.integrate(g.derivative(f) ** 2) + g.integrate(f ** 2)
    assert w ** 2 <= h1 * (1 + 1e-12) + 1e-300


@given(fields, st.sampled_from([3.0, -2.5, 0.5j]))
def test_weighted_norm_homogeneous(vals, c):
    g = Grid(128, 5.0)
    f = np.asarray(vals, dtype=complex)
    assert g.weighted_norm(c * f) == pytest.approx(abs(c) * g.weighted_norm(f), rel=1e-12, abs=1e-300)


@given(fields)
def test_weighted_norm_zero_iff_zero(vals):
    g = Grid(128, 5.0)
    f = np.asarray(vals)
    assert (g.weighted_norm(f) == 0.0) == (not np.any(f))
