import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from morphlab.model import (
    M_MATRIX,
    ModelParams,
    ParameterError,
    PhysicalParams,
    UState,
    check_exponents,
    from_z,
    mollifier,
    nondimensionalize,
    reaction_f,
    reaction_g,
    to_z,
)
from morphlab.spectral import SpectralError, SpectralField1D, SpectralField2D

nonneg = st.floats(0, 10, allow_nan=False)


def random_params(rng):
    return ModelParams(d=rng.uniform(0.1, 3), b=rng.uniform(0.1, 3, 5), c=rng.uniform(0, 3, 5),
                       p=(rng.uniform(0, 3), 0, rng.uniform(0, 3), 0, 0))


def phys(**kw):
    base = dict(D=1.0, D_star=1.0, gamma=0.01, gamma_star=0.02, k=0.1, k_prime=0.2, k_R=0.3,
                k_R_prime=0.4, k_Rg=0.5, k_Rg_prime=0.6, alpha=0.7, alpha_star=0.8, s=0.9,
                Gamma=1.1, G=1.2, L=10.0, H=10.0, epsilon=1.0)
    base.update(kw)
    return PhysicalParams(**base)


# --- parameters ---------------------------------------------------------------

def test_param_defaults_and_replace():
    P = ModelParams()
    assert P.p1 == 1.0 and P.p3 == 1.0
    assert P.replace(d=2.0).d == 2.0


@pytest.mark.parametrize("kw", [dict(d=0.0), dict(b=(1, 1, 0, 1, 1)), dict(c=(1, -1, 1, 1, 1)),
                                dict(p=(1, 1, 1, 0, 0)), dict(p=(-1, 0, 0, 0, 0)), dict(b=(1, 1))])
def test_param_validation(kw):
    with pytest.raises(ParameterError):
        ModelParams(**kw)


def test_nondim_equal_diffusivities():
    assert nondimensionalize(phys()).params.d == 1.0


def test_nondim_b1():
    # T = L^2 / D = 100, b1 = T gamma = 1
    assert nondimensionalize(phys()).params.b[0] == pytest.approx(1.0)


def test_nondim_full_formulas():
    p = phys(D=2.0, H=5.0, epsilon=0.5)
    out = nondimensionalize(p)
    T = p.L**2 / p.D
    K2 = p.k_R * T / p.H
    assert out.T_scale == T and out.K2 == pytest.approx(K2)
    assert out.h == pytest.approx(0.5 * 5 / 10)
    np.testing.assert_allclose(out.params.c, [T * p.k * p.G / p.H, T * p.k_prime, p.H * p.k_Rg / p.k_R,
                                              T * p.k_R_prime, T * p.k_Rg_prime])
    np.testing.assert_allclose(out.params.p, [K2 * T * p.s, 0, K2 * T * p.Gamma, 0, 0])
    np.testing.assert_allclose(out.params.b, [T * p.gamma, T * p.gamma_star, T * p.alpha,
                                              T * p.alpha_star, T * p.alpha_star])


def test_nondim_unit_aspect():
    out = nondimensionalize(phys(epsilon=1.0, H=10.0, L=10.0))
    assert out.h == 1.0 and not out.h_out_of_range


def test_nondim_flags_aspect():
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        out = nondimensionalize(phys(H=30.0))
    assert out.h_out_of_range and w


def test_physical_validation():
    with pytest.raises(ParameterError):
        phys(k=0.0)
    with pytest.raises(ParameterError):
        phys(epsilon=1.5)


# --- reaction terms -------------------------------------------------------------

def test_f_at_zero():
    P = ModelParams()
    assert reaction_f((0, 0, 0, 0, 0), P) == (0, 0, P.p3, 0, 0)


def test_f4_plug():
    P = ModelParams(b=(1, 1, 1, 1e-300, 1), c=(1, 1, 1, 0, 1))
    assert reaction_f((1, 0, 1, 0, 0), P)[3] == pytest.approx(1.0)


def test_f3_plug():
    # -(1 + 1 + 1) + 1 + 1 + 1 = 0 by hand
    assert reaction_f((1, 1, 1, 1, 1), ModelParams())[2] == 0.0


def test_g_at_zero():
    P = ModelParams()
    assert reaction_g((0, 0, 0, 0, 0), 0.0, P) == (0, 0, P.p3, P.p3, P.p3)


@settings(max_examples=200, deadline=None)
@given(st.lists(nonneg, min_size=5, max_size=5), st.integers(0, 2**31))
def test_g_is_image_of_f(u, seed):
    P = random_params(np.random.default_rng(seed))
    f = reaction_f(u, P)
    z = M_MATRIX @ np.array(u)
    g = reaction_g(z, 0.0, P)
    np.testing.assert_allclose(g, M_MATRIX @ np.array(f), rtol=1e-12, atol=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.lists(nonneg, min_size=5, max_size=5), nonneg, st.integers(0, 2**31))
def test_g_is_image_of_f_with_layer(u, m, seed):
    # The z3 equation carries -Tr(m) z3 in its linear part, so add it back.
    P = random_params(np.random.default_rng(seed))
    u = np.array(u)
    z = M_MATRIX @ np.array([u[0] - m, *u[1:]])
    g = np.array(reaction_g(z, m, P))
    g[2] -= m * z[2]
    np.testing.assert_allclose(g, M_MATRIX @ np.array(reaction_f(u, P)), rtol=1e-10, atol=1e-10)


@settings(max_examples=100, deadline=None)
@given(st.lists(nonneg, min_size=5, max_size=5), st.floats(-5, 5), st.integers(0, 2**31))
def test_g1_linear_in_m(z, m, seed):
    P = random_params(np.random.default_rng(seed))
    diff = reaction_g(z, m, P)[0] - reaction_g(z, 0.0, P)[0]
    assert diff == pytest.approx(-(P.c[0] + z[2]) * m, rel=1e-9, abs=1e-9)
    assert reaction_g(z, m, P)[2:] == reaction_g(z, 0.0, P)[2:]


def test_quasi_positivity():
    rng = np.random.default_rng(0)
    for _ in range(10_000):
        P = random_params(rng)
        u = rng.uniform(0, 5, 5)
        k = rng.integers(5)
        u[k] = 0.0
        assert reaction_f(u, P)[k] >= 0.0


def test_ode_sum_inequality():
    rng = np.random.default_rng(1)
    for _ in range(5000):
        P = random_params(rng)
        u = rng.uniform(0, 5, 5)
        f = reaction_f(u, P)
        assert f[2] + f[3] + f[4] <= P.p3 - min(P.b[2:]) * (u[2] + u[3] + u[4]) + 1e-12


# --- change of variables --------------------------------------------------------

def test_to_z_sums():
    u = UState(SpectralField2D.zeros(2, 2), SpectralField1D.zeros(2), np.ones(3), np.ones(3), np.ones(3))
    z = to_z(u)
    assert z.z3[0] == 1 and z.z4[0] == 2 and z.z5[0] == 3
    assert z.z1 is u.u1


def test_round_trip_with_layer():
    rng = np.random.default_rng(5)
    u = UState(SpectralField2D(rng.normal(size=(4, 3))), SpectralField1D(rng.normal(size=4)),
               *rng.normal(size=(3, 6)))
    m = SpectralField2D(rng.normal(size=(4, 3)))
    back = from_z(to_z(u, m), m)
    np.testing.assert_allclose(back.u1.coeffs, u.u1.coeffs, rtol=1e-15, atol=1e-15)
    for a, b in ((back.u3, u.u3), (back.u4, u.u4), (back.u5, u.u5)):
        np.testing.assert_allclose(a, b, atol=1e-15)


def test_shape_mismatch():
    u = UState(SpectralField2D.zeros(4, 3), SpectralField1D.zeros(4), np.ones(3), np.ones(3), np.ones(3))
    with pytest.raises(SpectralError):
        to_z(u, SpectralField2D.zeros(4, 4))
    with pytest.raises(SpectralError):
        to_z(UState(u.u1, u.u2, np.ones(3), np.ones(4), np.ones(3)))


# --- mollifier ------------------------------------------------------------------

def test_unit_mass():
    eta = mollifier(0.1)
    mass, _ = integrate.quad(eta.eval, -0.1, 0.1, epsabs=0, epsrel=1e-13, limit=200)
    assert mass == pytest.approx(1.0, abs=1e-10)


def test_support():
    eta = mollifier(0.2)
    assert eta.eval(np.array([1.01 * 0.2, -1.01 * 0.2])).tolist() == [0.0, 0.0]
    assert eta.eval(0.0) > 0


def test_delta_coefficients():
    g = mollifier(0.0).spectral_1d(4)
    assert g[0] == pytest.approx(1 / math.sqrt(2))
    assert g[1] == 0.0
    assert g[2] == pytest.approx(-1.0)


def test_delta_has_no_values():
    with pytest.raises(ParameterError):
        mollifier(0.0).eval(0.0)
    with pytest.raises(ParameterError):
        mollifier(1.5)


@pytest.mark.parametrize("eps", [0.05, 0.3, 1.0])
def test_coefficients_match_direct_quadrature(eps):
    # Independent oracle: integrate eta^eps u_i over I with plain quad.
    eta = mollifier(eps)
    g = eta.spectral_1d(12)
    for i in range(12):
        ref, _ = integrate.quad(lambda x: eta.eval(x) * (1 / math.sqrt(2) if i == 0 else 1.0)
                                * math.cos(i * math.pi * (x + 1) / 2), -eps, eps,
                                epsabs=1e-13, epsrel=1e-12, limit=200)
        assert g[i] == pytest.approx(ref, abs=1e-10)


def test_symmetry_kills_odd_modes():
    g = mollifier(0.37).spectral_1d(40)
    assert np.all(g[1::2] == 0.0)
    x = np.linspace(0, 0.37, 9)
    np.testing.assert_array_equal(mollifier(0.37).eval(x), mollifier(0.37).eval(-x))


def test_exponent_rules():
    check_exponents(1 / 32, 4)
    for th, p in [(1 / 16, 4), (0.2, 3), (0.01, 2), (0, 4)]:
        with pytest.raises(ParameterError):
            check_exponents(th, p)
