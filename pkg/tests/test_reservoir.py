import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from openbcs.meanfield import MeanFieldPoint, meanfield_state, pulsation
from openbcs.reservoir import (
    ALPHAS, GammaSet, ReservoirSpec, condition_integral, double_time_integral, gamma_full,
    gamma_resonant, occupation, principal_value, radial_weight, second_order_matrix,
    second_order_term, spectral_density, spectral_weight, stochastic_limit_rate, test_function,
)

SPEC = ReservoirSpec(beta=1.0)


def test_occupation_value():
    m, n = occupation(SPEC, 1.0)
    assert m == pytest.approx(1 / (1 - math.exp(-1)), rel=1e-15)
    assert m == pytest.approx(1.5819767068693265, rel=1e-14)
    assert n == pytest.approx(m - 1, rel=1e-14)


@pytest.mark.parametrize("beta", [0.1, 1.0, 7.5])
def test_thermal_identities_on_grid(beta):
    spec = ReservoirSpec(beta=beta)
    eps = spec.energy(np.linspace(0, spec.p_max, 2001)[1:])
    m, n = occupation(spec, eps)
    assert np.max(np.abs(m - n - 1)) < 1e-14 * np.max(m)
    assert np.max(np.abs(n / m - np.exp(-beta * eps))) < 1e-14


def test_occupation_rejects_nonpositive_energy():
    with pytest.raises(ValueError):
        occupation(SPEC, 0.0)


@pytest.mark.parametrize("kind", ["gaussian", "pwave"])
def test_spectral_density_shape(kind):
    spec = ReservoirSpec(beta=1.0, test_function=kind)
    eps = np.linspace(0, 20, 401)
    j = spectral_density(spec, eps)
    assert np.all(j >= 0)
    assert j[0] == 0
    assert spectral_density(spec, 1e-12) < 1e-4


def test_spectral_density_matches_lattice_sum():
    # a cubic lattice of spacing dp approximates int d^3p |f|^2 = int J deps
    dp = 0.1
    ax = np.arange(-8, 8 + dp / 2, dp)
    p = np.sqrt(ax[:, None, None] ** 2 + ax[None, :, None] ** 2 + ax[None, None, :] ** 2)
    lattice = float((test_function(SPEC, p) ** 2).sum() * dp**3)
    continuum = integrate.quad(lambda e: spectral_density(SPEC, e), 0, 60)[0]
    assert continuum == pytest.approx(math.pi**1.5, rel=1e-10)
    assert lattice == pytest.approx(continuum, rel=1e-2)


def test_radial_weight_zero_momentum_limit():
    spec = ReservoirSpec(beta=2.0, mass=1.5)
    assert radial_weight(spec, 0.0, "m") == pytest.approx(4 * math.pi * 2 * 1.5 / 2.0)
    assert radial_weight(spec, 1e-7, "m") == pytest.approx(radial_weight(spec, 0.0, "m"),
                                                           rel=1e-9)
    with pytest.raises(ValueError):
        radial_weight(spec, 1.0, "x")


def test_gamma_resonant_values():
    omega, nu = 1.5, 2.0
    gam = gamma_resonant(SPEC, omega, nu)
    for k, alpha in enumerate(ALPHAS):
        big = nu + alpha * omega
        m, n = occupation(SPEC, big)
        assert gam.gamma_a[k] == pytest.approx(math.pi * spectral_density(SPEC, big) * m)
        assert gam.gamma_b[k] == pytest.approx(math.pi * spectral_density(SPEC, big) * n)
    assert spectral_weight(SPEC, 1.0) == pytest.approx(math.pi * spectral_density(SPEC, 1.0))


@settings(max_examples=50, deadline=None)
@given(st.floats(0.05, 3.0), st.floats(-4.0, 4.0), st.floats(0.1, 5.0))
def test_gamma_resonant_detailed_balance(omega, nu, beta):
    spec = ReservoirSpec(beta=beta)
    gam = gamma_resonant(spec, omega, nu)
    for alpha in ALPHAS:
        big = nu + alpha * omega
        a, b = gam.a(alpha).real, gam.b(alpha).real
        assert a >= 0 and b >= 0
        if big <= 0:
            assert a == 0 and b == 0
        elif b > 1e-300:
            assert a / b == pytest.approx(math.exp(beta * big), rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.05, 3.0))
def test_minus_channel_vanishes_on_nu_zero_slice(omega):
    gam = gamma_resonant(SPEC, omega, 0.0)
    assert gam.a(-1) == 0 and gam.b(-1) == 0
    assert gam.a(0) == 0 and gam.b(0) == 0


def test_low_temperature_suppresses_absorption():
    cold = gamma_resonant(ReservoirSpec(beta=50.0), 1.0, 1.5)
    assert cold.b(1).real < 1e-40
    assert cold.a(1).real == pytest.approx(math.pi * spectral_density(SPEC, 2.5), rel=1e-12)


def _pv_by_subtraction(spec, big, which):
    e_max = float(spec.energy(spec.p_max))

    def weight(e):
        m, n = occupation(spec, e)
        return spectral_density(spec, e) * (m if which == "m" else n)

    w0 = weight(big)
    f = lambda e: (weight(e) - w0) / (big - e)  # noqa: E731
    body = (integrate.quad(f, 0, big, limit=400, epsabs=1e-13)[0]
            + integrate.quad(f, big, e_max, limit=400, epsabs=1e-13)[0])
    return body + w0 * math.log(big / (e_max - big))


@pytest.mark.parametrize("big", [0.5, 1.3, 3.0])
@pytest.mark.parametrize("which", ["m", "n"])
def test_principal_value_against_subtraction(big, which):
    assert principal_value(SPEC, big, which) == pytest.approx(
        _pv_by_subtraction(SPEC, big, which), rel=1e-10)


def test_principal_value_off_band():
    # Omega < 0: ordinary integral with a negative integrand
    val = principal_value(SPEC, -0.7, "m")
    ref = integrate.quad(lambda p: radial_weight(SPEC, p, "m") / (-0.7 - p * p / 2),
                         0, SPEC.p_max)[0]
    assert val == pytest.approx(ref, rel=1e-10) and val < 0
    assert math.isnan(principal_value(SPEC, 0.0, "m"))


def test_gamma_full_matches_time_integral():
    spec = ReservoirSpec(beta=1.0, test_function="pwave", n_radial=200001)
    gam = gamma_full(spec, omega=1.0, nu=0.3, eta=0)
    big = 1.3
    a = condition_integral(spec, big, "m", 400.0)
    b = condition_integral(spec, big, "n", 400.0).conjugate()
    assert abs(a - gam.a(1)) < 1e-3 * abs(gam.a(1))
    assert abs(b - gam.b(1)) < 1e-3 * abs(gam.b(1))


def test_gamma_full_eta_convergence():
    exact = gamma_resonant(SPEC, 1.5, 2.0)
    errors = []
    for eta in (0.2, 0.1, 0.05, 0.025):
        g = gamma_full(SPEC, omega=1.5, nu=2.0, eta=eta)
        errors.append([abs(x.real - y.real) for x, y in
                       zip(g.gamma_a + g.gamma_b, exact.gamma_a + exact.gamma_b)])
    errors = np.array(errors)
    assert np.all(errors[1:] <= 0.5 * errors[:-1])


def test_gamma_full_detailed_balance_small_eta():
    g = gamma_full(SPEC, omega=1.5, nu=2.0, eta=1e-4)
    for alpha in ALPHAS:
        big = 2.0 + alpha * 1.5
        ratio = g.a(alpha).real / g.b(alpha).real
        assert abs(ratio / math.exp(big) - 1) < 1e-6


def test_gamma_full_from_point_and_signs():
    point = MeanFieldPoint(0.2, 0.1, 0.3, 1.0)
    g = gamma_full(SPEC, point)
    omega, nu = pulsation(point)
    assert g == gamma_full(SPEC, omega=omega, nu=nu)
    for z in g.gamma_a + g.gamma_b:
        assert z.real >= -1e-12
    with pytest.raises(ValueError):
        gamma_full(SPEC)


def test_gammaset_helpers():
    g = GammaSet((1 + 2j, 3, 4), (5, 6j, 7))
    assert g.a(1) == 3 and g.b(0) == 5 and g.b(-1) == 7
    assert g.real().gamma_a[0] == 1
    assert g.scaled(2).gamma_b[1] == 12j
    assert GammaSet.zeros().gamma_a == (0, 0, 0)


def _dt_oracle(a, b, t, lam):
    big_a, big_b = a / lam**2, b / lam**2
    parts = [integrate.dblquad(lambda t2, t1, f=f: f(big_a * t1 - big_b * t2), 0, t, 0,
                               lambda t1: t1, epsabs=1e-13, epsrel=1e-12)[0]
             for f in (math.cos, math.sin)]
    return complex(*parts)


@pytest.mark.parametrize("a,b", [(0.3, 0.7), (0.5, 0.5), (-1.2, 0.4), (0.0, 0.0),
                                 (0.2, 1e-9), (1e-9, 0.0), (0.4, -0.4)])
def test_double_time_integral_against_quadrature(a, b):
    val = complex(double_time_integral(a, b, 2.0, 0.7))
    assert abs(val - _dt_oracle(a, b, 2.0, 0.7)) < 1e-12


def test_double_time_integral_branches_join():
    # just above and below the series switch |B| t = 1e-6
    a, t, lam = 0.37, 1.0, 1.0
    below = complex(double_time_integral(a, 0.99e-6, t, lam))
    above = complex(double_time_integral(a, 1.01e-6, t, lam))
    assert abs(below - above) < 1e-7


POINT = MeanFieldPoint(0.2, 0.1, 0.3, 1.0)


def test_second_order_converges_to_limit():
    tau = meanfield_state(POINT)
    limit = stochastic_limit_rate(POINT, gamma_full(SPEC, POINT, eta=0), tau)
    t = 10.0
    errs = [abs(second_order_term(SPEC, POINT, tau, lam, t) / t - limit) / abs(limit)
            for lam in (0.5, 0.2, 0.1, 0.05)]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert errs[-1] < 1e-3


def test_second_order_linear_in_time():
    tau = meanfield_state(POINT)
    i5 = second_order_term(SPEC, POINT, tau, 0.05, 5.0)
    i10 = second_order_term(SPEC, POINT, tau, 0.05, 10.0)
    assert abs(i10 / i5 - 2) < 2e-3


def test_cross_terms_vanish_in_meanfield_state():
    m = second_order_matrix(SPEC, POINT, meanfield_state(POINT), 0.2, 2.0)
    off = m[~np.eye(3, dtype=bool)]
    assert np.max(np.abs(off)) < 1e-12 * np.max(np.abs(m))


def test_cross_terms_suppressed_as_lambda_shrinks():
    rng = np.random.default_rng(7)
    z = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    state = z @ z.conj().T
    state /= np.trace(state)
    ratios = []
    for lam in (0.5, 0.2, 0.1, 0.05):
        m = second_order_matrix(SPEC, POINT, state, lam, 2.0)
        off = np.abs(m[~np.eye(3, dtype=bool)]).max()
        ratios.append(off / np.abs(np.diag(m)).max())
    assert all(b < a for a, b in zip(ratios, ratios[1:]))


def test_second_order_rejects_bad_arguments():
    with pytest.raises(ValueError):
        second_order_term(SPEC, POINT, meanfield_state(POINT), 0.0, 1.0)


def test_spec_validation():
    with pytest.raises(ValueError):
        ReservoirSpec(beta=0.0)
    with pytest.raises(ValueError):
        ReservoirSpec(beta=1.0, test_function="lorentz")
    with pytest.raises(ValueError):
        ReservoirSpec(beta=1.0, eta=-1.0)
    assert ReservoirSpec(beta=2.0, k_B=0.5).temperature == pytest.approx(1.0)
