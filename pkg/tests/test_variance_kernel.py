import math

import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import erfcx

from mesormt.teststats import builtin, constant
from mesormt.variance_kernel import (KernelParams, QuadratureError, chi, mu_star,
                                     v_first_term, v_mu, v_mu_alt, v_mu_fourier,
                                     v_tilde)

GAUSS, POISSON, BUMP = builtin("gauss"), builtin("poisson"), builtin("bump")

# Closed forms of the Fourier representation, worked out by hand for
# gauss = exp(-x^2) (transform sqrt(pi) exp(-xi^2/4)) and
# poisson = 1/(1+x^2) (transform pi exp(-|xi|)).


def gauss_closed(mu):
    if math.isinf(mu):
        return 0.5 / math.pi
    tail = 1.0 - mu * math.sqrt(math.pi / 2) * erfcx(mu / math.sqrt(2))
    return (1.0 + tail) / (2.0 * math.pi)


def poisson_closed(mu):
    extra = 0.0 if math.isinf(mu) else 1.0 / (2.0 + mu) ** 2
    return 0.5 * (0.25 + extra)


def rel(a, b):
    return abs(a - b) / abs(b)


def test_frozen_endpoint_values():
    assert v_mu(GAUSS, GAUSS, 0.0).value == pytest.approx(1 / math.pi, rel=1e-9)
    assert v_mu(GAUSS, GAUSS, math.inf).value == pytest.approx(0.5 / math.pi, rel=1e-9)
    assert v_mu(POISSON, POISSON, 0.0).value == pytest.approx(0.25, rel=1e-9)
    assert v_mu(GAUSS, POISSON, math.inf).value == pytest.approx(0.136606, abs=1e-6)


@pytest.mark.parametrize("mu", [0.0, 0.3, 1.0, 4.0, 25.0])
def test_closed_forms(mu):
    assert rel(v_mu(GAUSS, GAUSS, mu).value, gauss_closed(mu)) < 1e-8
    assert rel(v_mu(POISSON, POISSON, mu).value, poisson_closed(mu)) < 1e-8


def test_constant_function_gives_zero():
    c = constant(2.5)
    assert v_mu(c, GAUSS, 1.0).value == 0.0
    assert v_mu(GAUSS, c, 0.0).value == 0.0
    assert v_mu_alt(c, 1.0).value == 0.0


def test_infinity_is_half_of_zero():
    for f in (GAUSS, POISSON, BUMP):
        r0, rinf = v_mu(f, f, 0.0), v_mu(f, f, math.inf)
        assert abs(rinf.value - r0.value / 2) <= r0.est_error + rinf.est_error + 1e-15


@pytest.mark.parametrize("f", [GAUSS, POISSON])
@pytest.mark.parametrize("mu", [0.0, 0.5, 2.0, math.inf])
def test_fourier_oracle_agreement(f, mu):
    assert rel(v_mu(f, f, mu).value, v_mu_fourier(f, f, mu).value) < 1e-6


def test_fourier_oracle_cross_term():
    for mu in (0.0, 1.0):
        direct = v_mu(GAUSS, POISSON, mu).value
        assert rel(direct, v_mu_fourier(GAUSS, POISSON, mu).value) < 1e-6


def test_fourier_oracle_requires_transform():
    with pytest.raises(ValueError):
        v_mu_fourier(BUMP, BUMP, 0.0)


@pytest.mark.parametrize("mu", [0.1, 1.0, 10.0])
def test_rewritten_kernel_matches(mu):
    assert rel(v_mu_alt(GAUSS, mu).value, v_mu(GAUSS, GAUSS, mu).value) < 1e-8


def test_first_kernel_term_vanishes():
    vals = [v_first_term(GAUSS, mu).value for mu in (10.0, 100.0, 1000.0)]
    assert vals[0] > vals[1] > vals[2] > 0


def test_comparison_variance():
    assert v_tilde(GAUSS, 0.0).value == 0.0
    for mu in (0.5, 3.0):
        split = v_first_term(GAUSS, mu).value + v_tilde(GAUSS, mu).value
        assert rel(split, v_mu(GAUSS, GAUSS, mu).value) < 1e-8


def tilde_gap_closed(mu):
    # V_inf - V~_mu for gauss: the kernel difference 1/(u^2 + mu^2) has
    # transform (pi/mu) exp(-mu |xi|), giving an exact 1/mu tail.
    return math.sqrt(math.pi / 2) * (1 - erfcx(mu / math.sqrt(2))) / (2 * math.pi * mu)


@pytest.mark.parametrize("mu", [1.0, 10.0, 1e3, 1e4])
def test_comparison_variance_approaches_half(mu):
    vinf = v_mu(GAUSS, GAUSS, math.inf).value
    gap = vinf - v_tilde(GAUSS, mu).value
    assert gap == pytest.approx(tilde_gap_closed(mu), rel=1e-7)
    if mu >= 1e4:
        assert gap / vinf < 1e-3


@pytest.mark.parametrize("f", [GAUSS, POISSON])
def test_monotone_in_mu(f):
    grid = [0.0, 0.5, 1.0, 2.0, 5.0, 10.0, math.inf]
    res = [v_mu(f, f, mu) for mu in grid]
    for a, b in zip(res, res[1:]):
        assert a.value >= b.value - (a.est_error + b.est_error)


@settings(max_examples=15)
@given(st.floats(0.0, 20.0), st.floats(-2.0, 2.0), st.floats(0.3, 3.0))
def test_symmetric_and_bilinear(mu, s, scale):
    fg = v_mu(GAUSS, POISSON, mu).value
    assert fg == pytest.approx(v_mu(POISSON, GAUSS, mu).value, rel=1e-10)
    h = GAUSS.affine(0.0, scale)
    combo = v_mu(GAUSS + s * h, POISSON, mu).value
    parts = fg + s * v_mu(h, POISSON, mu).value
    assert combo == pytest.approx(parts, rel=1e-7, abs=1e-10)


def test_parameter_validation():
    with pytest.raises(ValueError):
        KernelParams(mu=-1.0)
    with pytest.raises(ValueError):
        KernelParams(cutoff_radius=1.0)


def test_tolerance_failure_reports_partial():
    with pytest.raises(QuadratureError) as info:
        v_mu(BUMP, BUMP, KernelParams(0.0, quad_tolerance=1e-30))
    assert info.value.partial.value > 0


def test_mu_star_examples():
    eta = 1000 ** -0.5
    assert mu_star(0.0, 1 - eta, eta) == pytest.approx(2.0)
    assert mu_star(0.4, 1.0, eta) == 0.0
    assert mu_star(0.0, eta, eta, "dbm_beta2") == pytest.approx(2.0)
    assert mu_star(0.0, math.inf, eta, "dbm_beta2") == math.inf
    assert mu_star(0.0, math.inf, eta, "dbm_beta1") == 0.0
    assert mu_star(1.0, 0.5, 0.1, "dbm_beta1") == pytest.approx(
        math.sqrt(3) * math.exp(-0.5) / 0.1)
    for bad in [(2.0, 0.0, 0.1), (0.0, 1.5, 0.1), (0.0, 0.0, 0.0)]:
        with pytest.raises(ValueError):
            mu_star(*bad)


def test_chi():
    assert chi(0.5) == 0.25
    assert chi(0.2) == pytest.approx(0.1)
    assert chi(0.8) == pytest.approx(0.1)
