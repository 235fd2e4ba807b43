import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from mesormt.spectral import MesoWindow, compensator, semicircle_density, stieltjes_m
from mesormt.teststats import TestFunction, builtin


def test_density_values():
    assert semicircle_density(0.0) == pytest.approx(1 / math.pi, abs=1e-15)
    assert semicircle_density(2.0) == 0.0
    assert semicircle_density(-2.0) == 0.0
    assert semicircle_density(1.0) == pytest.approx(math.sqrt(3) / (2 * math.pi), abs=1e-15)
    assert semicircle_density(3.0) == 0.0


def test_density_integrates_to_one():
    val, _ = integrate.quad(semicircle_density, -2, 2, epsabs=1e-14)
    assert abs(val - 1) < 1e-12


def test_stieltjes_reference_values():
    assert abs(stieltjes_m(1j) - 1j * (math.sqrt(5) - 1) / 2) < 1e-12
    assert abs(stieltjes_m(2j) - 1j * (math.sqrt(2) - 1)) < 1e-12


def test_stieltjes_rejects_real_axis():
    with pytest.raises(ValueError):
        stieltjes_m(0.5)


finite = st.floats(-10, 10, allow_nan=False)
imag = st.floats(1e-3, 10).flatmap(lambda y: st.sampled_from([y, -y]))


@given(finite, imag)
def test_stieltjes_root_branch_and_symmetry(x, y):
    z = complex(x, y)
    m = stieltjes_m(z)
    assert abs(m * m + z * m + 1) <= 1e-12 * max(1, abs(z))
    assert m.imag * z.imag > 0
    assert abs(stieltjes_m(-z.conjugate()) + m.conjugate()) < 1e-13


def test_stieltjes_approaches_density():
    for E in (-1.5, 0.0, 0.7):
        errs = [abs(stieltjes_m(complex(E, eta)).imag - math.pi * semicircle_density(E))
                for eta in (1e-1, 1e-2, 1e-3)]
        assert errs[0] > errs[1] > errs[2]
        assert errs[2] < 5e-3


def test_window_validation():
    w = MesoWindow(0.0, 1000, alpha=0.5)
    assert w.eta == pytest.approx(1000 ** -0.5)
    for kwargs in ({"E": 2.0, "N": 10, "eta": 0.1}, {"E": 0.0, "N": 10, "eta": 0.0},
                   {"E": 0.0, "N": 10, "alpha": 1.0}, {"E": 0.0, "N": 10}):
        with pytest.raises(ValueError):
            MesoWindow(**kwargs)


def _zero():
    return TestFunction("zero", lambda x, n: np.zeros_like(x), 6)


def test_compensator_trivial_cases():
    w = MesoWindow(0.0, 100, eta=0.1)
    assert compensator(_zero(), w) == 0.0
    odd = TestFunction("odd", lambda x, n: x * np.exp(-x * x), 4)
    assert abs(compensator(odd, w)) < 1e-10 * w.N


def test_compensator_against_adaptive_oracle():
    f = builtin("gauss")
    w = MesoWindow(0.0, 1000, eta=0.05)
    oracle, _ = integrate.quad(lambda x: semicircle_density(x) * math.exp(-(x / 0.05) ** 2),
                               -2, 2, points=[0.0], epsabs=1e-14, epsrel=1e-13, limit=500)
    assert compensator(f, w) == pytest.approx(1000 * oracle, rel=1e-8)


def test_compensator_non_finite():
    bad = TestFunction("bad", lambda x, n: np.full_like(x, np.nan), 4)
    with pytest.raises(FloatingPointError):
        compensator(bad, MesoWindow(0.0, 10, eta=0.5))
