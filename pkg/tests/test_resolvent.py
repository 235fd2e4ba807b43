import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import unitary_group

from mesormt.ensembles import EnsembleSpec, sample_wigner
from mesormt.resolvent import (PRODUCTS, DiagnosticsReport, ResolventPoint,
                               eigendecomposition, local_law_residuals, nu,
                               power_trace_bound_check, predict_g2fbar,
                               predict_g2fstar, product_trace,
                               product_trace_vs_prediction, resolvent_entries,
                               resolvent_trace, expectation_rows)
from mesormt.spectral import stieltjes_m


def test_trace_examples():
    assert resolvent_trace([0.4], 1j) == pytest.approx(1 / (0.4 - 1j))
    assert resolvent_trace([-1.0, 1.0], 1j) == pytest.approx(0.5j, abs=1e-15)
    with pytest.raises(ValueError):
        resolvent_trace([0.0], 2.0)


@given(st.lists(st.floats(-3, 3), min_size=1, max_size=8),
       st.floats(-2, 2), st.floats(0.01, 2))
def test_trace_conjugate_symmetry(ev, x, y):
    z = complex(x, y)
    assert resolvent_trace(ev, z.conjugate()) == pytest.approx(
        resolvent_trace(ev, z).conjugate(), rel=1e-14)


def test_entries_examples():
    assert np.allclose(resolvent_entries(np.zeros((2, 2)), 1j), 1j * np.eye(2))
    assert resolvent_entries([[0.5]], 1j)[0, 0] == pytest.approx(1 / (0.5 - 1j))
    G = resolvent_entries(np.diag([1.0, 2.0]), 3j)
    assert np.allclose(G, np.diag([1 / (1 - 3j), 1 / (2 - 3j)]))
    with pytest.raises(ValueError):
        resolvent_entries(np.zeros((2, 3)), 1j)


def test_point_validation():
    ResolventPoint(0.5 + 0.1j, -0.2 + 0.1j)
    for bad in (0.5, 11 + 1j, 1 + 20j):
        with pytest.raises(ValueError):
            ResolventPoint(bad)


def test_local_law_scalar_case():
    rep = local_law_residuals(np.zeros((1, 1)), 1j)
    assert rep["trace"].value == pytest.approx(abs(1 - (math.sqrt(5) - 1) / 2), rel=1e-12)
    assert rep["trace"].value == pytest.approx(0.382, abs=1e-3)
    assert rep["trace"].reference == 1.0


def test_unitary_invariance_of_trace():
    H = sample_wigner(EnsembleSpec(40, 0.3, master_seed=3), 0).entries
    U = unitary_group.rvs(40, random_state=1)
    z = 0.2 + 0.3j
    a = np.trace(resolvent_entries(H, z)) / 40
    b = np.trace(resolvent_entries(U @ H @ U.conj().T, z)) / 40
    assert abs(a - b) < 1e-10


def test_resolvent_identity():
    H = sample_wigner(EnsembleSpec(60, 0.0, master_seed=4), 1).entries
    z1, z2 = 0.1 + 0.2j, -0.3 + 0.5j
    G1, G2 = resolvent_entries(H, z1), resolvent_entries(H, z2)
    assert np.max(np.abs(G1 - G2 - (z1 - z2) * G1 @ G2)) < 1e-8


def test_eigenbasis_products_match_dense_products():
    H = sample_wigner(EnsembleSpec(30, 0.4, master_seed=8), 2).entries
    z, zp = 0.1 + 0.3j, -0.2 + 0.4j
    G, F = resolvent_entries(H, z), resolvent_entries(H, zp)
    dense = {"G2Fbar": G @ G @ F.conj(), "GFbar": G @ F.conj(), "GFt": G @ F.T,
             "G2Ft": G @ G @ F.T, "G2F": G @ G @ F, "G2Fstar": G @ G @ F.conj().T}
    dec = eigendecomposition(H)
    for name in PRODUCTS:
        assert product_trace(dec, z, zp, name) == pytest.approx(
            np.trace(dense[name]) / 30, rel=1e-9)
    with pytest.raises(ValueError):
        product_trace(dec, z, zp, "GF")


def test_real_symmetric_case():
    H = sample_wigner(EnsembleSpec(30, 1.0, master_seed=5), 0)
    G = resolvent_entries(H, 0.1 + 0.2j)
    assert np.allclose(G, G.T, atol=1e-13)
    dec = eigendecomposition(H)
    z, zp = 0.1 + 0.2j, 0.3 + 0.2j
    assert product_trace(dec, z, zp, "G2Fbar") == product_trace(dec, z, zp, "G2Fstar")
    assert nu(z, zp.conjugate(), 1.0) == z - zp.conjugate()


def test_predictions_coincide_at_sigma_one():
    z, zp = 0.05j, 0.05j
    assert predict_g2fbar(z, zp, 1.0) == pytest.approx(predict_g2fstar(z, zp))


def test_prediction_report():
    H = sample_wigner(EnsembleSpec(100, 0.9, master_seed=6), 0)
    z = 0.1j
    rep = product_trace_vs_prediction(H, z, z, PRODUCTS, 0.9)
    assert [r.check for r in rep.rows] == list(PRODUCTS)
    assert rep["G2Fbar"].kind == "prediction" and rep["GFt"].kind == "bound"
    with pytest.raises(ValueError):
        product_trace_vs_prediction(H, z, -z, "G2F", 0.9)


def test_power_trace_scalar_case():
    rep = power_trace_bound_check(np.zeros((1, 1)), 1j, 1)
    assert rep["diag_max"].value == pytest.approx(1.0)
    assert rep["diag_max"].ratio == pytest.approx(1.0)
    assert "offdiag_max" not in rep
    with pytest.raises(ValueError):
        power_trace_bound_check(np.zeros((1, 1)), 1j, 0)


def test_power_trace_bounds_hold_moderate_n():
    N = 200
    z = 1j * N ** -0.5
    spec = EnsembleSpec(N, 0.0, master_seed=12)
    reports = [power_trace_bound_check(sample_wigner(spec, i), z, 2) for i in range(5)]
    assert all(r["offdiag_max"].passes() and r["diag_max"].passes() for r in reports)
    per_sample, batch = expectation_rows(reports, z, N, 2)
    assert len(per_sample) == 5 and "mean_trace_G2" in batch


def test_report_validation():
    rep = DiagnosticsReport()
    with pytest.raises(ValueError):
        rep.add("x", "bound", 1.0, 0.0)
    rep.add("raw", "raw", 1.0, math.nan)
    assert rep["raw"].passes()
    with pytest.raises(KeyError):
        rep["missing"]


def test_stieltjes_consistency_of_trace_for_large_matrix():
    H = sample_wigner(EnsembleSpec(400, 0.0, master_seed=9), 0)
    rep = local_law_residuals(H, 0.3 + 0.5j)
    assert rep["trace"].passes() and rep["entry"].passes()
    assert abs(np.trace(resolvent_entries(H, 0.3 + 0.5j)) / 400 - stieltjes_m(0.3 + 0.5j)) < 0.05
