"""Desk-scale acceptance runs, one test per criterion.

Each test records a one-line verdict (printed in the terminal summary) and
then asserts it.  Tolerances are three standard errors unless a criterion
states otherwise.  The full file takes well over an hour on one core; set
MESORMT_WORKERS to parallelise the Monte Carlo runs.
"""

import math
import time

import numpy as np
import pytest

from mesormt import cli
from mesormt.contour import DEFAULT_RESOLUTION, cauchy_reconstruct
from mesormt.cumulants import (DiscreteLaw, PolynomialMap, cumulants_to_moments,
                               expansion_check, moments_to_cumulants)
from mesormt.ensembles import EnsembleSpec, dbm_matrix, entry_moment_report, sample_wigner
from mesormt.harness import (ExperimentConfig, run_clt, run_dbm_sweep, run_diagnostics,
                             run_transition_sweep)
from mesormt.spectral import MesoWindow, semicircle_density, stieltjes_m
from mesormt.teststats import builtin
from mesormt.variance_kernel import v_first_term, v_mu, v_mu_alt, v_tilde

pytestmark = pytest.mark.acceptance

N_MESO = 1000
ETA = N_MESO ** -0.5
GAUSS, POISSON, BUMP = builtin("gauss"), builtin("poisson"), builtin("bump")
V0 = v_mu(GAUSS, GAUSS, 0.0).value


def _within(value, target, se, k=3.0):
    return abs(value - target) <= k * se


def _config(sigma, samples, functions=("gauss",), sweep=None, seed=20240601, out=None):
    return ExperimentConfig(EnsembleSpec(N_MESO, sigma), MesoWindow(0.0, N_MESO, eta=ETA),
                            list(functions), samples, sweep=sweep, seed=seed,
                            output_path=out)


def test_exact_identities(verdict):
    start = time.perf_counter()
    checks = {}
    checks["rho(0)"] = abs(semicircle_density(0.0) - 1 / math.pi) <= 1e-12
    checks["m(i)"] = abs(stieltjes_m(1j) - 1j * (math.sqrt(5) - 1) / 2) <= 1e-12
    for mu in (0.1, 1.0, 10.0):
        a, b = v_mu_alt(GAUSS, mu).value, v_mu(GAUSS, GAUSS, mu).value
        checks[f"alt mu={mu}"] = abs(a - b) <= 1e-8 * abs(b)
        split = v_first_term(GAUSS, mu).value + v_tilde(GAUSS, mu).value
        checks[f"split mu={mu}"] = abs(split - b) <= 1e-8 * abs(b)
    for f in (GAUSS, POISSON):
        r0, rinf = v_mu(f, f, 0.0), v_mu(f, f, math.inf)
        checks[f"halving {f.name}"] = (abs(rinf.value - r0.value / 2)
                                       <= r0.est_error + rinf.est_error)
    law = DiscreteLaw([1 + 1j, -0.5, 0.3 - 2j], [0.2, 0.5, 0.3])
    m = law.moments(6)
    back = cumulants_to_moments(moments_to_cumulants(m))
    checks["round trip"] = np.max(np.abs(back.m - m.m)) <= 1e-12
    rad = DiscreteLaw([1.0, -1.0])
    poly = PolynomialMap({(3, 0): 1.0, (1, 2): 2 - 1j, (0, 1): 0.5})
    r = expansion_check(poly, rad, 3, "imaginary")
    checks["real-h zero"] = r.lhs == 0 and r.rhs == 0
    checks["rademacher C4"] = rad.cumulants(4)[4, 0] == -2
    elapsed = time.perf_counter() - start
    failed = [k for k, ok in checks.items() if not ok]
    ok = not failed and elapsed < 60
    verdict(1, ok, f"{len(checks) - len(failed)}/{len(checks)} identities, {elapsed:.1f}s"
            + (f", failed: {failed}" if failed else ""))
    assert ok


def test_cauchy_reconstruction(verdict):
    start = time.perf_counter()
    worst, monotone = 0.0, True
    for f in (GAUSS, BUMP):
        for lam in (0.0, 0.7):
            exact = float(f(lam))
            r = cauchy_reconstruct(f, lam, 0.2, 3, DEFAULT_RESOLUTION)
            worst = max(worst, abs(r.value - exact))
            errs = [abs(cauchy_reconstruct(f, lam, 0.2, 3, n, check=False).value - exact)
                    for n in (1, 2, 3, 4)]
            monotone &= all(a > b for a, b in zip(errs, errs[1:]))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-6 and monotone and elapsed < 120
    verdict(2, ok, f"max error {worst:.1e} at resolution {DEFAULT_RESOLUTION}, "
            f"monotone refinement {monotone}, {elapsed:.1f}s")
    assert ok


def test_sampler_moments(verdict):
    start = time.perf_counter()
    parts = []
    ok = True
    for sigma in (-1.0, -0.5, 0.0, 0.5, 1.0):
        rep = entry_moment_report(EnsembleSpec(200, sigma, master_seed=31), 500)
        good = (_within(rep.abs2, 1.0, rep.abs2_se)
                and _within(rep.square.real, sigma, rep.square_se.real)
                and _within(rep.square.imag, 0.0, rep.square_se.imag))
        ok &= good
        parts.append(f"s={sigma:+.1f}:{'ok' if good else 'BAD'}")
    spec = EnsembleSpec(200, 1.0, master_seed=32)
    rep = entry_moment_report(
        spec, 500, sampler=lambda k: dbm_matrix(sample_wigner(spec, k), 0.5, 2, k, 32))
    dbm_ok = _within(rep.square.real, math.exp(-0.5), rep.square_se.real)
    elapsed = time.perf_counter() - start
    ok = ok and dbm_ok and elapsed < 300
    verdict(3, ok, " ".join(parts) + f" dbm(t=0.5): {rep.square.real:.4f} vs "
            f"{math.exp(-0.5):.4f} +- {3 * rep.square_se.real:.4f}, {elapsed:.0f}s")
    assert ok


@pytest.fixture(scope="module")
def gue_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("gue") / "gue.csv"
    return run_clt(_config(0.0, 2000, ("gauss", "poisson"), out=str(out)))


def test_gue_variance(gue_run, verdict):
    r = gue_run
    target = v_mu(GAUSS, GAUSS, math.inf).value
    var_ok = _within(r.var[0], target, r.se["var"][0])
    kurt_ok = abs(r.kurt[0]) <= 3 * r.se["kurt"][0]
    ks_ok = r.ks_stat[0] < r.ks_critical
    ok = var_ok and kurt_ok and ks_ok
    verdict(4, ok, f"var {r.var[0]:.4f} vs V0/2 {target:.4f} +- {3 * r.se['var'][0]:.4f}; "
            f"kurt {r.kurt[0]:+.3f} (3SE {3 * r.se['kurt'][0]:.3f}); "
            f"KS {r.ks_stat[0]:.4f} < {r.ks_critical:.4f}")
    assert ok


def test_goe_variance(verdict):
    r = run_clt(_config(1.0, 2000))
    ok = _within(r.var[0], V0, r.se["var"][0])
    verdict(5, ok, f"var {r.var[0]:.4f} vs V0 {V0:.4f} +- {3 * r.se['var'][0]:.4f} "
            f"(mu*={r.mu_star:g})")
    assert ok


def test_transition_sweep(verdict):
    sigmas = [1 - 4 * ETA, 1 - 2 * ETA, 1 - ETA, 1 - ETA / 2]
    reports = run_transition_sweep(_config(0.0, 1000, sweep={"kind": "sigma",
                                                             "values": sigmas}))
    parts, ok = [], True
    for r in reports:
        pred = r.predicted["gauss"]
        good = _within(r.var[0], pred, r.se["var"][0])
        ok &= good
        parts.append(f"mu*={r.mu_star:.2f}: {r.var[0]:.4f} vs {pred:.4f}"
                     f"{'' if good else ' BAD'}")
    by_mu = sorted(reports, key=lambda r: r.mu_star)
    decreasing = all(a.var[0] > b.var[0] for a, b in zip(by_mu, by_mu[1:]))
    ok = ok and decreasing
    verdict(6, ok, "; ".join(parts) + f"; decreasing in mu* {decreasing}")
    assert ok


def test_dbm_corollary(verdict):
    times = [ETA, 4 * ETA, math.inf]
    reports = run_dbm_sweep(_config(1.0, 1000, sweep={"kind": "dbm", "values": times,
                                                      "beta": 2}))
    parts, ok = [], True
    for t, r in zip(times, reports):
        expected_mu = math.inf if math.isinf(t) else 2 * t / ETA
        pred = v_mu(GAUSS, GAUSS, expected_mu).value
        good = (_within(r.var[0], pred, r.se["var"][0])
                and (r.mu_star == expected_mu or math.isclose(r.mu_star, expected_mu)))
        ok &= good
        parts.append(f"mu*={r.mu_star:g}: {r.var[0]:.4f} vs {pred:.4f}"
                     f"{'' if good else ' BAD'}")
    verdict(7, ok, "; ".join(parts))
    assert ok


def test_gue_covariance(gue_run, verdict):
    r = gue_run
    target = v_mu(GAUSS, POISSON, math.inf).value
    ok = _within(r.cov, target, r.se["cov"])
    verdict(8, ok, f"cov {r.cov:.4f} vs V_inf(gauss, poisson) {target:.4f} "
            f"+- {3 * r.se['cov']:.4f}")
    assert ok


def test_product_predictions(verdict):
    errors = {}
    for N in (500, 2000):
        eta = N ** -0.5
        spec = EnsembleSpec(N, 1 - eta, master_seed=4242)
        run = run_diagnostics(spec, 1j * eta, 1j * eta, samples=50, checks=("products",))
        errors[N] = {c: run.mean_prediction_error(c) for c in ("G2Fbar", "G2Fstar")}
    ok = all(errors[2000][c] <= 0.2 and errors[2000][c] < errors[500][c]
             for c in ("G2Fbar", "G2Fstar"))
    verdict(9, ok, "; ".join(f"{c}: {errors[500][c]:.4f} (N=500) -> "
                             f"{errors[2000][c]:.4f} (N=2000)"
                             for c in ("G2Fbar", "G2Fstar")))
    assert ok


def test_local_law_bounds(verdict):
    spec = EnsembleSpec(N_MESO, 0.0, master_seed=777)
    run = run_diagnostics(spec, 1j * ETA, samples=100, checks=("local_law", "power_trace"),
                          k=2)
    fractions = {}
    for fam, checks in (("local_law", ("entry", "trace")),
                        ("power_trace", ("diag_max", "offdiag_max", "trace_Gk_centred"))):
        for c in checks:
            fractions[c] = run.pass_fraction(fam, c)
    batch = {r.check: r.ratio for r in run.batch["power_trace"].rows}
    ok = all(v >= 0.95 for v in fractions.values()) and all(v <= 10 for v in batch.values())
    verdict(10, ok, ", ".join(f"{c} {v:.0%}" for c, v in fractions.items())
            + ", " + ", ".join(f"{c} ratio {v:.2f}" for c, v in batch.items()))
    assert ok


def test_determinism(tmp_path, verdict, capsys):
    outs = []
    for workers in (1, 4):
        path = tmp_path / f"w{workers}.csv"
        code = cli.main(["--seed", "123456789", "--workers", str(workers), "clt",
                         "--N", "200", "--samples", "64", "--functions", "gauss",
                         "poisson", "--out", str(path)])
        assert code == cli.EXIT_OK
        outs.append(path.read_bytes())
    capsys.readouterr()
    ok = outs[0] == outs[1]
    verdict(11, ok, f"workers 1 vs 4 CSV byte-identical: {ok} ({len(outs[0])} bytes)")
    assert ok
