"""Resolvents of sampled matrices and checks against local-law asymptotics.

Every check returns a :class:`DiagnosticsReport`, a labelled list of rows.
A row compares an empirical value with a reference: a control parameter
(``residual``), a magnitude bound (``bound``) or a leading-order prediction
(``prediction``).  Stochastic-domination bounds hide ``N^eps`` factors, so
callers compare ``ratio`` with a slack factor (10 in the shipped checks)
and ask for a quantile of samples rather than all of them.
"""

from dataclasses import dataclass, field
import math

import numpy as np
from scipy import linalg

from .spectral import stieltjes_m
from .teststats import SpectrumSample
from .variance_kernel import chi

__all__ = [
    "ResolventPoint",
    "DiagnosticRow",
    "DiagnosticsReport",
    "Eigendecomposition",
    "PRODUCTS",
    "resolvent_trace",
    "resolvent_entries",
    "local_law_residuals",
    "nu",
    "predict_g2fbar",
    "predict_g2fstar",
    "eigendecomposition",
    "product_trace",
    "product_trace_vs_prediction",
    "power_trace_bound_check",
    "expectation_rows",
]

PRODUCTS = ("G2Fbar", "GFbar", "GFt", "G2Ft", "G2F", "G2Fstar")


@dataclass(frozen=True)
class ResolventPoint:
    """Spectral point ``z`` with an optional second point ``z'``."""

    z: complex
    zprime: complex = None

    def __post_init__(self):
        for w in (self.z, self.zprime):
            if w is None:
                continue
            w = complex(w)
            if not (abs(w.real) <= 10 and 0 < abs(w.imag) <= 10):
                raise ValueError(f"spectral point {w} outside |Re| <= 10, 0 < |Im| <= 10")


@dataclass
class DiagnosticRow:
    check: str
    kind: str            # residual | bound | prediction | raw
    value: complex
    reference: complex
    ratio: float         # |value|/reference, or relative error for predictions

    def passes(self, slack=10.0):
        return self.kind == "raw" or self.ratio <= slack


@dataclass
class DiagnosticsReport:
    rows: list = field(default_factory=list)

    def add(self, check, kind, value, reference):
        if kind == "prediction":
            ratio = abs(value - reference) / abs(reference)
        elif kind == "raw":
            ratio = math.nan
        else:
            if not reference > 0:
                raise ValueError(f"{check}: control parameter must be positive")
            ratio = abs(value) / reference
        self.rows.append(DiagnosticRow(check, kind, value, reference, float(ratio)))

    def __getitem__(self, check):
        for r in self.rows:
            if r.check == check:
                return r
        raise KeyError(check)

    def __contains__(self, check):
        return any(r.check == check for r in self.rows)

    def extend(self, other):
        self.rows.extend(other.rows)
        return self


def _check_z(z):
    z = complex(z)
    if z.imag == 0:
        raise ValueError("spectral parameter must have nonzero imaginary part")
    return z


def _matrix(H):
    A = np.asarray(getattr(H, "entries", H))
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("expected a square matrix")
    return A


def resolvent_trace(spectrum, z):
    """Normalised trace ``(1/N) sum_i 1/(lambda_i - z)`` from eigenvalues."""
    z = _check_z(z)
    ev = spectrum.eigenvalues if isinstance(spectrum, SpectrumSample) \
        else np.asarray(spectrum, dtype=float)
    return complex(np.mean(1.0 / (ev - z)))


def resolvent_entries(H, z, tol=1e-9):
    """``G = (H - z)^{-1}`` by a direct solve, with ``||(H - z)G - I||_max`` checked."""
    z = _check_z(z)
    A = _matrix(H)
    n = A.shape[0]
    Az = A - z * np.eye(n)
    eye = np.eye(n, dtype=complex)
    G = linalg.solve(Az, eye, check_finite=False)
    res = np.max(np.abs(Az @ G - eye))
    if not res <= tol:
        raise ArithmeticError(f"resolvent residual {res:.2e} exceeds {tol:.0e}")
    return G


def local_law_residuals(H, z, G=None):
    """Entrywise and trace distance of ``G(z)`` from ``m(z)``, with controls.

    Rows ``entry`` (control ``sqrt(Im m/(N eta)) + 1/(N eta)``) and ``trace``
    (control ``1/(N eta)``).
    """
    z = _check_z(z)
    A = _matrix(H)
    n = A.shape[0]
    if G is None:
        G = resolvent_entries(A, z)
    m = stieltjes_m(z)
    eta = abs(z.imag)
    neta = n * eta
    diag = np.diagonal(G)
    off = np.abs(G - np.diag(diag))
    entry = max(float(np.max(np.abs(diag - m))), float(np.max(off)) if n > 1 else 0.0)
    trace = abs(np.mean(diag) - m)
    rep = DiagnosticsReport()
    rep.add("entry", "residual", entry, math.sqrt(abs(m.imag) / neta) + 1.0 / neta)
    rep.add("trace", "residual", trace, 1.0 / neta)
    return rep


def nu(z, zbar_prime, sigma):
    """``z - zbar' + (1 - sigma)(m(z) - m(zbar'))``."""
    return z - zbar_prime + (1.0 - sigma) * (stieltjes_m(z) - stieltjes_m(zbar_prime))


def predict_g2fbar(z, zp, sigma):
    """Leading term ``-nu^{-2}(m(z) - m(zbar'))`` of the mean of ``tr(G^2 Fbar)/N``."""
    zb = np.conj(zp)
    return complex(-(stieltjes_m(z) - stieltjes_m(zb)) / nu(z, zb, sigma) ** 2)


def predict_g2fstar(z, zp):
    """Leading term ``-(z - zbar')^{-2}(m(z) - m(zbar'))`` of the mean of ``tr(G^2 F*)/N``."""
    zb = np.conj(zp)
    return complex(-(stieltjes_m(z) - stieltjes_m(zb)) / (z - zb) ** 2)


@dataclass
class Eigendecomposition:
    """``H = U diag(lam) U*``; ``overlap`` caches ``|U^T U|^2`` (complex ``H`` only)."""

    lam: np.ndarray
    U: np.ndarray
    overlap: np.ndarray = None

    @property
    def is_real(self):
        return not np.iscomplexobj(self.U)

    def transpose_overlap(self):
        if self.is_real:
            return None
        if self.overlap is None:
            W = self.U.T @ self.U
            self.overlap = (W.real ** 2 + W.imag ** 2)
        return self.overlap


def eigendecomposition(H):
    A = _matrix(H)
    lam, U = linalg.eigh(A, driver="evr", check_finite=False)
    return Eigendecomposition(lam, U)


def product_trace(dec, z, zp, which):
    """Normalised trace of a resolvent product from an eigendecomposition.

    With ``g = 1/(lam - z)``, ``f = 1/(lam - z')`` and ``P = |U^T U|^2``
    (elementwise): ``tr(G^a Fbar) = g^a P fbar``, ``tr(G^a F^T) = g^a P f``,
    ``tr(G^2 F) = sum g^2 f`` and ``tr(G^2 F*) = sum g^2 fbar``.  For real
    ``H`` the eigenvectors are real, ``P`` is the identity and ``Fbar = F*``,
    ``F^T = F`` hold exactly.
    """
    if which not in PRODUCTS:
        raise ValueError(f"unknown product {which!r}; choose from {PRODUCTS}")
    n = dec.lam.size
    g = 1.0 / (dec.lam - z)
    f = 1.0 / (dec.lam - zp)
    g_pow = g if which in ("GFbar", "GFt") else g * g
    if which == "G2F":
        return complex(np.sum(g_pow * f) / n)
    if which == "G2Fstar":
        return complex(np.sum(g_pow * f.conj()) / n)
    right = f.conj() if which in ("G2Fbar", "GFbar") else f
    P = dec.transpose_overlap()
    if P is None:
        return complex(np.sum(g_pow * right) / n)
    return complex(g_pow @ (P @ right) / n)


def _alpha(n, eta):
    if n == 1:
        return 0.5    # every power of N is 1
    return -math.log(eta) / math.log(n)


def product_trace_vs_prediction(H, z, zp, which, sigma, dec=None):
    """Empirical normalised trace of resolvent products against asymptotics.

    ``which`` is one name from :data:`PRODUCTS` or a sequence of them.
    ``G2Fbar`` and ``G2Fstar`` rows are ``prediction`` rows against the
    leading terms; the others are ``bound`` rows against the magnitudes
    ``N^alpha`` (GFbar), ``N^(alpha - chi)`` (GFt) and ``N^(2 alpha - chi)``
    (G2Ft, G2F), where ``alpha = -log(Im z)/log N``.
    """
    z, zp = _check_z(z), _check_z(zp)
    if z.imag <= 0 or zp.imag <= 0:
        raise ValueError("both spectral points need positive imaginary part")
    if not -1.0 <= sigma <= 1.0:
        raise ValueError(f"sigma must lie in [-1, 1], got {sigma}")
    names = (which,) if isinstance(which, str) else tuple(which)
    if dec is None:
        dec = eigendecomposition(H)
    elif H is not None and _matrix(H).shape[0] != dec.lam.size:
        raise ValueError("decomposition does not match the matrix dimension")
    n = dec.lam.size
    alpha = _alpha(n, z.imag)
    c = chi(alpha)
    bounds = {"GFbar": n ** alpha, "GFt": n ** (alpha - c),
              "G2Ft": n ** (2 * alpha - c), "G2F": n ** (2 * alpha - c)}
    rep = DiagnosticsReport()
    for name in names:
        value = product_trace(dec, z, zp, name)
        if name == "G2Fbar":
            rep.add(name, "prediction", value, predict_g2fbar(z, zp, sigma))
        elif name == "G2Fstar":
            rep.add(name, "prediction", value, predict_g2fstar(z, zp))
        else:
            rep.add(name, "bound", value, bounds[name])
    return rep


def power_trace_bound_check(H, z, k, G=None):
    """Entry sizes of ``G^k`` against their bounds, plus raw traces.

    ``bound`` rows: ``diag_max`` against ``N^((k-1) alpha)`` and
    ``offdiag_max`` against ``N^((k-1) alpha - (1 - alpha)/2)``.  ``raw``
    rows ``trace_Gk``, ``trace_G`` and ``trace_G2`` hold normalised traces
    for the expectation checks of :func:`expectation_rows`.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    z = _check_z(z)
    A = _matrix(H)
    n = A.shape[0]
    if G is None:
        G = resolvent_entries(A, z)
    alpha = _alpha(n, abs(z.imag))
    Gk = np.linalg.matrix_power(G, k)
    diag = np.diagonal(Gk)
    rep = DiagnosticsReport()
    rep.add("diag_max", "bound", float(np.max(np.abs(diag))), n ** ((k - 1) * alpha))
    if n > 1:
        off = float(np.max(np.abs(Gk - np.diag(diag))))
        rep.add("offdiag_max", "bound", off,
                n ** ((k - 1) * alpha - 0.5 * (1 - alpha)))
    rep.add("trace_Gk", "raw", complex(np.mean(diag)), math.nan)
    rep.add("trace_G", "raw", complex(np.trace(G) / n), math.nan)
    G2 = Gk if k == 2 else G @ G
    rep.add("trace_G2", "raw", complex(np.trace(G2) / n), math.nan)
    return rep


def expectation_rows(reports, z, N, k):
    """Checks that need the batch mean as the expectation proxy.

    Returns one report per sample with a ``trace_Gk_centred`` bound row
    (``|<G^k> - mean| <= N^((k-1) alpha - (1 - alpha))``) and one batch
    report with ``mean_trace_G2`` (``N^(alpha - chi)``) and
    ``mean_trace_G_minus_m`` (``N^(alpha - 1 - chi)``).
    """
    z = _check_z(z)
    alpha = _alpha(N, abs(z.imag))
    c = chi(alpha)
    tk = np.array([r["trace_Gk"].value for r in reports])
    per_sample = []
    for v in tk:
        rep = DiagnosticsReport()
        rep.add("trace_Gk_centred", "bound", abs(v - tk.mean()),
                N ** ((k - 1) * alpha - (1 - alpha)))
        per_sample.append(rep)
    batch = DiagnosticsReport()
    mean_g2 = np.mean([r["trace_G2"].value for r in reports])
    mean_g = np.mean([r["trace_G"].value for r in reports])
    batch.add("mean_trace_G2", "bound", abs(mean_g2), N ** (alpha - c))
    batch.add("mean_trace_G_minus_m", "bound", abs(mean_g - stieltjes_m(z)),
              N ** (alpha - 1 - c))
    return per_sample, batch
