"""Test functions with exact derivatives, eigenvalues and linear statistics."""

from dataclasses import dataclass
import math
import warnings

import numpy as np
from numpy.polynomial import Polynomial, hermite
from scipy import integrate

from .spectral import compensator

__all__ = [
    "TestFunction",
    "builtin",
    "constant",
    "BUILTIN_NAMES",
    "SpectrumSample",
    "eigenvalues",
    "linear_statistic",
]

BUILTIN_NAMES = ("gauss", "bump", "poisson")


class TestFunction:
    """Real test function with analytic derivatives up to ``max_order``.

    Parameters
    ----------
    name : str
    derivative : callable
        ``derivative(x, n)`` returns the ``n``-th derivative on an array ``x``.
    max_order : int
        Highest derivative order available (at least 4).
    fourier : callable, optional
        ``xi -> int f(x) exp(-i xi x) dx``.
    support_radius : float
        Radius of a centred interval containing the support, or ``inf``.
    decay_exponent : float
        ``s`` such that ``|f| + |f'| = O((1 + |x|)^(-1 - s))``.
    is_constant : bool
        Marks constant functions, whose covariances vanish identically.
    """

    __test__ = False  # keep pytest from collecting the class

    def __init__(self, name, derivative, max_order, fourier=None,
                 support_radius=math.inf, decay_exponent=math.inf,
                 is_constant=False):
        if max_order < 4:
            raise ValueError("test functions need at least 4 derivatives")
        self.name = name
        self._derivative = derivative
        self.max_order = int(max_order)
        self.fourier = fourier
        self.support_radius = float(support_radius)
        self.decay_exponent = float(decay_exponent)
        self.is_constant = bool(is_constant)

    def __repr__(self):
        return f"TestFunction({self.name!r})"

    def __call__(self, x):
        return self.derivative(x, 0)

    def derivative(self, x, n):
        if not 0 <= n <= self.max_order:
            raise ValueError(
                f"{self.name}: derivative order {n} outside 0..{self.max_order}")
        x = np.asarray(x, dtype=float)
        out = np.asarray(self._derivative(x, int(n)), dtype=float)
        return out[()] if out.ndim == 0 else out

    def deriv(self, n):
        """The ``n``-th derivative as a callable."""
        if not 0 <= n <= self.max_order:
            raise ValueError(
                f"{self.name}: derivative order {n} outside 0..{self.max_order}")
        return lambda x: self.derivative(x, n)

    def affine(self, shift, scale):
        """The function ``x -> f((x - shift) / scale)``."""
        if scale <= 0:
            raise ValueError("scale must be positive")
        base = self

        def derivative(x, n):
            return scale ** (-n) * base.derivative((x - shift) / scale, n)

        fourier = None
        if base.fourier is not None:
            def fourier(xi):
                xi = np.asarray(xi, dtype=float)
                return scale * np.exp(-1j * xi * shift) * base.fourier(scale * xi)

        return TestFunction(f"{base.name}[({shift}, {scale})]", derivative,
                            base.max_order, fourier=fourier,
                            support_radius=abs(shift) + scale * base.support_radius,
                            decay_exponent=base.decay_exponent,
                            is_constant=base.is_constant)

    def __add__(self, other):
        a, b = self, other

        def derivative(x, n):
            return a.derivative(x, n) + b.derivative(x, n)

        fourier = None
        if a.fourier is not None and b.fourier is not None:
            def fourier(xi):
                return a.fourier(xi) + b.fourier(xi)

        return TestFunction(f"({a.name}+{b.name})", derivative,
                            min(a.max_order, b.max_order), fourier=fourier,
                            support_radius=max(a.support_radius, b.support_radius),
                            decay_exponent=min(a.decay_exponent, b.decay_exponent),
                            is_constant=a.is_constant and b.is_constant)

    def __mul__(self, c):
        c = float(c)
        base = self

        def derivative(x, n):
            return c * base.derivative(x, n)

        fourier = None
        if base.fourier is not None:
            def fourier(xi):
                return c * base.fourier(xi)

        return TestFunction(f"{c}*{base.name}", derivative, base.max_order,
                            fourier=fourier, support_radius=base.support_radius,
                            decay_exponent=base.decay_exponent,
                            is_constant=base.is_constant)

    __rmul__ = __mul__

    def decay_ratio(self, radius=1e3, points=20001):
        """``max (|f| + |f'|) (1 + |x|)^(1 + s)`` on a grid over ``[-radius, radius]``.

        For infinite ``s`` the exponent 8 is used as a stand-in for
        "faster than any power".
        """
        x = np.linspace(-radius, radius, points)
        s = self.decay_exponent if math.isfinite(self.decay_exponent) else 8.0
        with np.errstate(over="ignore", invalid="ignore"):
            vals = (np.abs(self(x)) + np.abs(self.derivative(x, 1))) \
                * (1.0 + np.abs(x)) ** (1.0 + s)
        return float(np.max(vals))

    def fourier_check(self, points=(-1.3, -0.4, 0.0, 0.5, 2.1)):
        """Max error of the inverse Fourier transform against ``f`` at ``points``."""
        if self.fourier is None:
            raise ValueError(f"{self.name} has no Fourier transform")
        err = 0.0
        for x in points:
            # f is real, so f_hat(-xi) = conj f_hat(xi).
            re = integrate.quad(
                lambda xi: (self.fourier(xi) * np.exp(1j * xi * x)).real,
                0.0, np.inf, limit=400, epsabs=1e-13, epsrel=1e-13)[0]
            err = max(err, abs(re / np.pi - float(self(x))))
        return err


def _gauss_derivative(x, n):
    coef = np.zeros(n + 1)
    coef[n] = 1.0
    return (-1) ** n * hermite.hermval(x, coef) * np.exp(-x * x)


def _bump_polys(order):
    # f^(n) = q_n(x) f(x) / (1 - x^2)^(2n) with
    # q_{n+1} = q_n' (1-x^2)^2 + 4 n x q_n (1-x^2) - 2 x q_n.
    one_minus = Polynomial([1.0, 0.0, -1.0])
    x = Polynomial([0.0, 1.0])
    polys = [Polynomial([1.0])]
    for n in range(order):
        q = polys[-1]
        polys.append(q.deriv() * one_minus ** 2 + 4 * n * x * q * one_minus
                     - 2 * x * q)
    return polys


_BUMP_ORDER = 10
_BUMP_POLYS = _bump_polys(_BUMP_ORDER)


def _bump_derivative(x, n):
    out = np.zeros_like(x, dtype=float)
    inside = np.abs(x) < 1.0
    xi = x[inside]
    t = 1.0 - xi * xi
    with np.errstate(divide="ignore", under="ignore"):
        out[inside] = _BUMP_POLYS[n](xi) * np.exp(-1.0 / t - 2 * n * np.log(t))
    return out


def _poisson_derivative(x, n):
    # 1/(1+x^2) = Im 1/(x - i)
    return ((-1) ** n * math.factorial(n) / (x - 1j) ** (n + 1)).imag


def builtin(name):
    """Catalog test function: ``gauss``, ``bump`` or ``poisson``.

    ``gauss`` is ``exp(-x^2)``, ``bump`` is ``exp(-1/(1-x^2))`` on ``(-1, 1)``,
    ``poisson`` is ``1/(1+x^2)`` (the imaginary part of ``1/(x - i)``).
    """
    if name == "gauss":
        return TestFunction(
            "gauss", _gauss_derivative, 12,
            fourier=lambda xi: np.sqrt(np.pi) * np.exp(-np.asarray(xi) ** 2 / 4),
        )
    if name == "bump":
        return TestFunction("bump", _bump_derivative, _BUMP_ORDER,
                            support_radius=1.0)
    if name == "poisson":
        return TestFunction(
            "poisson", _poisson_derivative, 12,
            fourier=lambda xi: np.pi * np.exp(-np.abs(np.asarray(xi))),
            decay_exponent=1.0,
        )
    raise KeyError(f"unknown test function {name!r}; choose from {BUILTIN_NAMES}")


def constant(c):
    """The constant function ``c`` (not integrable; no Fourier transform)."""
    c = float(c)

    def derivative(x, n):
        return np.full_like(x, c if n == 0 else 0.0, dtype=float)

    return TestFunction(f"const({c})", derivative, 64, decay_exponent=0.0,
                        is_constant=True)


@dataclass
class SpectrumSample:
    """Ascending eigenvalues, with the eigenpair residual bound when known."""

    eigenvalues: np.ndarray
    residual_bound: float = math.nan

    def __post_init__(self):
        ev = np.asarray(self.eigenvalues, dtype=float)
        if ev.ndim != 1:
            raise ValueError("eigenvalues must be a vector")
        self.eigenvalues = ev

    @property
    def N(self):
        return self.eigenvalues.size


def _as_array(H):
    return np.asarray(getattr(H, "entries", H))


def eigenvalues(H, check_residual=False, wigner_check=False, hermitian_tol=1e-12):
    """Eigenvalues of a Hermitian matrix, ascending.

    Parameters
    ----------
    H : HermitianMatrix or ndarray
    check_residual : bool
        Also compute eigenvectors and record ``max ||Hv - lam v|| / ||H||``.
    wigner_check : bool
        Warn when the spectrum leaves ``[-2.5, 2.5]``, which a correctly
        normalised Wigner matrix essentially never does.
    """
    A = _as_array(H)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("expected a square matrix")
    scale = max(1.0, float(np.max(np.abs(A)))) if A.size else 1.0
    if A.size and np.max(np.abs(A - A.conj().T)) > hermitian_tol * scale:
        raise ValueError("matrix is not Hermitian")
    if check_residual:
        lam, vecs = np.linalg.eigh(A)
        norm = max(np.linalg.norm(A, 2), np.finfo(float).tiny)
        res = np.linalg.norm(A @ vecs - vecs * lam, axis=0).max() / norm
        if res > 1e-10:
            raise ArithmeticError(f"eigensolver residual {res:.3e} exceeds 1e-10")
        out = SpectrumSample(lam, float(res))
    else:
        out = SpectrumSample(np.linalg.eigvalsh(A))
    if wigner_check and out.N and (out.eigenvalues[0] < -2.5
                                   or out.eigenvalues[-1] > 2.5):
        warnings.warn("spectrum extends beyond [-2.5, 2.5]; check normalisation",
                      RuntimeWarning, stacklevel=2)
    return out


def linear_statistic(spectrum, f, window, compensator_value=None):
    """``sum_i f((lambda_i - E) / eta)`` minus the semicircle compensator.

    ``compensator_value`` may be passed in when the same ``(f, window)`` is
    used for many spectra.
    """
    ev = spectrum.eigenvalues if isinstance(spectrum, SpectrumSample) \
        else np.asarray(spectrum, dtype=float)
    if ev.size != window.N:
        raise ValueError(f"spectrum has {ev.size} eigenvalues, window expects N={window.N}")
    if compensator_value is None:
        compensator_value = compensator(f, window)
    return float(np.sum(f((ev - window.E) / window.eta))) - compensator_value
