"""Bivariate cumulants of a complex variable and cumulant-expansion checks.

The ``(p, q)`` cumulant of ``h`` is the joint cumulant of ``p`` copies of
``h`` and ``q`` copies of ``conj(h)``, i.e. the Taylor coefficient of
``log E exp(i s h + i t conj(h))`` rescaled by ``(-i)^(p+q)``.  Tables are
``(K + 1) x (K + 1)`` complex arrays, meaningful for ``p + q <= K``.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy.special import comb

__all__ = [
    "MomentTable",
    "CumulantTable",
    "moments_to_cumulants",
    "cumulants_to_moments",
    "empirical_moments",
    "DiscreteLaw",
    "GaussianLaw",
    "PolynomialMap",
    "HolomorphicMap",
    "RealCoordinateMap",
    "wirtinger_coefficients",
    "expansion_check",
    "entry_cumulant_predictions",
]


def _check_conjugate_symmetric(t, K, what, tol):
    for p in range(K + 1):
        for q in range(K + 1 - p):
            if abs(t[q, p] - np.conj(t[p, q])) > tol * max(1.0, abs(t[p, q])):
                raise ValueError(f"{what}[{q}][{p}] != conj({what}[{p}][{q}])")


@dataclass
class MomentTable:
    """``m[p, q] = E h^p conj(h)^q`` for ``p + q <= order``."""

    order: int
    m: np.ndarray

    def __post_init__(self):
        self.m = np.asarray(self.m, dtype=complex)
        if self.m.shape != (self.order + 1, self.order + 1):
            raise ValueError("moment array must have shape (order+1, order+1)")
        if self.m[0, 0] != 1:
            raise ValueError("m[0][0] must equal 1")
        _check_conjugate_symmetric(self.m, self.order, "m", 1e-12)

    @property
    def is_real_law(self):
        """True when the table is that of a real random variable."""
        K = self.order
        if np.any(self.m.imag):
            return False
        for k in range(K + 1):
            row = [self.m[p, k - p] for p in range(k + 1)]
            if any(v != row[0] for v in row):
                return False
        return True


@dataclass
class CumulantTable:
    """``C[p, q]``: the ``(p, q)`` cumulant, for ``p + q <= order``."""

    order: int
    C: np.ndarray

    def __post_init__(self):
        self.C = np.asarray(self.C, dtype=complex)
        if self.C.shape != (self.order + 1, self.order + 1):
            raise ValueError("cumulant array must have shape (order+1, order+1)")
        _check_conjugate_symmetric(self.C, self.order, "C", 1e-9)

    def __getitem__(self, pq):
        p, q = pq
        if p + q > self.order:
            raise IndexError(f"cumulant ({p}, {q}) beyond order {self.order}")
        return self.C[p, q]


def _univariate_cumulants(mom):
    # kappa_n = m_n - sum_{k=1}^{n-1} C(n-1, k-1) kappa_k m_{n-k}
    K = len(mom) - 1
    kap = np.zeros(K + 1, dtype=complex)
    for n in range(1, K + 1):
        kap[n] = mom[n] - sum(comb(n - 1, k - 1, exact=True) * kap[k] * mom[n - k]
                              for k in range(1, n))
    return kap


def _recursion_term(table, other, p, q):
    """Sum of the bivariate recursion excluding the ``(0, 0)`` term.

    For ``p >= 1``:
    ``m[p,q] = sum_{i<p, j<=q} C(p-1,i) C(q,j) kappa[p-i, q-j] m[i, j]``;
    for ``p = 0`` the roles of the indices are swapped.  ``table`` holds the
    ``m`` values and ``other`` the ``kappa`` values.
    """
    s = 0j
    if p >= 1:
        for i in range(p):
            for j in range(q + 1):
                if i == 0 and j == 0:
                    continue
                s += comb(p - 1, i, exact=True) * comb(q, j, exact=True) \
                    * other[p - i, q - j] * table[i, j]
    else:
        for j in range(1, q):
            s += comb(q - 1, j, exact=True) * other[0, q - j] * table[0, j]
    return s


def moments_to_cumulants(m):
    """Convert a :class:`MomentTable` to a :class:`CumulantTable`.

    Real laws go through the univariate recursion so that ``C[p, q]`` depends
    on ``p + q`` only, exactly.  The lower triangle is filled by conjugation
    and the diagonal is made real, so ``C[q, p] = conj(C[p, q])`` is exact.
    """
    if not isinstance(m, MomentTable):
        raise TypeError("expected a MomentTable")
    K = m.order
    C = np.zeros((K + 1, K + 1), dtype=complex)
    if m.is_real_law:
        kap = _univariate_cumulants([m.m[n, 0] for n in range(K + 1)])
        for p in range(K + 1):
            for q in range(K + 1 - p):
                C[p, q] = kap[p + q].real
        return CumulantTable(K, C)
    for k in range(1, K + 1):
        for p in range(k, -1, -1):
            q = k - p
            if p < q:
                C[p, q] = np.conj(C[q, p])
                continue
            C[p, q] = m.m[p, q] - _recursion_term(m.m, C, p, q)
            if p == q:
                C[p, q] = C[p, q].real
    return CumulantTable(K, C)


def cumulants_to_moments(c):
    """Inverse of :func:`moments_to_cumulants`."""
    K = c.order
    M = np.zeros((K + 1, K + 1), dtype=complex)
    M[0, 0] = 1.0
    for k in range(1, K + 1):
        for p in range(k, -1, -1):
            q = k - p
            if p < q:
                M[p, q] = np.conj(M[q, p])
                continue
            M[p, q] = c.C[p, q] + _recursion_term(M, c.C, p, q)
            if p == q:
                M[p, q] = M[p, q].real
    return MomentTable(K, M)


def empirical_moments(samples, order):
    """Sample moment table ``mean(h^p conj(h)^q)`` of complex samples."""
    h = np.asarray(samples, dtype=complex).ravel()
    M = np.zeros((order + 1, order + 1), dtype=complex)
    powers = [np.ones_like(h)]
    for _ in range(order):
        powers.append(powers[-1] * h)
    cpow = [p.conj() for p in powers]
    for p in range(order + 1):
        for q in range(order + 1 - p):
            M[p, q] = np.mean(powers[p] * cpow[q]) if p + q else 1.0
    # Exact conjugate symmetry despite summation order.
    for p in range(order + 1):
        for q in range(p + 1, order + 1 - p):
            M[p, q] = np.conj(M[q, p])
    M[np.diag_indices(order + 1)] = M.diagonal().real
    return MomentTable(order, M)


# -- laws --------------------------------------------------------------------

class DiscreteLaw:
    """Finitely supported complex law; expectations by exact enumeration."""

    def __init__(self, values, probs=None):
        self.values = np.asarray(values, dtype=complex)
        if probs is None:
            probs = np.full(self.values.size, 1.0 / self.values.size)
        self.probs = np.asarray(probs, dtype=float)
        if self.probs.shape != self.values.shape or np.any(self.probs < 0):
            raise ValueError("probs must be nonnegative and match values")
        if not math.isclose(self.probs.sum(), 1.0, rel_tol=1e-12):
            raise ValueError("probabilities must sum to 1")

    @property
    def is_real(self):
        return not np.any(self.values.imag)

    def expect(self, fn):
        """``E fn(h)`` where ``fn`` maps an array of ``h`` values to values."""
        return complex(np.sum(self.probs * fn(self.values)))

    def moments(self, order):
        v = self.values
        M = np.zeros((order + 1, order + 1), dtype=complex)
        for p in range(order + 1):
            for q in range(order + 1 - p):
                if self.is_real:
                    M[p, q] = np.sum(self.probs * v.real ** (p + q))
                else:
                    M[p, q] = np.sum(self.probs * v ** p * v.conj() ** q)
        for p in range(order + 1):
            for q in range(p + 1, order + 1 - p):
                M[p, q] = np.conj(M[q, p])
        M[np.diag_indices(order + 1)] = M.diagonal().real
        M[0, 0] = 1.0
        return MomentTable(order, M)

    def cumulants(self, order):
        return moments_to_cumulants(self.moments(order))


class GaussianLaw:
    """Centred complex Gaussian ``a + i b`` with independent parts.

    Expectations use a tensor Gauss-Hermite rule (1D when ``var_im == 0``).
    """

    def __init__(self, var_re, var_im, nodes=60):
        if var_re < 0 or var_im < 0 or var_re + var_im == 0:
            raise ValueError("variances must be nonnegative and not both zero")
        self.var_re = float(var_re)
        self.var_im = float(var_im)
        t, w = np.polynomial.hermite.hermgauss(nodes)
        w = w / math.sqrt(math.pi)
        a = math.sqrt(2 * self.var_re) * t
        if self.var_im == 0:
            self._h = a.astype(complex)
            self._w = w
        elif self.var_re == 0:
            self._h = 1j * math.sqrt(2 * self.var_im) * t
            self._w = w
        else:
            b = math.sqrt(2 * self.var_im) * t
            self._h = (a[:, None] + 1j * b[None, :]).ravel()
            self._w = (w[:, None] * w[None, :]).ravel()

    @property
    def is_real(self):
        return self.var_im == 0

    def expect(self, fn):
        return complex(np.sum(self._w * fn(self._h)))

    def cumulants(self, order):
        C = np.zeros((order + 1, order + 1), dtype=complex)
        if order >= 2:
            C[2, 0] = C[0, 2] = self.var_re - self.var_im
            C[1, 1] = self.var_re + self.var_im
        return CumulantTable(order, C)


# -- test maps f(h, conj h) ----------------------------------------------------

class PolynomialMap:
    """``f(z1, z2) = sum c[a, b] z1^a z2^b`` with exact derivatives."""

    max_order = math.inf

    def __init__(self, coeffs):
        self.coeffs = {tuple(k): complex(v) for k, v in dict(coeffs).items()}

    def derivative(self, p, q, h):
        h = np.asarray(h, dtype=complex)
        z1, z2 = h, h.conj()
        out = np.zeros_like(h)
        for (a, b), c in self.coeffs.items():
            if a < p or b < q:
                continue
            fa = math.perm(a, p)
            fb = math.perm(b, q)
            out = out + c * fa * fb * z1 ** (a - p) * z2 ** (b - q)
        return out


class HolomorphicMap:
    """``f`` given through ``derivative(p, q, z1, z2)`` supplied by the caller."""

    def __init__(self, derivative, max_order=math.inf):
        self._derivative = derivative
        self.max_order = max_order

    def derivative(self, p, q, h):
        if p + q > self.max_order:
            raise ValueError(f"derivative order {p + q} beyond {self.max_order}")
        h = np.asarray(h, dtype=complex)
        return self._derivative(p, q, h, h.conj())


def wirtinger_coefficients(p, q):
    """Expand ``d_z^p d_zbar^q`` into real partials.

    Returns ``{(a, b): c}`` with ``d_z^p d_zbar^q = sum c d_x^a d_y^b``, using
    ``d_z = (d_x - i d_y)/2`` and ``d_zbar = (d_x + i d_y)/2``.
    """
    poly = {(0, 0): 1.0 + 0j}
    for step in [(1, -0.5j)] * p + [(1, 0.5j)] * q:
        new = {}
        for (a, b), c in poly.items():
            new[(a + 1, b)] = new.get((a + 1, b), 0) + 0.5 * c
            new[(a, b + 1)] = new.get((a, b + 1), 0) + step[1] * c
        poly = new
    return {k: v for k, v in poly.items() if v != 0}


_FD_STEP = 1e-4


def _fd_partial(func, a, b, x, y, h=_FD_STEP):
    """Central-difference real partial ``d_x^a d_y^b func`` for ``a + b <= 2``."""
    if a + b == 0:
        return func(x, y)
    if (a, b) == (1, 0):
        return (func(x + h, y) - func(x - h, y)) / (2 * h)
    if (a, b) == (0, 1):
        return (func(x, y + h) - func(x, y - h)) / (2 * h)
    if (a, b) == (2, 0):
        return (func(x + h, y) - 2 * func(x, y) + func(x - h, y)) / h ** 2
    if (a, b) == (0, 2):
        return (func(x, y + h) - 2 * func(x, y) + func(x, y - h)) / h ** 2
    if (a, b) == (1, 1):
        return (func(x + h, y + h) - func(x + h, y - h)
                - func(x - h, y + h) + func(x - h, y - h)) / (4 * h * h)
    raise ValueError("finite differences only up to total order 2")


class RealCoordinateMap:
    """``f`` given as a function of ``(x, y) = (Re h, Im h)``.

    Wirtinger derivatives come from real partials: the caller's
    ``partials[(a, b)]`` when supplied, otherwise central differences with
    step ``1e-4`` (error ``O(1e-8)``, total order at most 2).  Complex-step
    differentiation is not used because the maps are not holomorphic.
    """

    def __init__(self, func, partials=None):
        self.func = func
        self.partials = dict(partials or {})

    @property
    def max_order(self):
        if not self.partials:
            return 2
        return max(a + b for a, b in self.partials)

    def _partial(self, a, b, x, y):
        if a + b == 0:
            return self.func(x, y)
        if (a, b) in self.partials:
            return self.partials[(a, b)](x, y)
        if a + b <= 2 and not self.partials:
            return _fd_partial(self.func, a, b, x, y)
        raise ValueError(f"partial derivative ({a}, {b}) not available")

    def derivative(self, p, q, h):
        h = np.asarray(h, dtype=complex)
        x, y = h.real, h.imag
        out = np.zeros_like(h)
        for (a, b), c in wirtinger_coefficients(p, q).items():
            out = out + c * self._partial(a, b, x, y)
        return out


@dataclass
class ExpansionCheck:
    lhs: complex
    rhs: complex
    gap: float


def expansion_check(f, law, ell, mode="standard"):
    """Compare both sides of the truncated cumulant expansion.

    ``standard``: ``E f h`` against
    ``sum_{p+q<=ell} C[p+1, q] / (p! q!) E f^(p,q)``;
    ``imaginary``: ``E f (h - conj h)`` against the same sum with weights
    ``C[p+1, q] - C[p, q+1]``.  The remainder is not bounded, only the
    realised gap is reported.
    """
    if mode not in ("standard", "imaginary"):
        raise ValueError(f"unknown mode {mode!r}")
    if ell < 0:
        raise ValueError("ell must be nonnegative")
    if ell > getattr(f, "max_order", math.inf):
        raise ValueError(f"map supports derivatives up to order {f.max_order}")
    C = law.cumulants(ell + 1)
    if mode == "standard":
        lhs = law.expect(lambda h: f.derivative(0, 0, h) * h)
    else:
        lhs = law.expect(lambda h: f.derivative(0, 0, h) * (h - h.conj()))
    rhs = 0j
    for k in range(ell + 1):
        for p in range(k + 1):
            q = k - p
            weight = C[p + 1, q]
            if mode == "imaginary":
                weight = weight - C[p, q + 1]
            if weight == 0:
                continue
            rhs += weight / (math.factorial(p) * math.factorial(q)) \
                * law.expect(lambda h, p=p, q=q: f.derivative(p, q, h))
    return ExpansionCheck(complex(lhs), complex(rhs), float(abs(lhs - rhs)))


def entry_cumulant_predictions(sigma, N):
    """Second-order cumulant differences of a Wigner entry and related sizes."""
    if not -1.0 <= sigma <= 1.0:
        raise ValueError(f"sigma must lie in [-1, 1], got {sigma}")
    if N < 1:
        raise ValueError("N must be positive")
    return {
        "C20_minus_C11": (sigma - 1.0) / N,
        "C11_minus_C02": (1.0 - sigma) / N,
        "Eb2": (1.0 - sigma) / (2.0 * N),
        "third_order_bound": math.sqrt(1.0 - sigma) * N ** -1.5,
    }
