"""Limiting covariance of mesoscopic linear statistics.

All covariance functionals here have the form

    (1/4 pi^2) * int int (f(x) - f(y)) (g(x) - g(y)) K(x - y) dx dy

with an even kernel ``K``.  Writing ``u = x - y`` turns this into
``(1/2 pi^2) int_0^inf K(u) I(u) du`` with
``I(u) = int (f(x) - f(x-u)) (g(x) - g(x-u)) dx``.

* For ``u <= U`` we integrate ``u^2 K(u)`` (bounded) against the integral of
  divided differences ``(f(x) - f(x-u)) / u``, so the diagonal ``u = 0`` is a
  removable point that Gauss nodes never touch; below ``u = 1e-3`` the
  divided difference is replaced by its Taylor polynomial.
* For ``u > U`` we use ``I(u) = 2 <f, g> - C(u) - C(-u)`` with the
  cross-correlation ``C(u) = int f(x) g(x-u) dx``.  The constant part is
  integrated in closed form, the correlation part after ``u = U / t``.

Nothing is truncated.  The error estimate is the difference between
Gauss-Legendre orders 16 and 24 on the same panels.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy import integrate

from .quadrature import geometric_edges, half_line_rule, panel_rule, real_line_rule

__all__ = [
    "KernelParams",
    "CovarianceResult",
    "QuadratureError",
    "v_mu",
    "v_mu_alt",
    "v_tilde",
    "v_first_term",
    "v_mu_fourier",
    "mu_star",
    "chi",
]


class QuadratureError(ArithmeticError):
    """Raised when the error estimate exceeds the tolerance.

    ``partial`` holds the :class:`CovarianceResult` that was obtained.
    """

    def __init__(self, message, partial):
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True)
class KernelParams:
    """Transition parameter and quadrature controls.

    ``cutoff_radius`` is the split ``U`` between the divided-difference
    region and the correlation region; it does not truncate anything.
    """

    mu: float = 0.0
    quad_tolerance: float = 1e-9
    cutoff_radius: float = 4.0

    def __post_init__(self):
        if not self.mu >= 0:
            raise ValueError(f"mu must be nonnegative, got {self.mu}")
        if not self.quad_tolerance > 0:
            raise ValueError("quad_tolerance must be positive")
        if not self.cutoff_radius >= 3.0:
            raise ValueError("cutoff_radius must be at least 3")


@dataclass(frozen=True)
class CovarianceResult:
    value: float
    est_error: float


# Kernels are handled through w(u) = u^2 K(u) and the tail T(U) = int_U^inf K.

def _atan_ratio(mu, U):
    # atan(mu / U) / mu, continuous at mu = 0
    return 1.0 / U if mu == 0 else math.atan(mu / U) / mu


def _kernel(kind, mu):
    """Return ``(w, tail)`` for the named kernel at transition parameter ``mu``."""
    inf = math.isinf(mu)
    m2 = mu * mu
    if kind == "v_mu":
        if inf:
            return (lambda u: np.ones_like(u)), (lambda U: 1.0 / U)

        def w(u):
            u2 = u * u
            return 1.0 + u2 * (u2 - m2) / (u2 + m2) ** 2
        return w, (lambda U: 1.0 / U + U / (U * U + m2))
    if kind == "alt":
        if inf:
            return (lambda u: np.ones_like(u)), (lambda U: 1.0 / U)

        def w(u):
            u2 = u * u
            return 2.0 * u2 * u2 / (u2 + m2) ** 2 + m2 / (u2 + m2)
        return w, (lambda U: (_atan_ratio(mu, U) + U / (U * U + m2))
                   + (1.0 / U - _atan_ratio(mu, U)))
    if kind == "tilde":
        if inf:
            return (lambda u: np.ones_like(u)), (lambda U: 1.0 / U)

        def w(u):
            return m2 / (u * u + m2)
        return w, (lambda U: 1.0 / U - _atan_ratio(mu, U))
    if kind == "first":
        if inf:
            return (lambda u: np.zeros_like(u)), (lambda U: 0.0)

        def w(u):
            u2 = u * u
            return 2.0 * u2 * u2 / (u2 + m2) ** 2
        return w, (lambda U: _atan_ratio(mu, U) + U / (U * U + m2))
    raise ValueError(f"unknown kernel {kind!r}")


_TAYLOR_CUT = 1e-3


def _divided_difference(f, x, u):
    """``(f(x) - f(x - u)) / u`` on the broadcast grid of ``x`` and ``u``."""
    small = u < _TAYLOR_CUT
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = (f(x) - f(x - u)) / u
    if not np.any(small):
        return direct
    # f' - u f''/2 + u^2 f'''/6 - u^3 f''''/24
    taylor = (f.derivative(x, 1) - u * f.derivative(x, 2) / 2
              + u * u * f.derivative(x, 3) / 6
              - u ** 3 * f.derivative(x, 4) / 24)
    return np.where(small, taylor, direct)


def _is_constant(f):
    return getattr(f, "is_constant", False)


def _near_part(f, g, w, mu, U, order):
    # the kernel is bounded, so structure below u ~ 1e-10 carries O(1e-10)
    h0 = 1e-2 * min(1.0, max(mu, 1e-8)) if 0 < mu < math.inf else 1e-2
    count = max(4, int(math.ceil(math.log2(U / h0))))
    edges = np.concatenate([[0.0], geometric_edges(h0, U, count)])
    u, wu = panel_rule(edges, order)
    core = 0.5 * U + 3.0
    x, wx = real_line_rule(core, order=order, core_panels=int(8 * core),
                           centre=0.5 * U)
    X = x[None, :]
    Uc = u[:, None]
    df = _divided_difference(f, X, Uc)
    dg = df if g is f else _divided_difference(g, X, Uc)
    J = (df * dg) @ wx
    return wu @ (w(u) * J)


def _correlation_sum(f, g, u, order):
    """``C(u) + C(-u)`` for ``u >= 3`` (all four half-line pieces)."""
    x, wx = half_line_rule(1.5, 0.5 * u, order=order)
    uc = u[:, None]
    total = (f(x) * g(x - uc)          # x < u/2 part of C(u)
             + f(uc - x) * g(-x)       # x > u/2 part of C(u)
             + f(-x) * g(uc - x)       # x > -u/2 part of C(-u)
             + f(x - uc) * g(x))       # x < -u/2 part of C(-u)
    return np.sum(total * wx, axis=1)


def _far_part(f, g, w, tail, U, order):
    x, wx = real_line_rule(4.0, order=order, core_panels=32)
    inner = float(wx @ (f(x) * g(x)))
    t_min = 1e-6
    edges = np.concatenate([[0.0], geometric_edges(t_min, 1.0, 20)])
    t, wt = panel_rule(edges, order)
    u = U / t
    corr = _correlation_sum(f, g, u, order)
    return 2.0 * inner * tail(U) - wt @ (w(u) / U * corr)


def _quadrature(f, g, kind, params):
    mu = params.mu
    if _is_constant(f) or _is_constant(g):
        return CovarianceResult(0.0, 0.0)
    w, tail = _kernel(kind, mu)
    U = params.cutoff_radius
    values = []
    for order in (16, 24):
        total = _near_part(f, g, w, mu, U, order) + _far_part(f, g, w, tail, U, order)
        values.append(total / (2.0 * np.pi ** 2))
    res = CovarianceResult(float(values[1]), float(abs(values[1] - values[0])))
    if res.est_error > params.quad_tolerance * max(1.0, abs(res.value)):
        raise QuadratureError(
            f"{kind} quadrature error estimate {res.est_error:.2e} exceeds "
            f"tolerance {params.quad_tolerance:.1e}", res)
    return res


def _params(p):
    if isinstance(p, KernelParams):
        return p
    return KernelParams(mu=float(p))


def v_mu(f, g, p):
    """Limiting covariance ``V_mu(f, g)``.

    ``p`` is a :class:`KernelParams` or a bare ``mu``.  ``mu = inf`` is
    evaluated as exactly half of ``V_0``.
    """
    p = _params(p)
    if math.isinf(p.mu):
        zero = KernelParams(0.0, p.quad_tolerance, p.cutoff_radius)
        r = _quadrature(f, g, "v_mu", zero)
        return CovarianceResult(0.5 * r.value, 0.5 * r.est_error)
    return _quadrature(f, g, "v_mu", p)


def v_mu_alt(f, p):
    """``V_mu(f, f)`` from the rewritten kernel
    ``2u^2/(u^2+mu^2)^2 + mu^2/(u^2 (u^2+mu^2))``."""
    return _quadrature(f, f, "alt", _params(p))


def v_tilde(f, p):
    """Comparison variance with kernel ``mu^2 / (u^2 (u^2 + mu^2))``
    (deterministic initial data for the Dyson flow)."""
    return _quadrature(f, f, "tilde", _params(p))


def v_first_term(f, p):
    """Contribution of the ``2u^2/(u^2+mu^2)^2`` kernel alone."""
    return _quadrature(f, f, "first", _params(p))


def v_mu_fourier(f, g, mu):
    """Fourier-side evaluation of ``V_mu(f, g)``.

    ``(1/4 pi^2) int |xi| Re(f_hat conj(g_hat)) (1 + exp(-mu |xi|)) dxi``,
    with ``f_hat(xi) = int f(x) exp(-i xi x) dx``.  Independent of the
    direct quadrature; needs both transforms.
    """
    if f.fourier is None or g.fourier is None:
        raise ValueError("v_mu_fourier needs Fourier transforms of both functions")
    mu = float(mu)

    def integrand(xi):
        prod = (f.fourier(xi) * np.conj(g.fourier(xi))).real
        damp = 0.0 if math.isinf(mu) else math.exp(-mu * xi)
        return xi * prod * (1.0 + damp)

    val, err = integrate.quad(integrand, 0.0, np.inf, limit=500,
                              epsabs=1e-14, epsrel=1e-12)
    return CovarianceResult(val / (2.0 * np.pi ** 2), err / (2.0 * np.pi ** 2))


def mu_star(E, sigma, eta, mode="static"):
    """Transition parameter for an observation window at energy ``E``.

    ``static``: ``sqrt(4 - E^2) (1 - sigma) / eta``.  For the Dyson modes the
    ``sigma`` slot carries the flow time ``t``: ``dbm_beta2`` gives
    ``t sqrt(4 - E^2) / eta`` (real symmetric start, complex noise) and
    ``dbm_beta1`` gives ``sqrt(4 - E^2) exp(-t) / eta`` (complex start,
    real noise).
    """
    if not -2.0 < E < 2.0:
        raise ValueError(f"E must lie in (-2, 2), got {E}")
    if not eta > 0:
        raise ValueError("eta must be positive")
    width = math.sqrt(4.0 - E * E)
    if mode == "static":
        if not -1.0 <= sigma <= 1.0:
            raise ValueError(f"sigma must lie in [-1, 1], got {sigma}")
        return width * (1.0 - sigma) / eta
    t = sigma
    if not t >= 0:
        raise ValueError(f"flow time must be nonnegative, got {t}")
    if mode == "dbm_beta2":
        return math.inf if math.isinf(t) else t * width / eta
    if mode == "dbm_beta1":
        return 0.0 if math.isinf(t) else width * math.exp(-t) / eta
    raise ValueError(f"unknown mode {mode!r}")


def chi(alpha):
    """``min(alpha, 1 - alpha) / 2``."""
    return 0.5 * min(alpha, 1.0 - alpha)
