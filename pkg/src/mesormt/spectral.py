"""Semicircle-law quantities: density, Stieltjes transform, compensator."""

from dataclasses import dataclass
import math

import numpy as np

from .quadrature import panel_rule

__all__ = [
    "MesoWindow",
    "semicircle_density",
    "stieltjes_m",
    "compensator",
]


@dataclass(frozen=True)
class MesoWindow:
    """Observation window ``(E, eta)`` for an ``N x N`` matrix.

    Either ``eta`` or ``alpha`` must be given; with ``alpha`` the scale is
    ``eta = N ** -alpha``.
    """

    E: float
    N: int
    eta: float = None
    alpha: float = None

    def __post_init__(self):
        if self.eta is None and self.alpha is None:
            raise ValueError("MesoWindow needs eta or alpha")
        if self.alpha is not None:
            if not 0.0 < self.alpha < 1.0:
                raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
            eta = float(self.N) ** (-self.alpha)
            if self.eta is not None and not math.isclose(self.eta, eta,
                                                         rel_tol=1e-12):
                raise ValueError("eta and alpha are inconsistent")
            object.__setattr__(self, "eta", eta)
        if not -2.0 < self.E < 2.0:
            raise ValueError(f"E must lie in (-2, 2), got {self.E}")
        if not 0.0 < self.eta <= 10.0:
            raise ValueError(f"eta must lie in (0, 10], got {self.eta}")
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N}")

    @property
    def z(self):
        """The spectral parameter ``E + i eta``."""
        return complex(self.E, self.eta)

    def to_dict(self):
        d = {"E": self.E, "N": self.N, "eta": self.eta}
        if self.alpha is not None:
            d["alpha"] = self.alpha
        return d


def semicircle_density(x):
    """Semicircle density ``sqrt((4 - x^2)_+) / (2 pi)``; works on arrays."""
    x = np.asarray(x, dtype=float)
    out = np.sqrt(np.clip(4.0 - x * x, 0.0, None)) / (2.0 * np.pi)
    return out[()] if out.ndim == 0 else out


def stieltjes_m(z):
    """Stieltjes transform of the semicircle law.

    Returns the root of ``m^2 + z m + 1 = 0`` whose imaginary part has the
    sign of ``Im z``.  The branch is picked by testing both roots rather than
    trusting the principal square root.  Accepts scalars or arrays.
    """
    z = np.asarray(z, dtype=complex)
    if np.any(z.imag == 0):
        raise ValueError("stieltjes_m is undefined on the real axis")
    s = np.sqrt(z * z - 4.0)
    m1 = 0.5 * (-z + s)
    m2 = 0.5 * (-z - s)
    # Larger root is free of cancellation; the roots multiply to 1.
    big = np.where(np.abs(m1) >= np.abs(m2), m1, m2)
    small = 1.0 / big
    m = np.where(big.imag * z.imag > 0, big, small)
    return m[()] if m.ndim == 0 else m


def _compensator_integral(f, E, eta, panels, order):
    # x = 2 cos(theta):  int rho(x) g(x) dx = (2/pi) int_0^pi sin^2 g(2 cos) dtheta
    theta, w = panel_rule(np.linspace(0.0, np.pi, panels + 1), order)
    x = 2.0 * np.cos(theta)
    vals = f((x - E) / eta)
    if not np.all(np.isfinite(vals)):
        raise FloatingPointError("test function returned non-finite values")
    return (2.0 / np.pi) * (w @ (np.sin(theta) ** 2 * vals))


def compensator(f, window, tol=1e-10, order=20, max_panels=1 << 16):
    """``N * int rho(x) f((x - E) / eta) dx`` for a test function ``f``.

    The integral is computed in the angle variable ``x = 2 cos(theta)``, which
    removes the square-root edges.  The panel count is doubled until two
    successive values agree to ``tol`` (absolute, before the factor ``N``);
    at least three doublings are always allowed.
    """
    E, eta, N = window.E, window.eta, window.N
    # Start with panels no wider than the window in theta.
    panels = max(8, int(2 ** math.ceil(math.log2(max(1.0, 4.0 / eta)))))
    prev = _compensator_integral(f, E, eta, panels, order)
    limit = max(max_panels, 8 * panels)
    while panels < limit:
        panels *= 2
        cur = _compensator_integral(f, E, eta, panels, order)
        if abs(cur - prev) < tol:
            return float(N * cur)
        prev = cur
    raise ArithmeticError("compensator quadrature did not converge")
