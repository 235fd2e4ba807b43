"""
Cumulant expansion of E f(h) h
==============================

For a complex random variable ``h`` the expectation ``E f(h, hbar) h`` can be
expanded in the ``(p, q)`` cumulants of ``h`` and Wirtinger derivatives of
``f``.  The expansion is exact for Gaussian ``h`` at first order and for
polynomial ``f`` once the order exceeds the degree; otherwise the gap
shrinks with the truncation order.
"""

import numpy as np

from mesormt.cumulants import (DiscreteLaw, GaussianLaw, HolomorphicMap, PolynomialMap,
                               expansion_check)

three_point = DiscreteLaw([1 + 1j, -0.5, 0.3 - 2j], [0.2, 0.5, 0.3])
print("cumulants C[p, q] up to order 3")
C = three_point.cumulants(3)
for p in range(4):
    print("  ".join(f"{C[p, q]:+.3f}" for q in range(4 - p)))

smooth = HolomorphicMap(
    lambda p, q, z1, z2: 0.7 ** p * (-0.4) ** q * np.exp(0.7 * z1 - 0.4 * z2))
for ell in range(1, 6):
    print(f"ell={ell}: gap {expansion_check(smooth, three_point, ell).gap:.2e}")

print("gaussian, ell=1:", expansion_check(smooth, GaussianLaw(0.7, 0.3), 1).gap)
cubic = PolynomialMap({(3, 0): 1.0, (1, 2): 2 - 1j})
print("rademacher, cubic f, ell=4:",
      expansion_check(cubic, DiscreteLaw([1.0, -1.0]), 4).gap)
