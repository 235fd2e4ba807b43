"""
Limiting variance across the symmetry transition
================================================

The variance of a mesoscopic linear statistic interpolates between the
real-symmetric value ``V_0`` and half of it as the transition parameter
``mu`` grows.  Here we tabulate ``V_mu`` for two test functions, compare the
direct quadrature with the Fourier-side evaluation and split the kernel into
its two pieces.
"""

import math

from mesormt import builtin, v_first_term, v_mu, v_mu_fourier, v_tilde

gauss = builtin("gauss")
poisson = builtin("poisson")

# V_mu for a handful of transition parameters; the last column is the
# Fourier-side value, computed independently of the direct quadrature
print(f"{'mu':>8} {'V_mu(gauss)':>14} {'fourier':>14} {'V_mu(poisson)':>14}")
for mu in (0.0, 0.5, 1.0, 2.0, 5.0, 20.0, math.inf):
    direct = v_mu(gauss, gauss, mu).value
    fourier = v_mu_fourier(gauss, gauss, mu).value
    print(f"{mu:8g} {direct:14.10f} {fourier:14.10f} {v_mu(poisson, poisson, mu).value:14.10f}")

# the two endpoints: 1/pi and 1/(2 pi) for gauss
print("V_0 * pi     =", v_mu(gauss, gauss, 0.0).value * math.pi)
print("V_inf / V_0  =", v_mu(gauss, gauss, math.inf).value / v_mu(gauss, gauss, 0.0).value)

# at large mu the first kernel term dies out and the comparison kernel
# carries everything that is left
for mu in (10.0, 100.0, 1000.0):
    first = v_first_term(gauss, mu).value
    rest = v_tilde(gauss, mu).value
    print(f"mu={mu:6g}  first term {first:.3e}  comparison part {rest:.6f}")
