"""
Watching the variance drop across the transition
================================================

We sample Wigner matrices whose entries interpolate between real and
complex (``E (sqrt(N) H_ij)^2 = sigma``) and measure the fluctuation of a
mesoscopic linear statistic at the centre of the spectrum.  As ``sigma``
moves away from 1 on the scale of the window ``eta`` the variance falls from
``V_0`` towards ``V_0 / 2``.  The sample sizes are kept small so this runs in
about a minute; the acceptance suite repeats it at ``N = 1000``.
"""

from mesormt import EnsembleSpec, ExperimentConfig, MesoWindow, run_transition_sweep

N = 300
window = MesoWindow(E=0.0, N=N, alpha=0.5)
eta = window.eta
sigmas = [1.0, 1 - eta / 2, 1 - 2 * eta, 0.0]

config = ExperimentConfig(EnsembleSpec(N, 1.0), window, ["gauss"], samples=200,
                          sweep={"kind": "sigma", "values": sigmas}, seed=7)
print(f"{'sigma':>8} {'mu*':>8} {'empirical':>10} {'3 SE':>8} {'predicted':>10}")
for r in run_transition_sweep(config):
    print(f"{r.sweep_value:8.4f} {r.mu_star:8.2f} {r.var[0]:10.4f} "
          f"{3 * r.se['var'][0]:8.4f} {r.predicted['gauss']:10.4f}")
