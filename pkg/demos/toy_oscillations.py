"""
The bimodal toy game
====================

A threshold generator ``g`` plays against a ReLU critic with slope ``omega``.
Without a constraint on the critic the pair circles the equilibrium forever
on a level set of ``2 cosh g + omega^2 / gamma_c``.  Clipping ``|omega| <= 1``
bleeds energy off whenever the orbit hits the wall, and the motion settles
onto the largest level set that just touches it.
"""

import numpy as np

from wgan_meanfield.toy import (
    ToyState,
    detect_period,
    energy_star,
    toy_limit_bound,
    toy_simulate,
)

# unconstrained: RK4 keeps the energy to round-off
free = toy_simulate(ToyState(1.0, 0.5, gamma_c=1.0), dt=1e-3, T=50.0, constrained=False)
E = free.diagnostics["energy"]
print(f"unconstrained: E(0) = {E[0]:.6f}, relative drift {np.max(np.abs(E - E[0])) / E[0]:.1e}")

# constrained: start above the tangency level and watch the energy drop to it
for gamma_c, g0 in [(1.0, 1.5), (10.0, 1.0)]:
    run = toy_simulate(ToyState(g0, 0.5, gamma_c), dt=1e-3, T=300.0, constrained=True)
    d = run.diagnostics
    late = run.times > 150
    period = detect_period(run)
    print(f"\ngamma_c = {gamma_c:g}")
    print(f"  E(0) = {d['energy'][0]:.4f}  ->  E(T) = {d['energy'][-1]:.4f}   (E_* = {energy_star(gamma_c):.4f})")
    print(f"  late sup|g| = {np.max(np.abs(d['g'][late])):.4f}   bound arccosh(1 + 1/(2 gamma_c)) = {toy_limit_bound(gamma_c):.4f}")
    print(f"  period {period.mean:.3f}, spread of last 5 returns {period.tail_spread(5):.1e}")

# a faster critic squeezes the oscillation of the generator
for gamma_c in (0.5, 1, 2, 5, 10, 100):
    print(f"gamma_c = {gamma_c:>5g}: |g| <= {toy_limit_bound(gamma_c):.4f}")
