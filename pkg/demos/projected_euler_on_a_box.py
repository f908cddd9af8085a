"""
Projected Euler on a box
========================

The rotation field ``(-x2, x1)`` on ``[-1, 1]^2`` drives a start near the
corner into the walls.  Away from the walls forward Euler is first order;
with the projection the error estimate only guarantees order 1/2, but for
this field the observed rate stays close to one.
"""

import numpy as np

from wgan_meanfield.dynamics import projected_euler
from wgan_meanfield.geometry import Box
from wgan_meanfield.harness.fit import fit_rate


def rotation(x):
    return np.array([-x[1], x[0]])


Q = Box.unit(2)
x0 = np.array([0.95, 0.6])
T = 6.0
dts = [1e-2, 5e-3, 2.5e-3, 1.25e-3]

errors = []
for dt in dts:
    coarse = projected_euler(rotation, Q, x0, dt, T)
    ref = projected_euler(rotation, Q, x0, dt / 100, T, stride=100)
    errors.append(np.max(np.linalg.norm(coarse.states() - ref.states(), axis=1)))
    frac = np.mean(coarse.diagnostics["pinned"] > 0)
    print(f"dt = {dt:.5f}: max error {errors[-1]:.2e}, on a wall {100 * frac:.0f}% of the time")
print(f"observed order {fit_rate(dts, errors).slope:.2f}")

# once on a face, the pinned coordinate never moves outward again
path = projected_euler(rotation, Q, x0, 1e-3, T).states()
print("first time on a face:", np.argmax(np.any(np.abs(path) == 1, axis=1)) * 1e-3)
