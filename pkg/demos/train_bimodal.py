"""
Training a tiny WGAN on two atoms
=================================

One-dimensional latent, one-dimensional data at -1 and +1.  We run clipped
SGD with several critic steps per generator step and look at how the energy
and the generated distribution evolve.

The generator output is bounded by the particle average of |alpha|, and with
alpha drawn symmetrically around zero that average starts small and grows
at most linearly in time.  So on this horizon the generated law stays
squeezed near the middle while the critic parameters pile up on the faces
of the clipping box.
"""

import numpy as np

from wgan_meanfield.dynamics import SgdConfig, run_sgd
from wgan_meanfield.model import InitDistribution, bimodal_target, generator_eval
from wgan_meanfield.quadrature import Quadrature
from wgan_meanfield.rng import substream

target = bimodal_target()
state0 = InitDistribution().sample_ensemble(seed=0, N=100, M=100, K=1, L=1)
cfg = SgdConfig(h=0.5, n_c=5, steps=4000, seed=0)
traj = run_sgd(state0, cfg, target, stride=500, energy_quad=Quadrature())

for t, s in zip(traj.snapshot_times, traj.snapshots):
    k = np.searchsorted(traj.times, t)
    print(f"t = {t:5.1f}: E = {traj.diagnostics['energy'][k]:+.4f}, pinned critic coords {traj.diagnostics['pinned_coords'][k]:.0f}")

# the generated law after training
z = substream(1, 0).standard_normal((100_000, 1))
x = generator_eval(traj.final, z)[:, 0]
print("generated quantiles (5, 25, 50, 75, 95%):", np.round(np.percentile(x, [5, 25, 50, 75, 95]), 3))
print("target mean 0, generated mean", round(float(x.mean()), 3))
