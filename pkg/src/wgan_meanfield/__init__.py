"""Mean-field laboratory for two-layer Wasserstein GANs.

Particle ensembles for generator and clipped critic, their velocity fields,
SGD and projected-Euler dynamics, exact Wasserstein distances, a solvable
bimodal toy game and an experiment harness.
"""

from .dynamics import NumericalError, SgdConfig, MeanFieldConfig, run_sgd, run_meanfield, projected_euler
from .geometry import Box, project_box, project_tangent_cone
from .model import EnsemblePair, InitDistribution, SIGMOID, bimodal_target
from .quadrature import Quadrature

__version__ = "0.1.0"
