"""Random exponential attractors by iterated coverings: noise paths, cocycles,
nets, the attractor construction and its diagnostics."""

from .errors import (AlignmentError, ConfigError, DivergenceError, DomainError, EmptyInputError,
                     EstimationError, RDSError, WindowExhaustedError)
from .noise import NoisePath, dump_path, load_path, refine, sample_path, shift, zeta_at
from .state import StateVector
from .systems import (AbsorbingRadius, GalerkinSystem, OUProcess, SystemConfig, ToySystem,
                      absorbing_radius, evolve_v, ou_at, solve, toy_pullback_point, toy_step)
from .cocycle import DiscreteRDS, cocycle_residual, lipschitz_estimate, step
from .nets import (Net, PointCloud, ball_net, barycentric_weights, blend_nets, entropy_estimate,
                   greedy_net, minkowski_net, param_net)
from .attractor import (AttractorApprox, build_discrete, build_param_family, dimension_bound,
                        eps_n_bound, holder_exponent_bound, lift_continuous)
from .diagnostics import (attraction_rate, birkhoff_mean, box_dimension, hausdorff, holder_fit,
                          moment_check)

__version__ = "0.1.0"

__all__ = [
    "AbsorbingRadius",
    "AlignmentError",
    "AttractorApprox",
    "ConfigError",
    "DiscreteRDS",
    "DivergenceError",
    "DomainError",
    "EmptyInputError",
    "EstimationError",
    "GalerkinSystem",
    "Net",
    "NoisePath",
    "OUProcess",
    "PointCloud",
    "RDSError",
    "StateVector",
    "SystemConfig",
    "ToySystem",
    "WindowExhaustedError",
    "absorbing_radius",
    "attraction_rate",
    "ball_net",
    "barycentric_weights",
    "birkhoff_mean",
    "blend_nets",
    "box_dimension",
    "build_discrete",
    "build_param_family",
    "cocycle_residual",
    "dimension_bound",
    "dump_path",
    "entropy_estimate",
    "eps_n_bound",
    "evolve_v",
    "greedy_net",
    "hausdorff",
    "holder_exponent_bound",
    "holder_fit",
    "lift_continuous",
    "lipschitz_estimate",
    "load_path",
    "minkowski_net",
    "moment_check",
    "ou_at",
    "param_net",
    "refine",
    "sample_path",
    "shift",
    "solve",
    "step",
    "toy_pullback_point",
    "toy_step",
    "zeta_at",
]
