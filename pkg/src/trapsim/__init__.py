"""Trap-model dynamics on complete graphs, hypercubes and 2D tori.

Simulates the random walk among heavy-tailed traps, its clock process and
two-time functions, and checks them against the closed-form limit objects:
the generalized arcsine law, truncated-stable Laplace exponents, and the
exact potential theory of the underlying graphs.
"""

from .graphs import Topology, parse_topology, vertex_count, degree, distance, sample_neighbor
from .landscape import (LandscapeSpec, ScaleSet, TrapWindow, classify,
                        parse_landscape, rate_function, rate_function_inverse,
                        scales, tau)
from .levy import LevyParams, arcsine_cdf, laplace_exponent, stable_exponent
from .dynamics import (DeepTrapRecord, TwoTimeEstimate, estimate_two_time,
                       estimate_no_fresh_hit, hitting_time, record_deep)
from .potential import (DenseOracle, alternating_harmonic, hypercube_hitting_transform,
                        krawtchouk, matthews_bounds, torus_green)
from .harness import ExperimentConfig, parse_config, run

__all__ = [
    "Topology", "parse_topology", "vertex_count", "degree", "distance",
    "sample_neighbor", "LandscapeSpec", "ScaleSet", "TrapWindow", "classify",
    "parse_landscape", "rate_function", "rate_function_inverse", "scales",
    "tau", "LevyParams", "arcsine_cdf", "laplace_exponent", "stable_exponent",
    "DeepTrapRecord", "TwoTimeEstimate", "estimate_two_time",
    "estimate_no_fresh_hit", "hitting_time", "record_deep", "DenseOracle",
    "alternating_harmonic", "hypercube_hitting_transform", "krawtchouk",
    "matthews_bounds", "torus_green", "ExperimentConfig", "parse_config", "run",
]

__version__ = "0.1.0"
