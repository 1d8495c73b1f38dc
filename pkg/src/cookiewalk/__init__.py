"""Excited random walks in i.i.d. cookie environments on Z^d and strips."""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:
    __version__ = "0.1.0"

from .environment import (Cookie, CookieStack, EnvironmentDistribution, SampledEnvironment,
                          cookie_at, delta, leftover, mean_delta, sample_R, shift, site_stack,
                          validate)
from .lattice import Direction, LatticeSpec, neighbors, project, slab_index
from .simulate import simulate
from .walk import StopRule, init, ladder_times, recompute_invariants, run, step

__all__ = [
    "Cookie", "CookieStack", "Direction", "EnvironmentDistribution", "LatticeSpec",
    "SampledEnvironment", "StopRule", "cookie_at", "delta", "init", "ladder_times",
    "leftover", "mean_delta", "neighbors", "project", "recompute_invariants", "run",
    "sample_R", "shift", "simulate", "site_stack", "slab_index", "step", "validate",
]
