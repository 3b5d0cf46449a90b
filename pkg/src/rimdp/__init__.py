"""Robust value iteration for interval Markov decision processes."""

from . import errors
from .bellman import (
    BellmanKernel,
    Maximize,
    Minimize,
    Optimistic,
    Pessimistic,
    SatisfactionMode,
    StrategyMode,
    bellman_step,
    omaximize_prefix,
    omaximize_sequential,
    ordering,
    robust_expectation,
)
from .generators import random_imdp, three_state_example
from .io import convert, read_problem, write_problem
from .io.bmdp import read_bmdp_tool, write_bmdp_tool
from .io.native import read_native, write_native
from .io.prism import read_prism, write_prism
from .model import (
    CSCMatrix,
    IntervalMDP,
    IntervalProbabilities,
    build_imdp,
    build_interval_probabilities,
    imdp_from_csc,
    validate,
)
from .parallel import bitonic_sort, tree_scan
from .solver import (
    FiniteTimeReachAvoid,
    FiniteTimeReachability,
    FiniteTimeReward,
    InfiniteTimeReachAvoid,
    InfiniteTimeReachability,
    InfiniteTimeReward,
    Problem,
    Specification,
    StationaryPolicy,
    TimeDependentPolicy,
    ValueFunction,
    control_synthesis,
    value_iteration,
    verify_policy,
)

__version__ = "0.1.0"
