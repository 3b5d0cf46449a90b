"""Robust value iteration, policy synthesis and policy verification.

State indices in properties are 0-based. Reachability values start at the
indicator of the reach set; reach states are frozen at 1 and avoid states at
0. Reward values start at the reward vector and are updated as
``V_k = r + discount * opt_a E_adversary[V_{k-1}]``.

Time-dependent policies are ``|S| x K`` arrays whose column ``t`` holds the
action to take at time step ``t``, i.e. the action chosen by the backup
performed when ``K - t`` steps remain.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from . import errors
from .bellman import BellmanKernel, Maximize, Pessimistic, SatisfactionMode, StrategyMode
from .numeric import as_field_array, is_exact

DEFAULT_MAX_ITERATIONS = 10**6


# --- properties -------------------------------------------------------------


def _state_tuple(states):
    out = tuple(sorted({int(s) for s in states}))
    if any(s < 0 for s in out):
        raise errors.PropertyStateOutOfRange(f"negative state index in {list(states)}")
    return out


def _check_horizon(k):
    if int(k) != k or k < 0:
        raise ValueError(f"time horizon must be a non-negative integer, got {k}")


def _check_eps(eps):
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")


@dataclass(frozen=True)
class FiniteTimeReachability:
    reach: tuple
    time_horizon: int

    def __post_init__(self):
        object.__setattr__(self, "reach", _state_tuple(self.reach))
        _check_horizon(self.time_horizon)


@dataclass(frozen=True)
class InfiniteTimeReachability:
    reach: tuple
    eps: float = 1e-6

    def __post_init__(self):
        object.__setattr__(self, "reach", _state_tuple(self.reach))
        _check_eps(self.eps)


@dataclass(frozen=True)
class FiniteTimeReachAvoid:
    reach: tuple
    avoid: tuple
    time_horizon: int

    def __post_init__(self):
        object.__setattr__(self, "reach", _state_tuple(self.reach))
        object.__setattr__(self, "avoid", _state_tuple(self.avoid))
        _check_horizon(self.time_horizon)
        if set(self.reach) & set(self.avoid):
            raise ValueError("reach and avoid sets must be disjoint")


@dataclass(frozen=True)
class InfiniteTimeReachAvoid:
    reach: tuple
    avoid: tuple
    eps: float = 1e-6

    def __post_init__(self):
        object.__setattr__(self, "reach", _state_tuple(self.reach))
        object.__setattr__(self, "avoid", _state_tuple(self.avoid))
        _check_eps(self.eps)
        if set(self.reach) & set(self.avoid):
            raise ValueError("reach and avoid sets must be disjoint")


def _check_discount(discount, infinite):
    if not 0 <= discount <= 1:
        raise ValueError(f"discount must lie in [0, 1], got {discount}")
    if infinite and not discount < 1:
        raise ValueError("infinite-time reward needs discount < 1")


@dataclass(frozen=True, eq=False)
class FiniteTimeReward:
    reward: np.ndarray
    discount: float
    time_horizon: int

    def __post_init__(self):
        object.__setattr__(self, "reward", np.asarray(self.reward))
        _check_discount(self.discount, False)
        _check_horizon(self.time_horizon)

    def __eq__(self, other):
        return (
            type(other) is type(self)
            and np.array_equal(self.reward, other.reward)
            and self.discount == other.discount
            and self.time_horizon == other.time_horizon
        )


@dataclass(frozen=True, eq=False)
class InfiniteTimeReward:
    reward: np.ndarray
    discount: float
    eps: float = 1e-6

    def __post_init__(self):
        object.__setattr__(self, "reward", np.asarray(self.reward))
        _check_discount(self.discount, True)
        _check_eps(self.eps)

    def __eq__(self, other):
        return (
            type(other) is type(self)
            and np.array_equal(self.reward, other.reward)
            and self.discount == other.discount
            and self.eps == other.eps
        )


REACHABILITY = (FiniteTimeReachability, InfiniteTimeReachability)
REACH_AVOID = (FiniteTimeReachAvoid, InfiniteTimeReachAvoid)
REWARD = (FiniteTimeReward, InfiniteTimeReward)
FINITE = (FiniteTimeReachability, FiniteTimeReachAvoid, FiniteTimeReward)


def is_finite_time(prop):
    return isinstance(prop, FINITE)


def is_reward(prop):
    return isinstance(prop, REWARD)


@dataclass(frozen=True)
class Specification:
    prop: object
    satisfaction_mode: SatisfactionMode = Pessimistic
    strategy_mode: StrategyMode = Maximize

    def __post_init__(self):
        object.__setattr__(self, "satisfaction_mode", SatisfactionMode(self.satisfaction_mode))
        object.__setattr__(self, "strategy_mode", StrategyMode(self.strategy_mode))


@dataclass(frozen=True, eq=False)
class Problem:
    imdp: object
    spec: Specification

    def __post_init__(self):
        check_property(self.spec.prop, self.imdp.num_states)


def check_property(prop, num_states):
    states = list(getattr(prop, "reach", ())) + list(getattr(prop, "avoid", ()))
    bad = [s for s in states if s >= num_states]
    if bad:
        raise errors.PropertyStateOutOfRange(
            f"property refers to states {bad}, model has {num_states} states"
        )
    if is_reward(prop) and len(prop.reward) != num_states:
        raise errors.PropertyStateOutOfRange(
            f"reward vector has length {len(prop.reward)}, model has {num_states} states"
        )


# --- results ----------------------------------------------------------------


class ValueFunction(NamedTuple):
    """Result of value iteration; unpacks as ``V, k, residual``."""

    values: np.ndarray
    iterations: int
    residual: np.ndarray


@dataclass(frozen=True, eq=False)
class StationaryPolicy:
    """One action label per state."""

    actions: np.ndarray

    def __len__(self):
        return len(self.actions)

    def columns(self, imdp, t=0):
        return _label_columns(imdp, self.actions)

    def __eq__(self, other):
        return type(other) is type(self) and np.array_equal(self.actions, other.actions)


@dataclass(frozen=True, eq=False)
class TimeDependentPolicy:
    """``actions[s, t]`` is the action for state ``s`` at time step ``t``."""

    actions: np.ndarray

    @property
    def time_horizon(self):
        return self.actions.shape[1]

    def columns(self, imdp, t):
        return _label_columns(imdp, self.actions[:, t])

    def __eq__(self, other):
        return type(other) is type(self) and np.array_equal(self.actions, other.actions)


def _label_columns(imdp, labels):
    if len(labels) != imdp.num_states:
        raise errors.InvalidPolicyAction(
            f"policy covers {len(labels)} states, model has {imdp.num_states}"
        )
    return np.array([imdp.column_of(s, a) for s, a in enumerate(labels)], dtype=np.int64)


# --- value iteration --------------------------------------------------------


@dataclass
class _Run:
    """Mutable state of one value-iteration run."""

    problem: Problem
    workers: Optional[int] = 1
    max_iterations: int = DEFAULT_MAX_ITERATIONS
    assert_monotone: bool = False
    ordering_backend: str = "numpy"
    scan: str = "tree"
    history: list = field(default_factory=list)

    def __post_init__(self):
        imdp, spec = self.problem.imdp, self.problem.spec
        self.kernel = BellmanKernel(imdp, self.workers, self.ordering_backend, self.scan)
        self.dtype = imdp.dtype
        prop = spec.prop
        n = imdp.num_states
        if is_reward(prop):
            self.reward = as_field_array(prop.reward, self.dtype)
            self.discount = as_field_array([prop.discount], self.dtype)[0]
            self.frozen = np.zeros(0, dtype=np.int64)
            self.initial = self.reward.copy()
        else:
            self.reward = None
            self.initial = as_field_array(np.zeros(n, dtype=np.int64), self.dtype)
            reach = np.asarray(prop.reach, dtype=np.int64)
            avoid = np.asarray(getattr(prop, "avoid", ()), dtype=np.int64)
            self.initial[reach] = as_field_array([1], self.dtype)[0]
            self.frozen = np.concatenate([reach, avoid])
        self.first_action = imdp.stateptr[:-1].copy()

    def backup(self, values, forced_columns=None):
        spec = self.problem.spec
        best, cols = self.kernel.step(values, spec.satisfaction_mode, spec.strategy_mode, forced_columns)
        if self.reward is not None:
            return self.reward + self.discount * best, cols
        nxt = best.copy()
        nxt[self.frozen] = values[self.frozen]
        cols = cols.copy()
        cols[self.frozen] = self.first_action[self.frozen]
        return nxt, cols

    def check_monotone(self, prev, nxt, k):
        if not self.assert_monotone or self.reward is not None:
            return
        # Exact for rationals. Floats get a few ulps: a column whose bounds
        # sum to 1 + ulp in binary legitimately yields 1.0000000000000002.
        slack = 0 if is_exact(self.dtype) else 4 * np.finfo(self.dtype).eps
        bad = np.asarray((nxt < prev - slack) | (nxt > 1 + slack), dtype=bool)
        if np.any(bad):
            s = int(np.nonzero(bad)[0][0])
            raise AssertionError(
                f"iteration {k}: V[{s}] went from {prev[s]} to {nxt[s]} (must be non-decreasing and <= 1)"
            )

    def run(self, policy=None, record_actions=False):
        prop = self.problem.spec.prop
        values = self.initial.copy()
        prev = values
        actions = []
        zero_res = np.abs(values - values)
        if is_finite_time(prop):
            horizon = int(prop.time_horizon)
            for k in range(1, horizon + 1):
                forced = None if policy is None else policy.columns(self.problem.imdp, horizon - k)
                prev, (values, cols) = values, self.backup(values, forced)
                self.check_monotone(prev, values, k)
                if record_actions:
                    actions.append(cols)
            k = horizon
            residual = np.abs(values - prev) if horizon else zero_res
        else:
            forced = None if policy is None else policy.columns(self.problem.imdp)
            # For maximization a state's action only changes when its value
            # strictly improves: re-picking among tied actions at a converged
            # state can select one that never reaches the target.
            sticky = self.problem.spec.strategy_mode == Maximize and self.reward is None
            chosen = None
            k = 0
            while True:
                if k >= self.max_iterations:
                    raise errors.NonConvergence(k, float(np.max(np.abs(values - prev))))
                prev, (values, cols) = values, self.backup(values, forced)
                k += 1
                self.check_monotone(prev, values, k)
                if chosen is None or not sticky:
                    chosen = cols
                else:
                    chosen = np.where(np.asarray(values > prev, dtype=bool), cols, chosen)
                residual = np.abs(values - prev)
                if np.max(residual) <= prop.eps:
                    break
            if record_actions:
                actions.append(chosen)
        return ValueFunction(values, k, residual), actions


def value_iteration(
    problem,
    workers=1,
    max_iterations=DEFAULT_MAX_ITERATIONS,
    assert_monotone=False,
    ordering_backend="numpy",
    scan="tree",
):
    """Robust value iteration for ``problem``.

    Returns a :class:`ValueFunction` ``(values, iterations, residual)`` where
    ``residual`` is the state-wise ``|V_k - V_{k-1}|`` of the last
    iteration (all zeros when no iteration ran). Finite-time properties run
    exactly ``time_horizon`` iterations; infinite-time properties iterate
    until the largest residual is at most ``eps`` and raise
    :class:`~rimdp.errors.NonConvergence` after ``max_iterations``.

    ``assert_monotone`` checks after every iteration that reachability
    values are non-decreasing and at most 1.
    """
    vf, _ = _Run(problem, workers, max_iterations, assert_monotone, ordering_backend, scan).run()
    return vf


def control_synthesis(problem, workers=1, max_iterations=DEFAULT_MAX_ITERATIONS, **kwargs):
    """Optimal policy and value function.

    Finite-time properties give a :class:`TimeDependentPolicy` of shape
    ``|S| x K``; infinite-time properties a :class:`StationaryPolicy`. For
    maximized reachability each state keeps the action of the last iteration
    that strictly raised its value; otherwise the final iteration's choice
    is used. Reach/avoid states (which take no decision)
    are assigned their first action.
    """
    run = _Run(problem, workers, max_iterations, **kwargs)
    vf, cols = run.run(record_actions=True)
    labels = np.asarray(problem.imdp.actions, dtype=object)
    if is_finite_time(problem.spec.prop):
        # cols[k-1] was chosen with K-k+1 steps remaining, i.e. at time K-k.
        table = np.empty((problem.imdp.num_states, len(cols)), dtype=object)
        for t in range(len(cols)):
            table[:, t] = labels[cols[len(cols) - 1 - t]]
        return TimeDependentPolicy(table), vf
    return StationaryPolicy(labels[cols[-1]]), vf


def verify_policy(imdp, policy, prop, satisfaction_mode=Pessimistic, workers=1, max_iterations=DEFAULT_MAX_ITERATIONS):
    """Value of ``prop`` under a fixed policy against the chosen adversary.

    ``prop`` may be a property or a :class:`Specification` (whose strategy
    mode is then irrelevant). Iteration and stopping rules are those of
    :func:`value_iteration`.
    """
    if isinstance(prop, Specification):
        satisfaction_mode, prop = prop.satisfaction_mode, prop.prop
    if isinstance(policy, TimeDependentPolicy):
        if not is_finite_time(prop):
            raise errors.InvalidPolicyAction("time-dependent policy needs a finite-time property")
        if policy.time_horizon != prop.time_horizon:
            raise errors.InvalidPolicyAction(
                f"policy horizon {policy.time_horizon} != property horizon {prop.time_horizon}"
            )
        for t in range(policy.time_horizon):
            policy.columns(imdp, t)
    elif isinstance(policy, StationaryPolicy):
        policy.columns(imdp)
    else:
        raise TypeError(f"not a policy: {policy!r}")
    problem = Problem(imdp, Specification(prop, satisfaction_mode, Maximize))
    vf, _ = _Run(problem, workers, max_iterations).run(policy=policy)
    return vf
