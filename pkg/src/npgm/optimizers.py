"""Preconditioned gradient methods, baselines, and the trace-producing run loop.

The base iterate moves against the preconditioned gradient,

    x' = x - gamma * grad phi*(grad f(x)),

the heavy-ball variant keeps a convex combination of preconditioned
gradients as its momentum buffer,

    m' = beta * m + (1 - beta) * grad phi*(grad f(x)),   x' = x - gamma * m',

and the stochastic variant preconditions a minibatch gradient.  Step
functions are pure (state in, state out); `run` drives them for a fixed
iteration budget and records a per-iteration trace.
"""

from __future__ import annotations

import dataclasses
import time
from typing import NamedTuple, Optional, Union

import numpy as np

from npgm.kernels import DomainError, ReferenceFunction, kernel_make
from npgm.problems import Problem, StochasticOracle
from npgm.rng import gaussian, make_rng

METHODS = ("npgm", "mnpgm", "snpgm", "gd", "gdm", "clipped")
STOCHASTIC_METHODS = ("snpgm", "clipped")

# Baselines fall back to the quadratic reference function, whose
# stationarity measure is the classical ||grad f||^2 / 2.
_QUADRATIC_REF = ReferenceFunction(kernel=kernel_make("quadratic"), shape="isotropic")


class DivergenceError(RuntimeError):
    """A step produced or consumed a non-finite quantity."""


@dataclasses.dataclass(frozen=True)
class OptimizerState:
    """Iterate, momentum buffer, counter, and hyperparameters.

    The momentum buffer starts at zero and stays a convex combination of
    the preconditioned gradients seen so far.
    """

    x: np.ndarray
    m: np.ndarray
    k: int
    gamma: float
    beta: float = 0.0


def init_state(x0, gamma: float, beta: float = 0.0) -> OptimizerState:
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    if not 0.0 <= beta < 1.0:
        raise ValueError(f"beta must lie in [0, 1), got {beta}")
    x0 = np.asarray(x0, dtype=float)
    return OptimizerState(x=x0, m=np.zeros_like(x0), k=0, gamma=gamma, beta=beta)


class TraceRecord(NamedTuple):
    k: int
    f: float
    grad_norm: float
    stationarity: float
    lyapunov: Optional[float]
    elapsed_ns: int


@dataclasses.dataclass
class RunTrace:
    """Per-iteration records plus the resolved configuration and seed."""

    records: list
    config_echo: dict
    seed: int
    status: str = "ok"
    abort_reason: Optional[str] = None


def _require_finite(g: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(g)):
        raise DivergenceError(f"non-finite {what}")
    return g


def npgm_step(state: OptimizerState, problem: Problem, ref: ReferenceFunction) -> OptimizerState:
    """x' = x - gamma * grad phi*(grad f(x)); momentum untouched."""
    g = _require_finite(problem.grad(state.x), "gradient")
    x = state.x - state.gamma * ref.precond(g)
    return dataclasses.replace(state, x=x, k=state.k + 1)


def mnpgm_step(state: OptimizerState, problem: Problem, ref: ReferenceFunction) -> OptimizerState:
    """Heavy-ball update on the preconditioned gradient map."""
    g = _require_finite(problem.grad(state.x), "gradient")
    m = state.beta * state.m + (1.0 - state.beta) * ref.precond(g)
    x = state.x - state.gamma * m
    return dataclasses.replace(state, x=x, m=m, k=state.k + 1)


def snpgm_step(
    state: OptimizerState,
    oracle: StochasticOracle,
    ref: ReferenceFunction,
    rng: np.random.Generator,
    batch: int,
) -> OptimizerState:
    """x' = x - gamma * grad phi*(g(x)) with g a minibatch gradient."""
    g = _require_finite(oracle.sample(state.x, rng, batch), "stochastic gradient")
    x = state.x - state.gamma * ref.precond(g)
    return dataclasses.replace(state, x=x, k=state.k + 1)


def gd_step(state: OptimizerState, problem: Problem) -> OptimizerState:
    """Plain gradient descent: the quadratic-kernel specialization."""
    g = _require_finite(problem.grad(state.x), "gradient")
    x = state.x - state.gamma * g
    return dataclasses.replace(state, x=x, k=state.k + 1)


def gdm_step(state: OptimizerState, problem: Problem) -> OptimizerState:
    """Heavy-ball gradient descent on raw gradients."""
    g = _require_finite(problem.grad(state.x), "gradient")
    m = state.beta * state.m + (1.0 - state.beta) * g
    x = state.x - state.gamma * m
    return dataclasses.replace(state, x=x, m=m, k=state.k + 1)


def clipped_step(
    state: OptimizerState,
    oracle: StochasticOracle,
    eta: float,
    gamma_clip: float,
    rng: np.random.Generator,
    batch: int,
) -> OptimizerState:
    """Stochastic clipped gradient step x' = x - min(gamma, eta/||g||) g."""
    if not (eta > 0 and gamma_clip > 0):
        raise ValueError("clipped step needs eta > 0 and gamma_clip > 0")
    g = _require_finite(oracle.sample(state.x, rng, batch), "stochastic gradient")
    norm = float(np.linalg.norm(g))
    if norm == 0.0:
        return dataclasses.replace(state, k=state.k + 1)
    x = state.x - min(gamma_clip, eta / norm) * g
    return dataclasses.replace(state, x=x, k=state.k + 1)


def _resolve_target(target) -> tuple[Problem, Optional[StochasticOracle]]:
    if isinstance(target, StochasticOracle):
        return target.base, target
    if isinstance(target, Problem):
        return target, None
    raise TypeError(f"expected Problem or StochasticOracle, got {type(target).__name__}")


def run(
    target: Union[Problem, StochasticOracle],
    method: str,
    ref: Optional[ReferenceFunction] = None,
    *,
    iterations: int,
    gamma: float,
    beta: float = 0.0,
    batch: int = 1,
    eval_every: int = 1,
    seed: int = 0,
    x0=None,
    init_scale: float = 1.0,
    eta: Optional[float] = None,
    config_echo: Optional[dict] = None,
) -> RunTrace:
    """Execute `iterations` steps and record the trace.

    Each logged record holds the full objective value, full gradient
    norm, the stationarity measure phi(grad phi*(grad f(x))), the
    Lyapunov value gamma*phi(m) + f(x) - f_star when f_star is known,
    and wall time.  Deterministic methods log every `eval_every`-th
    iteration (default 1); the first and last iterations are always
    logged.  A run aborts with a diagnostic record when the objective
    becomes non-finite or exceeds 1e12 * (1 + |f(x0)|).
    """
    if iterations < 1:
        raise ValueError(f"iterations must be >= 1, got {iterations}")
    if eval_every < 1:
        raise ValueError(f"eval_every must be >= 1, got {eval_every}")
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    problem, oracle = _resolve_target(target)
    if method in STOCHASTIC_METHODS and oracle is None:
        raise ValueError(f"method {method!r} needs a StochasticOracle")
    if method == "clipped" and eta is None:
        raise ValueError("method 'clipped' needs eta")
    if ref is None:
        ref = _QUADRATIC_REF

    rng = make_rng(seed)
    if x0 is None:
        if problem.default_init is not None:
            x0 = problem.default_init(rng)
        else:
            x0 = init_scale * gaussian(rng, problem.dim)
    state = init_state(x0, gamma=gamma, beta=beta)

    records: list[TraceRecord] = []
    t0 = time.perf_counter_ns()

    def log(st: OptimizerState) -> float:
        f = problem.value(st.x)
        g = problem.grad(st.x)
        lyap = None
        if problem.f_star is not None:
            try:
                lyap = st.gamma * ref.value(st.m) + f - problem.f_star
            except DomainError:
                # Raw-gradient momentum (gdm) can leave the domain of a
                # bounded reference function; the Lyapunov value is only
                # defined for preconditioned buffers.
                lyap = None
        records.append(
            TraceRecord(
                k=st.k,
                f=f,
                grad_norm=float(np.linalg.norm(g)),
                stationarity=ref.stationarity(g),
                lyapunov=lyap,
                elapsed_ns=time.perf_counter_ns() - t0,
            )
        )
        return f

    f0 = log(state)
    guard = 1e12 * (1.0 + abs(f0))
    trace = RunTrace(records=records, config_echo=dict(config_echo or {}), seed=seed)

    for k in range(iterations):
        try:
            if method == "npgm":
                state = npgm_step(state, problem, ref)
            elif method == "mnpgm":
                state = mnpgm_step(state, problem, ref)
            elif method == "snpgm":
                state = snpgm_step(state, oracle, ref, rng, batch)
            elif method == "gd":
                state = gd_step(state, problem)
            elif method == "gdm":
                state = gdm_step(state, problem)
            else:
                state = clipped_step(state, oracle, eta, gamma, rng, batch)
        except DivergenceError as exc:
            trace.status = "aborted"
            trace.abort_reason = f"step {k}: {exc}"
            return trace
        if state.k % eval_every == 0 or state.k == iterations:
            f = log(state)
            if not np.isfinite(f) or f > guard:
                trace.status = "aborted"
                trace.abort_reason = f"iteration {state.k}: objective {f!r} breached divergence guard"
                return trace
    return trace
