"""Deterministic and stochastic objective oracles for the optimizers.

Problems are immutable value/gradient pairs on R^n.  Stochastic oracles
wrap a problem with a seeded minibatch gradient; randomness always comes
in through an explicit generator handle, never global state.
"""

from __future__ import annotations

import dataclasses
import math
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from npgm.rng import gaussian, make_rng


@dataclasses.dataclass(frozen=True)
class Problem:
    """Objective oracle: value and gradient, finite on all of R^dim.

    `f_star` is the known infimum when available and `aniso_constant` the
    smoothness constant L relative to a declared reference function.
    `default_init` draws the problem's preferred starting point.
    """

    dim: int
    value: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]
    f_star: Optional[float] = None
    aniso_constant: Optional[float] = None
    default_init: Optional[Callable[[np.random.Generator], np.ndarray]] = None
    name: str = ""


@dataclasses.dataclass(frozen=True)
class StochasticOracle:
    """Minibatch gradient oracle over a base problem.

    `sample(x, rng, batch_size)` returns a stochastic gradient.  For
    finite-sum problems `n_atoms` gives the number of components (a batch
    of that size reproduces the full gradient exactly) and `atom_grads`
    enumerates the per-atom gradients with their probabilities, which
    lets tests verify unbiasedness by exhaustive averaging.
    """

    base: Problem
    sample: Callable[[np.ndarray, np.random.Generator, int], np.ndarray]
    n_atoms: Optional[int] = None
    atom_grads: Optional[Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]] = None


def make_selfcal_cosh(dim: int) -> Problem:
    """f(x) = cosh(||x||) - 1: the self-calibrated test objective.

    Its gradient map is exactly inverted by the cosh isotropic dual map,
    so relative to that reference function the descent inequality holds
    with equality at L = 1 and gradient dominance holds with mu = 1.
    """
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")

    def value(x):
        r = np.linalg.norm(x)
        return float(0.5 * (np.expm1(r) + np.expm1(-r)))

    def grad(x):
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x)
        if r == 0.0:
            return np.zeros_like(x)
        return float(np.sinh(r)) / r * x

    return Problem(
        dim=dim,
        value=value,
        grad=grad,
        f_star=0.0,
        aniso_constant=1.0,
        default_init=lambda rng: gaussian(rng, dim),
        name="selfcal_cosh",
    )


def make_noise_example() -> StochasticOracle:
    """1-D two-component objective f(x) = [(x-1)^2 + 2(x+2)^2] / 2.

    The oracle returns the derivative of one component, 2(x-1) or
    4(x+2), each with probability 1/2; batches average i.i.d. draws.
    The mean is f'(x) = 3x + 3 while the per-draw deviation grows like
    |x + 5|, so the Euclidean gradient variance is unbounded over x even
    though the cosh-preconditioned noise measure stays bounded.
    """

    def value(x):
        t = float(np.asarray(x, dtype=float).reshape(()))
        return 0.5 * ((t - 1.0) ** 2 + 2.0 * (t + 2.0) ** 2)

    def grad(x):
        x = np.asarray(x, dtype=float)
        return 3.0 * x + 3.0

    def atom_grads(x):
        x = np.asarray(x, dtype=float).reshape(1)
        g = np.stack([2.0 * (x - 1.0), 4.0 * (x + 2.0)])
        return g, np.array([0.5, 0.5])

    def sample(x, rng, batch_size):
        g, _ = atom_grads(x)
        picks = rng.integers(0, 2, size=batch_size)
        return g[picks].mean(axis=0)

    base = Problem(
        dim=1,
        value=value,
        grad=grad,
        f_star=3.0,
        aniso_constant=3.0,
        default_init=lambda rng: gaussian(rng, 1),
        name="noise_example",
    )
    return StochasticOracle(base=base, sample=sample, atom_grads=atom_grads)


def make_matrix_factorization(A: np.ndarray, r: int) -> Problem:
    """f(U, V) = ||U V^T - A||_F^2 / 2 over the flattened variable [U, V].

    U is m-by-r, V is n-by-r; the gradient blocks are (UV^T - A) V and
    (UV^T - A)^T U.  Initial points draw entries from N(0, 1/r).
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise ValueError("A must be a matrix")
    m, n = A.shape
    if not 1 <= r < min(m, n):
        raise ValueError(f"rank must satisfy 1 <= r < min(m, n) = {min(m, n)}, got {r}")
    dim = (m + n) * r

    def unpack(x):
        x = np.asarray(x, dtype=float)
        return x[: m * r].reshape(m, r), x[m * r :].reshape(n, r)

    def value(x):
        U, V = unpack(x)
        R = U @ V.T - A
        return 0.5 * float(np.sum(R * R))

    def grad(x):
        U, V = unpack(x)
        R = U @ V.T - A
        return np.concatenate([(R @ V).ravel(), (R.T @ U).ravel()])

    return Problem(
        dim=dim,
        value=value,
        grad=grad,
        default_init=lambda rng: gaussian(rng, dim, std=1.0 / math.sqrt(r)),
        name="matrix_factorization",
    )


def load_movielens(path) -> np.ndarray:
    """Dense rating matrix from a MovieLens u.data file.

    Each line carries four tab-separated integers (user, item, rating,
    timestamp); users and items are 1-indexed and unobserved entries are
    left at zero.
    """
    path = Path(path)
    rows = []
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            fields = line.split()
            if len(fields) != 4:
                raise ValueError(f"{path}:{lineno}: expected 4 fields, got {len(fields)}")
            try:
                user, item, rating, _ = (int(f) for f in fields)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: non-integer field") from exc
            if user < 1 or item < 1:
                raise ValueError(f"{path}:{lineno}: ids must be >= 1, got ({user}, {item})")
            rows.append((user, item, rating))
    if not rows:
        raise ValueError(f"{path}: no data rows")
    users = max(u for u, _, _ in rows)
    items = max(i for _, i, _ in rows)
    A = np.zeros((users, items))
    for user, item, rating in rows:
        A[user - 1, item - 1] = rating
    return A


def make_phase_retrieval(n: int, m: int, rng_seed: int, noise_std: float = 4.0) -> StochasticOracle:
    """Noisy phase retrieval f(x) = sum_i (y_i - (a_i^T x)^2)^2 / (2m).

    Measurement vectors a_i and the ground truth z draw entries from
    N(0, 0.5); observations are y_i = (a_i^T z)^2 + n_i with noise
    n_i ~ N(0, 4^2) (noise_std = 0 gives the noiseless interpolation
    instance).  The minibatch oracle averages per-sample gradients over
    a uniform without-replacement index set, reshuffled each step; a
    batch of size m reproduces the full gradient exactly.  Initial
    points draw entries from N(5, 0.5).
    """
    if n < 1 or m < 1:
        raise ValueError(f"need n, m >= 1, got ({n}, {m})")
    rng = make_rng(rng_seed)
    a = gaussian(rng, (m, n), std=math.sqrt(0.5))
    z = gaussian(rng, n, std=math.sqrt(0.5))
    noise = gaussian(rng, m, std=noise_std)
    y = (a @ z) ** 2 + noise

    def value(x):
        p = a @ np.asarray(x, dtype=float)
        res = y - p * p
        return float(np.sum(res * res)) / (2.0 * m)

    def grad(x):
        p = a @ np.asarray(x, dtype=float)
        res = y - p * p
        return -(2.0 / m) * (a.T @ (res * p))

    def sample(x, rng_, batch_size):
        if not 1 <= batch_size <= m:
            raise ValueError(f"batch_size must be in [1, {m}], got {batch_size}")
        if batch_size == m:
            return grad(x)
        idx = np.sort(rng_.permutation(m)[:batch_size])
        sub = a[idx]
        p = sub @ np.asarray(x, dtype=float)
        res = y[idx] - p * p
        return -(2.0 / batch_size) * (sub.T @ (res * p))

    def atom_grads(x):
        p = a @ np.asarray(x, dtype=float)
        res = y - p * p
        g = -2.0 * (res * p)[:, None] * a
        return g, np.full(m, 1.0 / m)

    base = Problem(
        dim=n,
        value=value,
        grad=grad,
        default_init=lambda rng_: gaussian(rng_, n, mean=5.0, std=math.sqrt(0.5)),
        name="phase_retrieval",
    )
    return StochasticOracle(base=base, sample=sample, n_atoms=m, atom_grads=atom_grads)


def finite_diff_grad(problem: Problem, x, step: float) -> np.ndarray:
    """Central-difference gradient used to audit analytic gradients."""
    if not step > 0:
        raise ValueError(f"step must be positive, got {step}")
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = step
        g[i] = (problem.value(x + e) - problem.value(x - e)) / (2.0 * step)
    return g
