"""Scalar convex kernels, their exact conjugates, and reference functions.

A kernel is an even, strictly convex scalar function h with h(0) = 0,
shipped together with its derivative, its convex conjugate h*, and the
conjugate derivative h*' (the functional inverse of h').  Reference
functions compose a kernel isotropically, phi(x) = lam * h(||x||), or
separably, phi(x) = lam * sum_i h(x_i), and expose the dual gradient map
that preconditions gradients inside the optimizers:

    isotropic:  grad phi*(y) = h*'(||y||/lam) * y / ||y||
    separable:  grad phi*(y)_i = h*'(y_i/lam)

Shipped kernels and their dual maps:

    quadratic         h(t) = t^2/2                  h*'(s) = s
    cosh              h(t) = cosh(t) - 1            h*'(s) = arsinh(s)
    log_barrier(eps)  h(t) = eps(-|t| - ln(1-|t|))  h*'(s) = s/(eps+|s|)
    circular          h(t) = 1 - sqrt(1-t^2)        h*'(s) = s/sqrt(1+s^2)

The quadratic kernel reproduces plain gradient descent, the log barrier
reproduces normalized gradient descent, and cosh rescales gradients
adaptively through arsinh without capping them.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Callable

import numpy as np

KERNEL_NAMES = ("quadratic", "cosh", "log_barrier", "circular")
SHAPES = ("isotropic", "separable")


class DomainError(ValueError):
    """Argument lies outside the domain of the reference function."""


def _cosh_m1(t):
    # cosh(t) - 1 without cancellation for small t.
    return 0.5 * (np.expm1(t) + np.expm1(-t))


def _sqrt1p_sq_m1(s):
    # sqrt(1 + s^2) - 1, stable for small s and overflow-free for huge s.
    s = np.abs(s)
    big = s > 1.0
    h = np.hypot(1.0, s)
    return np.where(big, h - 1.0, np.square(np.where(big, 0.0, s)) / (1.0 + h))


def _circ_eval(t):
    # 1 - sqrt(1 - t^2) without cancellation for small t.
    root = np.sqrt((1.0 - t) * (1.0 + t))
    return (t * t) / (1.0 + root)


def _cosh_conj(s):
    a = np.abs(s)
    return a * np.arcsinh(a) - _sqrt1p_sq_m1(a)


@dataclasses.dataclass(frozen=True)
class Kernel:
    """Scalar kernel h with conjugate pair; finite on (-domain_radius, domain_radius).

    `strong_convexity` is a lower bound on h'' over the open domain and
    `two_subhomogeneous` states h(theta*t) <= theta^2 h(t) for theta in [0,1].
    All callables are numpy-vectorized and defined for scalar or array input.
    """

    name: str
    domain_radius: float
    eval: Callable
    grad: Callable
    conj: Callable
    conj_grad: Callable
    strong_convexity: float
    two_subhomogeneous: bool


def kernel_make(name: str, eps: float = 1.0) -> Kernel:
    """Build one of the shipped kernels by name.

    `eps` is the barrier steepness and only meaningful for ``log_barrier``.
    """
    if name == "quadratic":
        return Kernel(
            name="quadratic",
            domain_radius=math.inf,
            eval=lambda t: 0.5 * np.square(t),
            grad=lambda t: np.asarray(t, dtype=float) + 0.0,
            conj=lambda s: 0.5 * np.square(s),
            conj_grad=lambda s: np.asarray(s, dtype=float) + 0.0,
            strong_convexity=1.0,
            two_subhomogeneous=True,
        )
    if name == "cosh":
        return Kernel(
            name="cosh",
            domain_radius=math.inf,
            eval=_cosh_m1,
            grad=np.sinh,
            conj=_cosh_conj,
            conj_grad=np.arcsinh,
            strong_convexity=1.0,
            two_subhomogeneous=True,
        )
    if name == "log_barrier":
        if not eps > 0:
            raise ValueError(f"log_barrier needs eps > 0, got {eps}")
        return Kernel(
            name="log_barrier",
            domain_radius=1.0,
            eval=lambda t: eps * (-np.abs(t) - np.log1p(-np.abs(t))),
            grad=lambda t: eps * t / (1.0 - np.abs(t)),
            conj=lambda s: np.abs(s) - eps * np.log1p(np.abs(s) / eps),
            conj_grad=lambda s: s / (eps + np.abs(s)),
            strong_convexity=eps,
            two_subhomogeneous=True,
        )
    if name == "circular":
        return Kernel(
            name="circular",
            domain_radius=1.0,
            eval=_circ_eval,
            grad=lambda t: t / np.sqrt((1.0 - t) * (1.0 + t)),
            conj=_sqrt1p_sq_m1,
            conj_grad=lambda s: s / np.hypot(1.0, s),
            strong_convexity=1.0,
            two_subhomogeneous=True,
        )
    raise ValueError(f"unknown kernel {name!r}; expected one of {KERNEL_NAMES}")


@dataclasses.dataclass(frozen=True)
class ReferenceFunction:
    """phi = scale * (isotropic or separable composition of a kernel).

    Immutable; safe to share across threads.  The dual map `precond` has
    full domain for every shipped kernel, while `value`, `grad`, and
    `episcale_value` raise :class:`DomainError` strictly outside dom phi.
    """

    kernel: Kernel
    shape: str
    scale: float = 1.0

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ValueError(f"unknown shape {self.shape!r}; expected one of {SHAPES}")
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale}")

    def _check_domain(self, x: np.ndarray) -> None:
        r = self.kernel.domain_radius
        if math.isinf(r):
            return
        mag = np.linalg.norm(x) if self.shape == "isotropic" else np.max(np.abs(x), initial=0.0)
        if not mag < r:
            raise DomainError(
                f"argument outside dom phi for kernel {self.kernel.name!r} "
                f"({self.shape} magnitude {mag} >= radius {r})"
            )

    def value(self, x) -> float:
        """phi(x); raises DomainError outside dom phi."""
        x = np.asarray(x, dtype=float)
        self._check_domain(x)
        if self.shape == "isotropic":
            return float(self.scale * self.kernel.eval(np.linalg.norm(x)))
        return float(self.scale * np.sum(self.kernel.eval(x)))

    def grad(self, x) -> np.ndarray:
        """grad phi(x); raises DomainError outside dom phi."""
        x = np.asarray(x, dtype=float)
        self._check_domain(x)
        if self.shape == "isotropic":
            r = np.linalg.norm(x)
            if r == 0.0:
                return np.zeros_like(x)
            return self.scale * float(self.kernel.grad(r)) / r * x
        return self.scale * self.kernel.grad(x)

    def conj_value(self, y) -> float:
        """phi*(y) = scale * conjugate composition at y/scale; full domain."""
        y = np.asarray(y, dtype=float)
        if self.shape == "isotropic":
            return float(self.scale * self.kernel.conj(np.linalg.norm(y) / self.scale))
        return float(self.scale * np.sum(self.kernel.conj(y / self.scale)))

    def precond(self, y) -> np.ndarray:
        """Dual gradient map grad phi*(y); full domain, zero at zero."""
        y = np.asarray(y, dtype=float)
        if self.shape == "isotropic":
            r = np.linalg.norm(y)
            if r == 0.0:
                return np.zeros_like(y)
            return float(self.kernel.conj_grad(r / self.scale)) / r * y
        return np.asarray(self.kernel.conj_grad(y / self.scale), dtype=float)

    def stationarity(self, g) -> float:
        """phi(grad phi*(g)): the optimality measure native to the method."""
        return self.value(self.precond(g))

    def episcale_value(self, c: float, x) -> float:
        """Episcaled value (c * phi)(x) = c * phi(x/c) for c > 0."""
        if not c > 0:
            raise ValueError(f"episcale factor must be positive, got {c}")
        return c * self.value(np.asarray(x, dtype=float) / c)


def make_reference(kernel: str, shape: str, scale: float = 1.0, eps: float = 1.0) -> ReferenceFunction:
    """Convenience constructor used by config parsing."""
    return ReferenceFunction(kernel=kernel_make(kernel, eps=eps), shape=shape, scale=scale)


# Row-wise batch evaluation over (count, dim) arrays.  Same kernel
# primitives as the scalar methods, vectorized for the sampled checks.

def value_batch(ref: ReferenceFunction, X: np.ndarray) -> np.ndarray:
    """phi(x) for every row of X."""
    X = np.asarray(X, dtype=float)
    r = ref.kernel.domain_radius
    if ref.shape == "isotropic":
        mag = np.linalg.norm(X, axis=1)
        if not math.isinf(r) and not np.all(mag < r):
            raise DomainError(f"row outside dom phi for kernel {ref.kernel.name!r}")
        return ref.scale * np.asarray(ref.kernel.eval(mag), dtype=float)
    if not math.isinf(r) and not np.all(np.abs(X) < r):
        raise DomainError(f"row outside dom phi for kernel {ref.kernel.name!r}")
    return ref.scale * np.sum(ref.kernel.eval(X), axis=1)


def precond_batch(ref: ReferenceFunction, Y: np.ndarray) -> np.ndarray:
    """grad phi*(y) for every row of Y."""
    Y = np.asarray(Y, dtype=float)
    if ref.shape == "isotropic":
        mag = np.linalg.norm(Y, axis=1)
        coef = np.zeros_like(mag)
        nz = mag > 0.0
        coef[nz] = np.asarray(ref.kernel.conj_grad(mag[nz] / ref.scale), dtype=float) / mag[nz]
        return coef[:, None] * Y
    return np.asarray(ref.kernel.conj_grad(Y / ref.scale), dtype=float)


def stationarity_batch(ref: ReferenceFunction, G: np.ndarray) -> np.ndarray:
    """phi(grad phi*(g)) for every row of G."""
    return value_batch(ref, precond_batch(ref, G))
