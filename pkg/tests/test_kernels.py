"""Kernel and reference-function tests.

Expected values tagged as derived were computed with the independent
numeric oracles in this file (conjugate as a bounded sup, dual map by
root-finding on h') and frozen afterwards.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import optimize

from npgm.kernels import (
    DomainError,
    kernel_make,
    make_reference,
    precond_batch,
    stationarity_batch,
    value_batch,
)
from npgm.rng import gaussian, make_rng

ALL_KERNELS = ["quadratic", "cosh", "log_barrier", "circular"]


def conj_sup_oracle(kernel, s, span=30.0):
    """h*(s) maximized numerically over the kernel domain."""
    hi = min(kernel.domain_radius - 1e-12, span)
    res = optimize.minimize_scalar(
        lambda t: float(kernel.eval(t)) - t * s, bounds=(-hi, hi), method="bounded",
        options={"xatol": 1e-14},
    )
    return -res.fun


def dual_root_oracle(kernel, s, span=30.0):
    """h*'(s) as the root of h'(t) = s."""
    hi = min(kernel.domain_radius - 1e-12, span)
    return optimize.brentq(lambda t: float(kernel.grad(t)) - s, -hi, hi, xtol=1e-15)


def domain_points(kernel, n, seed=0):
    rng = make_rng(seed)
    if math.isinf(kernel.domain_radius):
        return gaussian(rng, n, std=2.0)
    return (2.0 * rng.random(n) - 1.0) * 0.999


# --- construction -----------------------------------------------------------

def test_unknown_kernel_rejected():
    with pytest.raises(ValueError, match="unknown kernel"):
        kernel_make("exp")


def test_log_barrier_needs_positive_eps():
    with pytest.raises(ValueError, match="eps"):
        kernel_make("log_barrier", eps=0.0)


@pytest.mark.parametrize("name", ALL_KERNELS)
def test_kernel_basic_shape(name):
    k = kernel_make(name)
    assert float(k.eval(0.0)) == 0.0
    assert float(k.grad(0.0)) == 0.0
    ts = domain_points(k, 64, seed=3)
    assert np.allclose(k.eval(ts), k.eval(-ts))  # even
    assert k.two_subhomogeneous


@pytest.mark.parametrize("name", ALL_KERNELS)
def test_strict_convexity_by_sampling(name):
    k = kernel_make(name)
    rng = make_rng(5)
    a = domain_points(k, 200, seed=11)
    b = domain_points(k, 200, seed=13)
    keep = np.abs(a - b) > 1e-6
    mid = k.eval((a + b) / 2.0)
    assert np.all(mid[keep] < (np.asarray(k.eval(a)) + k.eval(b))[keep] / 2.0)


@pytest.mark.parametrize("name", ALL_KERNELS)
def test_strong_convexity_lower_bound(name):
    k = kernel_make(name)
    ts = domain_points(k, 500, seed=17)
    h = 1e-5
    hess = (np.asarray(k.grad(ts + h)) - k.grad(ts - h)) / (2 * h)
    assert np.all(hess >= k.strong_convexity - 1e-5)


# --- conjugate pair ---------------------------------------------------------

def test_cosh_dual_map_examples():
    k = kernel_make("cosh")
    assert float(k.conj_grad(0.0)) == 0.0
    # Inverse-map identity, cross-checked by the root-finding oracle.
    assert float(k.conj_grad(np.sinh(1.0))) == pytest.approx(1.0, abs=1e-12)
    assert dual_root_oracle(k, float(np.sinh(1.0))) == pytest.approx(1.0, abs=1e-10)


def test_log_barrier_dual_map_is_normalization():
    k = kernel_make("log_barrier", eps=1.0)
    assert float(k.conj_grad(4.0)) == pytest.approx(0.8, abs=1e-15)
    assert dual_root_oracle(k, 4.0) == pytest.approx(0.8, abs=1e-10)


def test_circular_dual_map_example():
    k = kernel_make("circular")
    expected = 1.0 / math.sqrt(2.0)  # argmax of t*1 - h(t), frozen from the sup oracle
    assert float(k.conj_grad(1.0)) == pytest.approx(expected, abs=1e-15)
    assert dual_root_oracle(k, 1.0) == pytest.approx(expected, abs=1e-10)


@pytest.mark.parametrize("name", ALL_KERNELS)
def test_conjugate_matches_sup_oracle(name):
    k = kernel_make(name)
    for s in (-3.7, -0.4, 0.0, 0.25, 1.0, 6.0):
        assert float(k.conj(s)) == pytest.approx(conj_sup_oracle(k, s), abs=1e-9)


@pytest.mark.parametrize("name", ALL_KERNELS)
def test_inverse_map_and_fenchel_young(name):
    k = kernel_make(name)
    t = domain_points(k, 1000, seed=23)
    s = np.asarray(k.grad(t))
    assert np.max(np.abs(np.asarray(k.conj_grad(s)) - t)) <= 1e-10
    assert np.max(np.abs(np.asarray(k.eval(t)) + k.conj(s) - t * s)) <= 1e-10


@pytest.mark.parametrize("name", ALL_KERNELS)
def test_fenchel_young_inequality_random_pairs(name):
    k = kernel_make(name)
    rng = make_rng(29)
    t = domain_points(k, 1000, seed=31)
    s = gaussian(rng, 1000, std=5.0)
    residual = np.asarray(k.eval(t)) + k.conj(s) - t * s
    assert np.min(residual) >= -1e-12


@settings(max_examples=300, derandomize=True)
@given(st.floats(-20.0, 20.0))
def test_cosh_inverse_map_property(t):
    k = kernel_make("cosh")
    assert abs(float(k.conj_grad(k.grad(t))) - t) <= 1e-10


@settings(max_examples=300, derandomize=True)
@given(st.floats(-0.999999, 0.999999))
def test_bounded_kernel_inverse_map_property(t):
    for name in ("log_barrier", "circular"):
        k = kernel_make(name)
        assert abs(float(k.conj_grad(k.grad(t))) - t) <= 1e-10


def test_huge_argument_stability():
    k = kernel_make("cosh")
    assert np.isfinite(k.conj_grad(1e300))
    assert np.isfinite(k.conj(1e300))
    circ = kernel_make("circular")
    assert np.isfinite(circ.conj(1e300))


# --- reference functions ----------------------------------------------------

def test_ref_value_examples():
    iso = make_reference("cosh", "isotropic")
    assert iso.value([0.0, 0.0]) == 0.0
    sep = make_reference("cosh", "separable")
    assert sep.value([1.0, -1.0]) == pytest.approx(1.0861612696304874, abs=1e-13)
    scaled = make_reference("cosh", "isotropic", scale=100.0)
    assert scaled.value([1.0, 0.0]) == pytest.approx(54.30806348152437, abs=1e-11)


def test_ref_value_domain_errors():
    iso = make_reference("log_barrier", "isotropic")
    with pytest.raises(DomainError):
        iso.value([0.8, 0.8])  # norm > 1
    sep = make_reference("circular", "separable")
    with pytest.raises(DomainError):
        sep.value([0.5, 1.0])
    # strictly inside is fine
    assert iso.value([0.5, 0.5]) > 0.0


def test_ref_construction_errors():
    with pytest.raises(ValueError, match="shape"):
        make_reference("cosh", "radial")
    with pytest.raises(ValueError, match="scale"):
        make_reference("cosh", "isotropic", scale=0.0)


def test_precond_examples():
    iso = make_reference("cosh", "isotropic")
    assert np.array_equal(iso.precond([0.0, 0.0]), np.zeros(2))
    got = iso.precond([3.0, 4.0])
    np.testing.assert_allclose(got, [1.3874630047636516, 1.849950673018202], atol=1e-14)
    ngd = make_reference("log_barrier", "isotropic", eps=1.0)
    np.testing.assert_allclose(ngd.precond([3.0, 4.0]), [0.5, 2.0 / 3.0], atol=1e-15)


def test_precond_respects_scale():
    # iHGDm configuration: lambda = 100 divides the norm inside arsinh.
    ref = make_reference("cosh", "isotropic", scale=100.0)
    y = np.array([30.0, 40.0])
    expected = np.arcsinh(0.5) / 50.0 * y
    np.testing.assert_allclose(ref.precond(y), expected, rtol=1e-14)


def test_stationarity_examples():
    iso = make_reference("cosh", "isotropic")
    assert iso.stationarity([0.0, 0.0]) == 0.0
    assert iso.stationarity([0.0, math.sqrt(3.0)]) == pytest.approx(1.0, abs=1e-12)
    sep = make_reference("cosh", "separable")
    assert sep.stationarity([0.0, math.sqrt(3.0)]) == pytest.approx(1.0, abs=1e-12)
    # closed form sqrt(1 + ||g||^2) - 1 for the unit isotropic cosh
    rng = make_rng(37)
    for g in gaussian(rng, (20, 3), std=3.0):
        assert iso.stationarity(g) == pytest.approx(
            math.sqrt(1.0 + float(g @ g)) - 1.0, rel=1e-12)


def test_episcale_examples():
    ref = make_reference("cosh", "isotropic")
    x = np.array([0.3, -0.2])
    assert ref.episcale_value(1.0, x) == pytest.approx(ref.value(x), abs=0.0)
    assert ref.episcale_value(0.5, [0.5, 0.0]) == pytest.approx(0.27154031740762186, abs=1e-14)
    quad = make_reference("quadratic", "isotropic")
    for c in (0.25, 2.0, 7.5):
        assert quad.episcale_value(c, x) == pytest.approx(float(x @ x) / (2.0 * c), rel=1e-13)
    with pytest.raises(ValueError, match="positive"):
        ref.episcale_value(0.0, x)
    with pytest.raises(DomainError):
        make_reference("log_barrier", "isotropic").episcale_value(0.5, [0.6, 0.0])


@pytest.mark.parametrize("name", ALL_KERNELS)
@pytest.mark.parametrize("shape", ["isotropic", "separable"])
def test_evenness_and_odd_dual_map(name, shape):
    ref = make_reference(name, shape)
    rng = make_rng(41)
    r = ref.kernel.domain_radius
    for _ in range(50):
        x = gaussian(rng, 3)
        if not math.isinf(r):
            x *= 0.5 / max(np.linalg.norm(x), 1.0)
        y = gaussian(rng, 3, std=3.0)
        assert ref.value(x) == pytest.approx(ref.value(-x), rel=1e-13, abs=1e-15)
        np.testing.assert_allclose(ref.precond(-y), -ref.precond(y), rtol=1e-13)


@pytest.mark.parametrize("name", ALL_KERNELS)
@pytest.mark.parametrize("shape", ["isotropic", "separable"])
def test_dual_map_inverts_gradient(name, shape):
    ref = make_reference(name, shape, scale=2.5)
    rng = make_rng(43)
    for _ in range(50):
        x = gaussian(rng, 4)
        if not math.isinf(ref.kernel.domain_radius):
            x *= 0.45 / max(np.linalg.norm(x), 0.45)
        np.testing.assert_allclose(ref.precond(ref.grad(x)), x, atol=1e-10)


@pytest.mark.parametrize("name", ALL_KERNELS)
@pytest.mark.parametrize("shape", ["isotropic", "separable"])
def test_conjugate_identity(name, shape):
    # phi(grad phi*(y)) = <grad phi*(y), y> - phi*(y)
    ref = make_reference(name, shape, scale=1.5)
    rng = make_rng(47)
    for _ in range(100):
        y = gaussian(rng, 3, std=4.0)
        u = ref.precond(y)
        assert ref.value(u) == pytest.approx(float(u @ y) - ref.conj_value(y), abs=1e-10)


def test_batch_helpers_match_scalar_paths():
    rng = make_rng(53)
    for name, shape in (("cosh", "isotropic"), ("log_barrier", "separable")):
        ref = make_reference(name, shape, scale=1.3)
        Y = gaussian(rng, (40, 3), std=2.0)
        # row-wise norms may differ from the scalar path by one ulp
        np.testing.assert_allclose(precond_batch(ref, Y),
                                   np.stack([ref.precond(y) for y in Y]), rtol=1e-14)
        np.testing.assert_allclose(stationarity_batch(ref, Y),
                                   [ref.stationarity(y) for y in Y], rtol=1e-15)
        X = precond_batch(ref, Y)
        np.testing.assert_allclose(value_batch(ref, X), [ref.value(x) for x in X], rtol=1e-15)


def test_value_batch_domain_error():
    ref = make_reference("log_barrier", "isotropic")
    with pytest.raises(DomainError):
        value_batch(ref, np.array([[0.1, 0.1], [2.0, 0.0]]))


# --- inequality families (small samples; full counts run in acceptance) -----

def test_dual_gap_upper_bound_and_quadratic_equality():
    rng = make_rng(59)
    for name in ALL_KERNELS:
        ref = make_reference(name, "isotropic")
        mu = ref.kernel.strong_convexity
        Y = gaussian(rng, (500, 3), std=3.0)
        stat = stationarity_batch(ref, Y)
        assert np.min(0.5 * np.sum(Y * Y, axis=1) / mu - stat) >= -1e-9
    quad = make_reference("quadratic", "separable")
    Y = gaussian(rng, (200, 3), std=3.0)
    np.testing.assert_allclose(stationarity_batch(quad, Y), 0.5 * np.sum(Y * Y, axis=1), rtol=1e-12)


def test_cosh_local_lower_bound():
    ref = make_reference("cosh", "isotropic")
    rng = make_rng(61)
    beta = 0.05 + 9.95 * rng.random(2000)
    t = rng.random(2000) * beta
    coef = (np.sqrt(1.0 + beta * beta) - 1.0) / (beta * beta)
    lhs = np.array([ref.stationarity([ti]) for ti in t])
    assert np.min(lhs - coef * t * t) >= -1e-12


def test_two_subhomogeneity_grid():
    thetas = np.linspace(0.0, 1.0, 101)
    for name in ("cosh", "log_barrier", "circular"):
        k = kernel_make(name)
        ts = np.linspace(-20.0, 20.0, 81) if math.isinf(k.domain_radius) \
            else np.linspace(-0.999, 0.999, 81)
        tt, th = np.meshgrid(ts, thetas)
        assert np.min(th**2 * np.asarray(k.eval(tt)) - k.eval(th * tt)) >= -1e-12


def test_subconvexity_combinations():
    rng = make_rng(67)
    for name, shape in (("cosh", "isotropic"), ("circular", "separable")):
        ref = make_reference(name, shape)
        for _ in range(300):
            d = int(rng.integers(2, 5))
            lam = rng.random(d)
            lam *= rng.random() / lam.sum()
            pts = gaussian(rng, (d, 3))
            if not math.isinf(ref.kernel.domain_radius):
                pts *= 0.3 / np.maximum(np.linalg.norm(pts, axis=1, keepdims=True), 0.3)
            vals = value_batch(ref, pts)
            mix = ref.value(lam @ pts)
            assert mix <= float(lam @ vals) + 1e-12
            assert mix <= lam.sum() * float(lam @ vals) + 1e-12


def test_noise_majorization_small_sample():
    rng = make_rng(71)
    for shape in ("isotropic", "separable"):
        ref = make_reference("cosh", shape)
        Y = gaussian(rng, (2000, 3), std=4.0)
        Yb = gaussian(rng, (2000, 3), std=4.0)
        D = Y - Yb
        lhs = value_batch(ref, precond_batch(ref, Y) - precond_batch(ref, Yb))
        assert np.min(0.5 * np.sum(D * D, axis=1) - lhs) >= -1e-12
