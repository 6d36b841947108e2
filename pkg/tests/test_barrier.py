import json
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from artifact import barrier
from artifact.barrier import BarrierContext, BarrierSpec
from artifact.energy import EnergyModel, lambda_Lambda_bounds
from artifact.errors import CenterSingularity, InvalidDimension


def context(p=2.0, c=(1.0, 0.0), **kw):
    return BarrierContext(b=1.0, p=p, c=np.array(c), **kw)


def unit_spec(variant, alpha, beta=1.0, n=2):
    c = np.zeros(n)
    c[0] = 1.0
    ctx = BarrierContext(b=1.0, p=2.0, c=c)
    return BarrierSpec(variant, alpha, beta, ctx, ctx.bounds())


def random_annulus(rng, count, n=2, R=1.0):
    d = rng.normal(size=(count, n))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    return rng.uniform(R / 2, R, (count, 1)) * d


# --- context ----------------------------------------------------------------------------------


def test_context_validation():
    with pytest.raises(InvalidDimension):
        BarrierContext(1.0, 2.0, [1.0])
    with pytest.raises(ValueError):
        context(c=(0.0, 0.0))
    with pytest.raises(ValueError):
        context(m=0.0)
    with pytest.raises(ValueError):
        context(center=np.zeros(3))
    with pytest.raises(ValueError):
        BarrierContext(1.0, 2.0, [1.0, 0.0], model=EnergyModel(2.0, 2.0))


@pytest.mark.parametrize("p", [2.0, 3.0])
def test_context_bounds_use_gradient_window(p):
    ctx = context(p)
    ref = lambda_Lambda_bounds(EnergyModel(1.0, p), 0.5, 1.5)
    assert ctx.bounds().lam == ref.lam and ctx.bounds().Lam == ref.Lam
    assert json.loads(json.dumps(ctx.to_dict())) == ctx.to_dict()


# --- closed forms ----------------------------------------------------------------------------------


def test_exponential_vanishes_on_outer_sphere():
    spec = barrier.construct_exponential(context())
    pts = np.array([[1.0, 0.0], [0.0, -1.0], [-1.0, 0.0]])
    assert np.all(barrier.eval_barrier(spec, pts).h == 0.0)


def test_power_vanishes_on_outer_sphere():
    spec = barrier.construct_power(context(R=2.0))
    pts = np.array([[2.0, 0.0], [0.0, 2.0]])
    assert np.all(barrier.eval_barrier(spec, pts).h == 0.0)


def test_exponential_eigenvalues_at_unit_radius():
    ev = barrier.eval_barrier(unit_spec("exponential", 1.0), [0.0, 1.0])
    assert ev.eig_parallel == pytest.approx(2 * np.exp(-1))
    assert ev.eig_perp == pytest.approx(-2 * np.exp(-1))


def test_power_eigenvalues_at_unit_radius():
    ev = barrier.eval_barrier(unit_spec("power", 1.0, 1.0), [1.0, 0.0])
    assert ev.eig_parallel == pytest.approx(2.0)
    assert ev.eig_perp == pytest.approx(-1.0)


def test_center_singularity():
    with pytest.raises(CenterSingularity):
        barrier.eval_barrier(unit_spec("power", 1.0), [0.0, 0.0])


@pytest.mark.parametrize("variant", ["exponential", "power"])
@pytest.mark.parametrize("n", [2, 3, 5])
def test_eigenvalues_match_hessian_spectrum(variant, n, rng):
    spec = unit_spec(variant, rng.uniform(0.5, 20.0), rng.uniform(0.1, 2.0), n=n)
    x = random_annulus(rng, 1000, n)
    ev = barrier.eval_barrier(spec, x)
    eig = np.linalg.eigvalsh(ev.hess_h)
    closed = np.sort(np.column_stack([ev.eig_parallel] + [ev.eig_perp] * (n - 1)), axis=1)
    scale = np.abs(eig).max(axis=1, keepdims=True)
    assert np.all(np.abs(eig - closed) <= 1e-10 * scale)
    # the parallel eigenvector is the radial direction
    radial = np.einsum("kij,kj->ki", ev.hess_h, x)
    assert_allclose(radial, ev.eig_parallel[:, None] * x, rtol=1e-10, atol=1e-12 * scale.max())


@pytest.mark.parametrize("variant", ["exponential", "power"])
def test_derivatives_match_finite_differences(variant, rng):
    spec = unit_spec(variant, 3.0, 0.5)
    x = random_annulus(rng, 50)
    eps = 1e-6
    ev = barrier.eval_barrier(spec, x)
    for k in range(2):
        e = np.zeros(2)
        e[k] = eps
        plus, minus = barrier.eval_barrier(spec, x + e), barrier.eval_barrier(spec, x - e)
        assert_allclose((plus.h - minus.h) / (2 * eps), ev.grad_h[:, k], rtol=1e-6, atol=1e-8)
        assert_allclose((plus.grad_h - minus.grad_h) / (2 * eps), ev.hess_h[:, :, k], rtol=1e-6, atol=1e-8)


@pytest.mark.parametrize("variant", ["exponential", "power"])
def test_unit_hessian_times_factor(variant, rng):
    spec = unit_spec(variant, 2.5, 0.7)
    x = random_annulus(rng, 100)
    ev = barrier.eval_barrier(spec, x)
    k = np.exp(ev.log_factor)
    assert_allclose(ev.hess_h, k[:, None, None] * ev.hess_unit, rtol=1e-12)
    assert_allclose(ev.grad_h, -k[:, None] * x, rtol=1e-12)


def test_large_alpha_survives_underflow():
    # strongly anisotropic window: alpha near 1000 and exp(-alpha r^2) underflows
    ctx = BarrierContext(b=1.0, p=4.0, c=np.array([0.25, 0.0]))
    spec = barrier.construct_exponential(ctx)
    assert spec.alpha > 700
    assert np.all(barrier.eval_barrier(spec, [[0.0, 0.95]]).hess_h == 0.0)
    assert barrier.verify_barrier(spec, 2000).passed


def test_eval_accepts_batches():
    spec = unit_spec("exponential", 4.0)
    x = np.full((3, 4, 2), 0.6)
    ev = barrier.eval_barrier(spec, x)
    assert ev.h.shape == (3, 4) and ev.grad_h.shape == (3, 4, 2) and ev.hess_h.shape == (3, 4, 2, 2)


# --- construction ----------------------------------------------------------------------------------


@pytest.mark.parametrize("p", [2.0, 3.0])
def test_exponential_construction_is_feasible(p):
    spec = barrier.construct_exponential(context(p))
    bounds = spec.bounds
    assert spec.alpha > max(2.0, 2 * (1 + bounds.Lam / bounds.lam))
    assert all(c["satisfied"] for c in spec.conditions().values())
    # minimal: just below the returned value some condition fails
    below = spec.with_alpha(spec.alpha * (1 - 1e-6))
    assert not all(c["satisfied"] for c in below.conditions().values())


def test_exponential_alpha_value():
    # c2 binds: alpha exp(-alpha/4) = 1/4
    spec = barrier.construct_exponential(context(2.0))
    assert spec.alpha == pytest.approx(16.84026950828371, rel=1e-8)
    assert spec.alpha * np.exp(-spec.alpha / 4) == pytest.approx(0.25, rel=1e-8)


@pytest.mark.parametrize("p", [2.0, 3.0])
def test_alpha_does_not_grow_with_height(p):
    a = barrier.construct_exponential(context(p, m=1.0)).alpha
    a10 = barrier.construct_exponential(context(p, m=10.0)).alpha
    assert a10 <= a


@pytest.mark.parametrize("m", [0.05, 0.2, 1.0, 30.0])
@pytest.mark.parametrize("R", [0.5, 1.0, 4.0])
def test_exponential_construction_sweep(m, R):
    spec = barrier.construct_exponential(context(3.0, c=(0.6, -0.8), m=m, R=R))
    assert all(c["satisfied"] for c in spec.conditions().values())


def test_third_condition_threshold_vanishes_for_large_radius():
    thresholds = []
    for R in (1.0, 10.0, 100.0, 1000.0):
        spec = barrier.construct_exponential(context(R=R))
        c3 = spec.conditions()["c3"]["margin"]
        thresholds.append(spec.alpha - c3)
    assert_allclose(thresholds, [2.0, 2e-2, 2e-4, 2e-6])


@pytest.mark.parametrize("p", [2.0, 3.0])
def test_power_construction(p):
    spec = barrier.construct_power(context(p))
    lam, Lam = spec.bounds.lam, spec.bounds.Lam
    assert spec.alpha == pytest.approx(max(Lam / lam - 1, 0) + 1)
    b1, b2 = barrier._power_beta_bounds(spec.context, spec.alpha)
    assert spec.beta == pytest.approx(0.99 * min(b1, b2))
    assert all(c["satisfied"] for c in spec.conditions().values())


def test_power_isotropic_limit():
    # for p = 2 and large |c| the ellipticity ratio tends to 1
    spec = barrier.construct_power(context(2.0, c=(1e9, 0.0)))
    assert spec.alpha == pytest.approx(1.0, abs=1e-8)


def test_power_beta_for_large_height():
    spec = barrier.construct_power(context(2.0, m=1e12))
    _, b2 = barrier._power_beta_bounds(spec.context, spec.alpha)
    assert spec.beta == pytest.approx(0.99 * b2)


def test_spec_validation():
    ctx = context()
    with pytest.raises(ValueError):
        BarrierSpec("gaussian", 1.0, 1.0, ctx, ctx.bounds())
    with pytest.raises(ValueError):
        BarrierSpec("power", -1.0, 1.0, ctx, ctx.bounds())


# --- verification ----------------------------------------------------------------------------------


@pytest.mark.parametrize("p", [2.0, 3.0])
@pytest.mark.parametrize("construct", [barrier.construct_exponential, barrier.construct_power])
def test_constructed_barriers_verify(p, construct):
    spec = construct(context(p))
    start = time.perf_counter()
    cert = barrier.verify_barrier(spec, 10_000)
    assert time.perf_counter() - start <= 1.0
    assert cert.passed and cert.witness is None
    assert cert.checks["trace"]["value"] >= cert.checks["pucci"]["value"]
    assert cert.checks["grad_norm"]["value"] <= 0.5


def test_sub_threshold_alpha_fails_with_pucci_witness():
    spec = barrier.construct_exponential(context()).with_alpha(1.0)
    cert = barrier.verify_barrier(spec, 10_000)
    assert not cert.passed
    assert cert.witness["check"] == "pucci"
    assert cert.witness["value"] <= 0
    assert len(cert.witness["point"]) == 2


def test_verification_is_deterministic():
    spec = barrier.construct_power(context(3.0))
    a = barrier.verify_barrier(spec, 500, seed=3).to_dict()
    b = barrier.verify_barrier(spec, 500, seed=3).to_dict()
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)
    assert json.loads(json.dumps(a))["passed"] is True


def test_verify_rejects_empty_sample():
    with pytest.raises(ValueError):
        barrier.verify_barrier(barrier.construct_power(context()), 0)


def test_samples_cover_annulus():
    ctx = context(center=np.array([0.3, -1.0]), R=2.0)
    annulus, sphere = barrier.sample_points(ctx, 4000, seed=1)
    r = np.linalg.norm(annulus - ctx.center, axis=1)
    assert r.min() >= 1.0 and r.max() <= 2.0
    assert_allclose(np.linalg.norm(sphere - ctx.center, axis=1), 2.0)
    # uniform in area: about a quarter of the annulus area lies below r^2 = 7/4
    assert np.mean(r**2 <= 1.75) == pytest.approx(0.25, abs=0.01)


@pytest.mark.parametrize("p", [2.0, 3.0])
@pytest.mark.parametrize("construct", [barrier.construct_exponential, barrier.construct_power])
def test_annulus_properties(p, construct, rng):
    spec = construct(context(p, c=(0.0, 2.0)))
    x = random_annulus(rng, 1000)
    ev = barrier.eval_barrier(spec, x)
    # gradient window for v = h + <c, x>
    gv = np.linalg.norm(ev.grad_h + spec.context.c, axis=1)
    assert np.all((gv >= 1.0) & (gv <= 3.0))
    assert np.all(ev.eig_parallel > 0) and np.all(ev.eig_perp < 0)


@settings(max_examples=30, deadline=None)
@given(
    st.floats(1.2, 4.0),
    st.floats(0.2, 5.0),
    st.floats(0.05, 20.0),
    st.floats(0.3, 3.0),
)
def test_constructions_verify_for_random_contexts(p, c_norm, m, R):
    ctx = BarrierContext(b=1.0, p=p, c=np.array([c_norm, 0.0]), m=m, R=R)
    for construct in (barrier.construct_exponential, barrier.construct_power):
        assert barrier.verify_barrier(construct(ctx), 500).passed
