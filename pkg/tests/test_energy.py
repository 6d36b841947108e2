import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from artifact.energy import (
    EllipticityBounds,
    EnergyModel,
    eval_energy,
    grad_energy,
    hessian_energy,
    hessian_eigenvalues,
    ellipticity_ratio,
    lambda_Lambda_bounds,
    monotonicity_gap,
    pucci_minus,
    subdifferential_membership,
    support_function,
)
from artifact.errors import InvalidRange, NotSymmetric, ZeroGradientPoint

from conftest import random_spd


# --- model validation ---------------------------------------------------------------


@pytest.mark.parametrize("b, p", [(0.0, 2.0), (-1.0, 2.0), (1.0, 1.0), (1.0, 0.5), (np.inf, 2.0)])
def test_model_rejects_bad_parameters(b, p):
    with pytest.raises(ValueError):
        EnergyModel(b, p)


def test_generalized_needs_spd_matrix():
    with pytest.raises(NotSymmetric):
        EnergyModel.generalized(1.0, 2.0, [[1.0, 0.5], [0.0, 1.0]])
    with pytest.raises(ValueError):
        EnergyModel.generalized(1.0, 2.0, [[1.0, 0.0], [0.0, -1.0]])
    with pytest.raises(ValueError):
        EnergyModel(1.0, 2.0, "standard", np.eye(2))


def test_w_vanishes_at_origin_with_zero_gradient(model_2d):
    assert model_2d.w(np.zeros(2)) == 0
    assert_allclose(model_2d.grad_w(np.zeros(2)), 0.0)


# --- closed-form values ----------------------------------------------------------------


@pytest.mark.parametrize(
    "b, p, z, expected",
    [
        (1.0, 2.0, [0.0, 0.0], 0.0),
        (1.0, 2.0, [1.0, 0.0], 1.5),
        (2.0, 3.0, [0.0, 2.0], 4.0 + 8.0 / 3.0),
    ],
)
def test_eval_energy(b, p, z, expected):
    assert eval_energy(EnergyModel(b, p), z) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize(
    "b, p, z, expected",
    [(1.0, 2.0, [1.0, 0.0], [2.0, 0.0]), (1.0, 3.0, [0.0, 2.0], [0.0, 5.0])],
)
def test_grad_energy(b, p, z, expected):
    assert_allclose(grad_energy(EnergyModel(b, p), z), expected, rtol=1e-15)


def test_smooth_quantities_reject_zero(model_2d):
    for fn in (grad_energy, hessian_energy, hessian_eigenvalues, ellipticity_ratio):
        with pytest.raises(ZeroGradientPoint):
            fn(model_2d, np.zeros(2))


@pytest.mark.parametrize(
    "b, p, z, expected",
    [
        (1.0, 2.0, [1.0, 0.0], np.diag([1.0, 2.0])),
        (1.0, 3.0, [2.0, 0.0], np.diag([4.0, 2.5])),
        (1e-12, 2.0, [0.3, -0.4], np.eye(2)),
    ],
)
def test_hessian_energy(b, p, z, expected):
    assert_allclose(hessian_energy(EnergyModel(b, p), z), expected, rtol=1e-12, atol=1e-11)


def test_hessian_eigenvalues_closed_form():
    spec = hessian_eigenvalues(EnergyModel(1.0, 2.0), [0.6, 0.8])
    assert spec.radial == pytest.approx(1.0)
    assert spec.tangential == pytest.approx(2.0)
    assert spec.tangential_multiplicity == 1
    small = hessian_eigenvalues(EnergyModel(1.0, 2.0), [0.01, 0.0])
    assert small.tangential / small.radial == pytest.approx(101.0, rel=1e-12)


def test_closed_form_eigenvalues_match_eigensolver(rng):
    for _ in range(200):
        model = EnergyModel(rng.uniform(0.1, 3), rng.uniform(1.1, 4))
        z = rng.normal(size=rng.integers(1, 4))
        spec = hessian_eigenvalues(model, z)
        numeric = np.linalg.eigvalsh(hessian_energy(model, z))
        assert_allclose(spec.eigenvalues, numeric, rtol=1e-10)


@pytest.mark.parametrize("b, p, z, exact, bound", [(1.0, 2.0, [1.0, 0.0], 2.0, 2.0), (1.0, 4.0, [1.0, 0.0], 1.5, 4.0)])
def test_ellipticity_ratio(b, p, z, exact, bound):
    r = ellipticity_ratio(EnergyModel(b, p), z)
    assert r.exact == pytest.approx(exact)
    assert r.paper_bound == pytest.approx(bound)


def test_ellipticity_ratio_large_gradient_tends_to_one():
    assert ellipticity_ratio(EnergyModel(1.0, 2.0), [1e8, 0.0]).exact == pytest.approx(1.0, abs=1e-7)


@pytest.mark.parametrize(
    "b, p, mu0, M0, lam, Lam",
    [(1.0, 2.0, 1.0, 2.0, 1.0, 2.0), (1.0, 3.0, 1.0, 1.0, 1.0, 3.0), (1.0, 2.0, 0.5, 1.5, 1.0, 3.0)],
)
def test_lambda_Lambda_bounds(b, p, mu0, M0, lam, Lam):
    bounds = lambda_Lambda_bounds(EnergyModel(b, p), mu0, M0)
    assert (bounds.lam, bounds.Lam) == pytest.approx((lam, Lam))
    assert bounds.to_dict() == {"mu0": mu0, "M0": M0, "lambda": bounds.lam, "Lambda": bounds.Lam}


@pytest.mark.parametrize("mu0, M0", [(2.0, 1.0), (0.0, 1.0), (-1.0, 1.0), (1.0, np.inf)])
def test_lambda_Lambda_bounds_invalid_range(mu0, M0):
    with pytest.raises(InvalidRange):
        lambda_Lambda_bounds(EnergyModel(1.0, 2.0), mu0, M0)


@pytest.mark.parametrize(
    "M, lam, Lam, expected",
    [
        (np.diag([1.0, -1.0]), 1.0, 2.0, -1.0),
        (np.zeros((2, 2)), 1.0, 2.0, 0.0),
        (np.diag([3.0, -2.0, -2.0]), 1.0, 3.0, -9.0),
    ],
)
def test_pucci_minus(M, lam, Lam, expected):
    assert pucci_minus(M, EllipticityBounds(1.0, 1.0, lam, Lam)) == pytest.approx(expected)


def test_pucci_rejects_nonsymmetric():
    with pytest.raises(NotSymmetric):
        pucci_minus(np.array([[0.0, 1.0], [0.0, 0.0]]), EllipticityBounds(1, 1, 1, 1))


def test_pucci_is_infimum_of_traces(rng):
    bounds = EllipticityBounds(1.0, 1.0, 0.7, 2.9)
    for _ in range(300):
        n = rng.integers(1, 4)
        S = rng.normal(size=(n, n))
        M = S + S.T
        q, _ = np.linalg.qr(rng.normal(size=(n, n)))
        A = q.T @ np.diag(rng.uniform(bounds.lam, bounds.Lam, n)) @ q
        assert np.trace(A @ M) >= pucci_minus(M, bounds) - 1e-12 * (1 + np.abs(M).max())


def test_pucci_on_psd_is_lambda_trace(rng):
    S = rng.normal(size=(3, 3))
    M = S @ S.T
    b = EllipticityBounds(1, 1, 0.4, 5.0)
    assert pucci_minus(M, b) == pytest.approx(0.4 * np.trace(M))


@pytest.mark.parametrize(
    "b, zeta, expected", [(1.0, [1.0, 0.0], 1.0), (1.0, [0.0, 0.0], 0.0), (2.0, [0.0, 3.0], 1.5)]
)
def test_support_function(b, zeta, expected):
    assert support_function(EnergyModel(b, 2.0), zeta) == pytest.approx(expected)


def test_support_function_matches_sampled_sup(model_2d, rng):
    theta = np.linspace(0, 2 * np.pi, 10_000, endpoint=False)
    dirs = np.column_stack([np.cos(theta), np.sin(theta)])
    ball = dirs / model_2d.psi(dirs)[:, None]  # boundary of {Psi <= 1}
    zeta = np.array([0.3, -1.2])
    assert support_function(model_2d, zeta) == pytest.approx(np.max(ball @ zeta), rel=1e-6)


@pytest.mark.parametrize(
    "z, zeta, expected",
    [([1.0, 0.0], [1.0, 0.0], True), ([0.0, 0.0], [0.5, 0.5], True), ([1.0, 0.0], [0.0, 1.0], False)],
)
def test_subdifferential_membership(z, zeta, expected):
    assert subdifferential_membership(EnergyModel(1.0, 2.0), z, zeta, 0.0) is expected


def test_subdifferential_membership_rejects_negative_tol():
    with pytest.raises(ValueError):
        subdifferential_membership(EnergyModel(1.0, 2.0), [1.0, 0.0], [1.0, 0.0], -1.0)


@pytest.mark.parametrize(
    "p, z1, z2, expected",
    [(2.0, [0.0, 0.0], [1.0, 0.0], 1.0), (2.5, [0.3, 0.1], [0.3, 0.1], 0.0), (3.0, [-1.0, 0.0], [1.0, 0.0], 4.0)],
)
def test_monotonicity_gap(p, z1, z2, expected):
    assert monotonicity_gap(EnergyModel(1.0, p), z1, z2) == pytest.approx(expected)


# --- properties ---------------------------------------------------------------------------

finite = st.floats(-50, 50, allow_nan=False)
vec2 = st.tuples(finite, finite).map(np.array).filter(lambda z: np.linalg.norm(z) > 1e-3)
models = st.sampled_from(
    [
        EnergyModel(1.0, 2.0),
        EnergyModel(0.3, 1.5),
        EnergyModel(2.0, 3.5),
        EnergyModel.generalized(1.0, 2.0, [[4.0, 0.0], [0.0, 1.0]]),
        EnergyModel.generalized(0.5, 2.7, [[2.0, -0.6], [-0.6, 0.8]]),
    ]
)


@settings(max_examples=200, deadline=None)
@given(models, vec2, vec2)
def test_strict_monotonicity(model, z1, z2):
    if np.linalg.norm(z1 - z2) > 1e-6:
        assert monotonicity_gap(model, z1, z2) > 0


@settings(max_examples=200, deadline=None)
@given(models, vec2, st.floats(0.01, 100))
def test_psi_positive_homogeneity(model, z, lam):
    assert model.psi(lam * z) == pytest.approx(lam * model.psi(z), rel=1e-12)


@settings(max_examples=200, deadline=None)
@given(models, vec2)
def test_hessian_is_symmetric_positive_definite(model, z):
    H = hessian_energy(model, z)
    assert_allclose(H, H.T, atol=1e-12 * np.abs(H).max())
    assert np.linalg.eigvalsh(H)[0] > 0


def test_batched_evaluation_matches_pointwise(model_2d, rng):
    Z = rng.normal(size=(7, 5, 2))
    H = hessian_energy(model_2d, Z)
    assert H.shape == (7, 5, 2, 2)
    assert_allclose(H[3, 2], hessian_energy(model_2d, Z[3, 2]))
    assert_allclose(grad_energy(model_2d, Z)[6, 4], grad_energy(model_2d, Z[6, 4]))


def test_generalized_identity_reduces_to_standard(rng):
    std = EnergyModel(1.3, 2.6)
    gen = EnergyModel.generalized(1.3, 2.6, np.eye(3))
    Z = rng.normal(size=(50, 3))
    assert_allclose(eval_energy(gen, Z), eval_energy(std, Z), rtol=1e-14)
    assert_allclose(hessian_energy(gen, Z), hessian_energy(std, Z), rtol=1e-12, atol=1e-14)


def test_generalized_bounds_sandwich_eigenvalues(rng):
    for _ in range(100):
        A = random_spd(rng, 2)
        model = EnergyModel.generalized(rng.uniform(0.2, 2), rng.uniform(1.2, 3.5), A)
        mu0 = rng.uniform(0.1, 1.0)
        M0 = mu0 * rng.uniform(1.0, 3.0)
        bounds = lambda_Lambda_bounds(model, mu0, M0)
        r = rng.uniform(mu0, M0)
        z = r * rng.normal(size=2)
        z *= r / np.linalg.norm(z)
        eig = np.linalg.eigvalsh(hessian_energy(model, z))
        assert bounds.lam * (1 - 1e-12) <= eig[0] and eig[-1] <= bounds.Lam * (1 + 1e-12)
