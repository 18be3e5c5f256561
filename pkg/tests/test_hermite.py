import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from phnls import hermite


@pytest.fixture(scope="module")
def basis():
    return hermite.build_basis(32, 64)


def test_orthonormal_under_quadrature(basis):
    w = basis.quad_weights
    gram = basis.basis_table.T @ (w[:, None] * basis.basis_table)
    assert np.abs(gram - np.eye(basis.n_max)).max() < 1e-12


def test_against_scipy_hermite_functions(basis):
    # independent construction: physicists' Hermite polynomial times the
    # Gaussian, normalized -- evaluated with scipy's polynomial routine
    from scipy.special import eval_hermite
    from scipy.special import gammaln

    y = basis.quad_nodes
    for n in (0, 1, 5, 17, 30):
        lognorm = 0.5 * (n * np.log(2.0) + gammaln(n + 1) + 0.5 * np.log(np.pi))
        ref = eval_hermite(n, y) * np.exp(-0.5 * y * y - lognorm)
        assert np.abs(basis.basis_table[:, n] - ref).max() < 1e-10


def test_quadrature_integrates_gaussian_moments(basis):
    # GH quadrature with the weight folded into the nodes: integral of
    # y^{2k} e^{-y^2} should come out exact for reachable degrees
    y, w = basis.quad_nodes, basis.quad_weights
    gauss = np.exp(-0.5 * y * y)
    for k, exact in [(0, np.sqrt(np.pi)), (1, np.sqrt(np.pi) / 2), (2, 3 * np.sqrt(np.pi) / 4)]:
        got = float(np.sum(w * y ** (2 * k) * gauss * gauss))
        assert abs(got - exact) < 1e-13 * exact


def test_analyze_synthesize_roundtrip(basis, rng=np.random.default_rng(0)):
    c = rng.standard_normal((5, basis.n_max)) + 1j * rng.standard_normal((5, basis.n_max))
    back = hermite.analyze(hermite.synthesize(c, basis), basis)
    assert np.abs(back - c).max() < 1e-13


def test_eigenvalues_are_odd_integers(basis):
    assert np.array_equal(basis.eigenvalues, 2.0 * np.arange(32) + 1.0)


def test_ladder_identity_number_operator():
    """y^2 - d^2/dy^2 acting through the ladders reproduces 2n+1."""
    n_max = 24
    eye = np.eye(n_max)
    y2, _ = hermite.apply_y(hermite.apply_y(eye)[0])
    d2, _ = hermite.apply_dy(hermite.apply_dy(eye)[0])
    h = y2 - d2
    expect = np.diag(2.0 * np.arange(n_max) + 1.0)
    # top two modes leak past the truncation; the rest are exact
    assert np.abs(h[:, : n_max - 2] - expect[:, : n_max - 2]).max() < 1e-12


@given(t=st.floats(min_value=-6.0, max_value=6.0, allow_nan=False))
@settings(max_examples=25, deadline=None)
def test_A1_sq_plus_A2_sq_is_H_at_any_t(t):
    """The rotating pair satisfies A1(t)^2 + A2(t)^2 = y^2 - d^2/dy^2 = H.

    The cross terms i sin t cos t (y d + d y) cancel between the squares,
    so the sum must reproduce the 2n+1 diagonal for every t.
    """
    n_max = 16
    eye = np.eye(n_max, dtype=complex)
    a1, _ = hermite.apply_A1(eye, t)
    a1a1, _ = hermite.apply_A1(a1, t)
    a2, _ = hermite.apply_A2(eye, t)
    a2a2, _ = hermite.apply_A2(a2, t)
    h = a1a1 + a2a2
    expect = np.diag(2.0 * np.arange(n_max) + 1.0)
    assert np.abs(h[:, : n_max - 2] - expect[:, : n_max - 2]).max() < 1e-11


def test_apply_y_matches_pointwise_multiplication(basis, rng=np.random.default_rng(7)):
    # dual route: multiply by the node values and re-analyze; both sides are
    # the same projection of y*u, so they agree to round-off
    c = rng.standard_normal(basis.n_max) + 1j * rng.standard_normal(basis.n_max)
    via_ladder, _ = hermite.apply_y(c)
    via_nodes = hermite.analyze(basis.quad_nodes * hermite.synthesize(c, basis), basis)
    assert np.abs(via_ladder - via_nodes).max() < 1e-11


def test_apply_H_power_matches_eigenvalue_scaling(basis):
    c = np.zeros(basis.n_max)
    c[7] = 2.5
    out = hermite.apply_H_power(c, 0.5)
    assert abs(out[7] - 2.5 * np.sqrt(15.0)) < 1e-12


def test_ladder_leak_is_reported():
    c = np.zeros(8)
    c[7] = 1.0  # top mode: raising must leak
    _, leak = hermite.apply_A2(c, 0.0)
    assert leak > 0.0
