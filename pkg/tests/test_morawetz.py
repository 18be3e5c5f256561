"""Interaction-Morawetz pieces against direct integrals and pair sums."""

import math

import numpy as np
import pytest

import phnls.evolution as ev
import phnls.field as fld
import phnls.morawetz as mor
from phnls.field import DomainConfig, XProfile, init_product_state, random_localized_field, to_physical

DOM = DomainConfig(d=1, L=8.0, N_x=64, n_max=8, q=16, alpha=5.0, omega=1.0)


def _rho_and_current(f):
    """Mass density and momentum current in x, by hand from the raw data."""
    phys = to_physical(f)
    dom = phys.domain
    wy = dom.basis.quad_weights
    k = 2.0 * math.pi * np.fft.fftfreq(dom.N_x, d=dom.dx)
    du = np.fft.ifft(1j * k[:, None] * np.fft.fft(phys.data, axis=0), axis=0)
    rho = np.sum(np.abs(phys.data) ** 2 * wy, axis=-1)
    J = np.sum((phys.data.conj() * du).imag * wy, axis=-1)
    return rho, J


def _brute_interaction(f, R):
    """O(N^2) pair sum with its own minimal-image wrap (d = 1 only)."""
    dom = f.domain
    rho, J = _rho_and_current(f)
    weights = mor.build_weights(mor.CutoffConfig(), R, dom.alpha, dom.d)
    x = fld.x_axis(dom)
    total = 0.0
    for i in range(dom.N_x):
        w = x[i] - x
        w = np.where(w > dom.L, w - 2.0 * dom.L, w)
        w = np.where(w <= -dom.L, w + 2.0 * dom.L, w)
        w[np.isclose(np.abs(w), dom.L)] = 0.0  # Nyquist slab has no odd image
        total += rho[i] * np.sum(weights.psi(np.abs(w)) * w * J)
    return 2.0 * total * dom.dx**2


def test_cutoff_profile_plateau_ramp_support():
    cut = mor.CutoffConfig(eta=0.2)
    assert cut.chi(0.0) == 1.0
    assert cut.chi(0.79) == 1.0
    assert cut.chi(1.0) == 0.0
    assert cut.chi(1.3) == 0.0
    # quintic smoothstep crosses 1/2 mid-ramp (table-interpolation grade)
    assert abs(cut.chi(0.9) - 0.5) < 1e-9
    r = np.linspace(0.0, 1.2, 400)
    assert (np.diff(cut.chi(r)) <= 1e-15).all()


@pytest.mark.parametrize("eta", [0.0, 0.5, -0.1])
def test_cutoff_rejects_bad_ramp_width(eta):
    with pytest.raises(ValueError):
        mor.CutoffConfig(eta=eta)


def test_weight_tables_match_direct_correlation_integrals():
    cut = mor.CutoffConfig(eta=0.1)
    w = mor.build_weights(cut, 1.0, 5.0, 1)
    s = np.linspace(-1.0, 1.0, 20001)
    chi2 = cut.chi(np.abs(s)) ** 2
    chi7 = cut.chi(np.abs(s)) ** 7.0
    for r in (0.0, 0.4, 1.1, 1.8):
        phi_direct = np.trapezoid(chi2 * cut.chi(np.abs(r - s)) ** 2, s) / 2.0
        varphi_direct = np.trapezoid(chi7 * cut.chi(np.abs(r - s)) ** 2, s) / 2.0
        assert abs(w.phi(r) - phi_direct) < 1e-7
        assert abs(w.varphi(r) - varphi_direct) < 1e-7
    # support edge carries FFT roundoff; past the table the lookup is hard zero
    assert abs(w.phi(2.0)) < 1e-15
    assert w.phi(2.5) == 0.0


def test_running_average_continues_as_integral_over_r():
    w = mor.build_weights(mor.CutoffConfig(), 2.0, 5.0, 1)
    # psi_R(r) = (1/r) int_0^r phi_R; past the support that is integral / (r/R)
    assert abs(w.psi(5.0) * 2.5 - w.integral) < 1e-12
    assert abs(w.psi(8.0) * 4.0 - w.integral) < 1e-12
    # and the table agrees with a cumulative trapezoid of phi at an interior r
    rr = np.linspace(0.0, 1.5, 30001)
    cum = np.trapezoid(w.phi(2.0 * rr[rr <= 1.5]), 2.0 * rr[rr <= 1.5])
    assert abs(w.psi(3.0) * 1.5 - cum / 2.0) < 1e-6


def test_weights_only_rescale_with_R():
    cut = mor.CutoffConfig()
    w1 = mor.build_weights(cut, 1.0, 5.0, 1)
    w3 = mor.build_weights(cut, 3.0, 5.0, 1)
    r = np.array([0.0, 0.3, 0.9, 1.7])
    assert np.array_equal(w1.phi(r), w3.phi(3.0 * r))
    assert np.array_equal(w1.psi(r), w3.psi(3.0 * r))


@pytest.mark.parametrize("bad", [(0.0, 1), (-2.0, 1), (math.inf, 1), (4.0, 4)])
def test_build_weights_rejects_bad_scale_or_dimension(bad):
    R, d = bad
    with pytest.raises(ValueError):
        mor.build_weights(mor.CutoffConfig(), R, 5.0, d)


def test_interaction_M_matches_pair_sum(rng):
    f = random_localized_field(DOM, rng)
    for R in (1.0, 2.5):
        fast = mor.interaction_M(f, R)
        brute = _brute_interaction(f, R)
        assert abs(fast - brute) < 1e-10 * max(1.0, abs(brute))


def test_interaction_M_is_odd_under_conjugation(rng):
    f = to_physical(random_localized_field(DOM, rng))
    M = mor.interaction_M(f, 2.0)
    M_conj = mor.interaction_M(f.with_data(f.data.conj()), 2.0)
    assert abs(M + M_conj) < 1e-12 * max(1.0, abs(M))
    # and a smooth real profile carries no current, only roundoff
    g = init_product_state(DOM, XProfile(sigma=1.0), amplitude=0.5)
    assert abs(mor.interaction_M(g, 2.0)) < 1e-14


def test_interaction_M_is_translation_invariant_on_the_torus(rng):
    f = to_physical(random_localized_field(DOM, rng))
    g = f.with_data(np.roll(f.data, 17, axis=0))
    M_f = mor.interaction_M(f, 1.5)
    M_g = mor.interaction_M(g, 1.5)
    assert abs(M_f - M_g) < 1e-11 * max(1.0, abs(M_f))


def test_momentum_center_cancels_gauge_boost(rng):
    f = random_localized_field(DOM, rng)
    base = mor.xi(f, 0.0, 6.0)
    boosted = mor.xi(mor.modulate(f, 1.7), 0.0, 6.0)
    assert abs(boosted[0] - (base[0] - 1.7)) < 1e-9
    # boosting by the reported shift cancels the windowed momentum
    settled = mor.xi(mor.modulate(f, base[0]), 0.0, 6.0)
    assert abs(settled[0]) < 1e-9


def test_momentum_center_of_empty_window_is_zero():
    f = init_product_state(DOM, XProfile(sigma=0.5), amplitude=0.5)
    assert np.array_equal(mor.xi(f, 6.5, 0.4), np.zeros(1))


def test_coercivity_holds_for_gentle_and_fails_for_focused():
    gentle = init_product_state(DOM, XProfile(sigma=1.0), amplitude=0.05)
    Q, grad, ok = mor.coercivity_check(gentle, 0.0, 4.0, 0.5)
    assert ok and Q > 0.5 * grad > 0.0
    focused = init_product_state(DOM, XProfile(sigma=1.0), amplitude=3.0)
    Q, grad, ok = mor.coercivity_check(focused, 0.0, 4.0, 0.01)
    assert not ok and Q < 0.0


def test_averaged_lhs_reproducible_and_sized():
    u0 = init_product_state(DOM, XProfile(sigma=1.0), amplitude=0.3)
    tr = ev.evolve(u0, 0.1, ev.StepConfig(dt=5e-3, adapt=False, observe_stride=10, snapshot_interval=0.05))
    out = mor.averaged_lhs(tr, 0.1, 1.0, 1.0, [0.0, 1.0], rng=np.random.default_rng(3))
    again = mor.averaged_lhs(tr, 0.1, 1.0, 1.0, [0.0, 1.0], rng=np.random.default_rng(3))
    assert out.estimate == again.estimate
    assert out.n_samples == len(tr.snapshots) * 2
    assert out.estimate > 0.0 and out.stderr >= 0.0
    with pytest.raises(ValueError):
        mor.averaged_lhs(tr, -1.0, 1.0, 1.0, [0.0])
