"""Ground states of -Lap_z phi + y^2 phi + omega phi = |phi|^alpha phi.

Two independent solvers certify each other:

* `solve_petviashvili` -- stabilized fixed-point iteration, the workhorse;
* `solve_scaling_descent` -- preconditioned gradient descent on the dilation-
  projected action W(phi) = S_omega(phi^{lambda_star(phi)}), which minimizes
  the action on the constraint set Q = 0 by construction.

Both return the same certificate bundle: elliptic residual, action value
m_omega, the Q ~ 0 / lambda_star ~ 1 variational signature.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from . import field as fld
from . import functionals as fn
from .field import Field, XProfile, init_product_state, qsum, scale_x, to_physical, to_spectral

__all__ = [
    "SolverOptions",
    "DESCENT_OPTS",
    "GroundStateResult",
    "SolverFailure",
    "elliptic_residual",
    "solve_petviashvili",
    "solve_scaling_descent",
    "classify",
]

logger = logging.getLogger(__name__)


class SolverFailure(RuntimeError):
    """Iteration diverged or stalled before meeting the tolerances."""


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-13  # successive relative L^2 change
    res_tol: float = 1e-10  # elliptic residual, relative to ||phi||_Sigma
    max_iter: int = 800
    gamma_bounds: tuple = (0.05, 20.0)
    min_step: float = 1e-10  # scaling-descent line-search floor


# A strictly monotone line search cannot certify decreases smaller than the
# rounding noise of the action evaluation, which floors the descent's
# residual near sqrt(machine eps) * scale; its default tolerance reflects
# that.  Petviashvili has no such floor and keeps the tighter default above.
DESCENT_OPTS = SolverOptions(res_tol=2e-7)


@dataclass(frozen=True)
class GroundStateResult:
    field: Field
    m_omega: float
    elliptic_residual: float
    Q_value: float
    lambda_star_value: float
    iterations: int
    method: str


def _symbol(domain, omega):
    """|xi|^2 + 2n + 1 + omega on the joint spectral grid."""
    return fld.xi_sq(domain)[..., None] + domain.basis.eigenvalues + omega


def elliptic_residual(f, omega):
    """||(-Lap_z + y^2 + omega) phi - |phi|^alpha phi||_2 / ||phi||_Sigma.

    Both terms are expressed in the (Fourier, Hermite) representation the
    solvers iterate in, so the value certifies the computed fixed point
    itself; basis-truncation error is assessed separately (e.g. by comparing
    m_omega across resolutions).
    """
    dom = f.domain
    phys = to_physical(f)
    spec = to_spectral(f)
    nl = np.abs(phys.data) ** dom.alpha * phys.data
    nl_spec = to_spectral(phys.with_data(nl))
    resid = spec.data * _symbol(dom, omega) - nl_spec.data
    num = math.sqrt(qsum(np.abs(resid) ** 2))
    sig = math.sqrt(fn.base_norms(f).sigma_sq)
    return num / sig


def _default_seed(domain):
    return init_product_state(domain, XProfile(sigma=1.0), n=0, amplitude=1.0)


def _calibrate_gamma(phi, omega, sym, w):
    """Rescale amplitude so the Petviashvili stabilizer starts at 1.

    gamma(c phi) = gamma(phi) / c^alpha, so c = gamma(phi)^{1/alpha} removes
    the amplitude mismatch of an arbitrary seed without touching its shape.
    """
    spec = to_spectral(phi)
    num = qsum(sym * np.abs(spec.data) ** 2)
    den = qsum(np.abs(phi.data) ** (phi.domain.alpha + 2.0) * w)
    if den == 0.0:
        raise SolverFailure("seed has vanishing nonlinear pairing")
    c = (num / den) ** (1.0 / phi.domain.alpha)
    return phi.with_data(phi.data * c)


def _calibrate_lambda(phi):
    """Rescale amplitude so lambda_star(phi) = 1 (puts the seed on Q = 0)."""
    nb = fn.base_norms(phi)
    dom = phi.domain
    pot = nb.lp[dom.alpha + 2.0] ** (dom.alpha + 2.0)
    if nb.grad_x_sq <= 0.0 or pot <= 0.0:
        raise SolverFailure("seed needs nonzero gradient and L^{alpha+2} norm")
    c = (2.0 * (dom.alpha + 2.0) * nb.grad_x_sq / (dom.alpha * dom.d * pot)) ** (
        1.0 / dom.alpha
    )
    return phi.with_data(phi.data * c)


def _certificate(phi, omega, iterations, method):
    # converged iterates carry O(eps) imaginary dust from the FFT round trips
    phi = phi.with_data(phi.data.real.astype(complex))
    rep = fn.report(phi, omega=omega)
    return GroundStateResult(
        field=phi,
        m_omega=rep.action_omega,
        elliptic_residual=elliptic_residual(phi, omega),
        Q_value=rep.Q,
        lambda_star_value=rep.lambda_star if rep.lambda_star is not None else math.nan,
        iterations=iterations,
        method=method,
    )


def solve_petviashvili(domain, omega=None, opts=SolverOptions(), initial=None):
    """Fixed-point iteration phi <- gamma^{(alpha+1)/alpha} (H+omega)^{-1} |phi|^alpha phi.

    The stabilizing factor gamma = <(H+omega) phi, phi> / <|phi|^alpha phi, phi>
    is pinned to 1 at any genuine solution; the exponent (alpha+1)/alpha makes
    that fixed point attracting for the power nonlinearity.  The inverse
    (H + omega)^{-1} is an exact diagonal multiplier in the joint spectral
    representation, so no inner linear-solver tolerance enters.
    """
    if omega is None:
        omega = domain.omega
    if omega <= 0:
        raise ValueError(f"omega must be positive, got {omega}")
    sym = _symbol(domain, omega)
    w = fld._phys_weights(domain)
    alpha = domain.alpha
    phi = to_physical(initial if initial is not None else _default_seed(domain))
    phi = _calibrate_gamma(phi, omega, sym, w)
    g_lo, g_hi = opts.gamma_bounds
    for it in range(1, opts.max_iter + 1):
        spec = to_spectral(phi)
        nl = np.abs(phi.data) ** alpha * phi.data
        nl_spec = to_spectral(phi.with_data(nl))
        num = qsum(sym * np.abs(spec.data) ** 2)
        den = qsum(np.abs(phi.data) ** (alpha + 2.0) * w)
        if den == 0.0:
            raise SolverFailure("iterate collapsed to zero")
        gamma = num / den
        if not g_lo < gamma < g_hi:
            raise SolverFailure(
                f"Petviashvili diverged: gamma={gamma:.3g} left {opts.gamma_bounds} "
                f"at iteration {it}"
            )
        new_spec = gamma ** ((alpha + 1.0) / alpha) * nl_spec.data / sym
        phi_new = to_physical(Field(new_spec, "fourier", "hermite", domain))
        diff = math.sqrt(qsum(np.abs(phi_new.data - phi.data) ** 2 * w))
        base = math.sqrt(qsum(np.abs(phi_new.data) ** 2 * w))
        phi = phi_new
        if diff <= opts.tol * base:
            res = elliptic_residual(phi, omega)
            if res < opts.res_tol:
                logger.info(
                    "petviashvili converged: %d iterations, residual %.3e", it, res
                )
                return _certificate(phi, omega, it, "petviashvili")
    res = elliptic_residual(phi, omega)
    if res < opts.res_tol:
        return _certificate(phi, omega, opts.max_iter, "petviashvili")
    raise SolverFailure(
        f"Petviashvili: no convergence after {opts.max_iter} iterations "
        f"(residual {res:.3e} vs tol {opts.res_tol:.1e})"
    )


def _action_gradient(phi, omega, sym):
    """S'_omega(phi) = (-Lap_z + y^2 + omega) phi - |phi|^alpha phi, physical."""
    dom = phi.domain
    spec = to_spectral(phi)
    lin = to_physical(spec.with_data(sym * spec.data)).data
    nl = np.abs(phi.data) ** dom.alpha * phi.data
    return lin - nl


def solve_scaling_descent(domain, omega=None, opts=DESCENT_OPTS, initial=None):
    """Minimize W(phi) = S_omega(phi^{lambda_star}) by projected descent.

    Each iterate is re-projected onto the constraint set Q = 0 by the exact
    dilation lambda_star, where the action gradient is tangent to first order
    (d/dlam S_omega(phi^lam) at lam=1 equals Q = 0), so a preconditioned
    gradient step with backtracking decreases W monotonically.
    """
    if omega is None:
        omega = domain.omega
    sym = _symbol(domain, omega)
    w = fld._phys_weights(domain)
    phi = to_physical(initial if initial is not None else _default_seed(domain))
    phi = _calibrate_lambda(phi)
    W = fn.action(phi, omega)
    for it in range(1, opts.max_iter + 1):
        grad = _action_gradient(phi, omega, sym)
        gspec = to_spectral(phi.with_data(grad))
        precond = to_physical(gspec.with_data(gspec.data / sym)).data
        gnorm2 = qsum((grad.conj() * precond).real * w)
        step = 1.0
        accepted = False
        while step >= opts.min_step:
            trial = phi.with_data(phi.data - step * precond)
            try:
                lam = fn.lambda_star(trial)
                # A dilation this close to 1 corrects Q by less than the
                # resampling noise it injects; the constraint already holds
                # to |Q| = O(1e-9)*||grad_x||^2 there.
                if abs(lam - 1.0) > 1e-9:
                    trial = scale_x(trial, lam)
            except (ValueError, fld.ResolutionError):
                step *= 0.5
                continue
            W_trial = fn.action(trial, omega)
            if W_trial < W - 1e-4 * step * gnorm2:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            res = elliptic_residual(phi, omega)
            if res < opts.res_tol:
                break
            raise SolverFailure(
                f"scaling descent stalled at iteration {it} "
                f"(residual {res:.3e} vs tol {opts.res_tol:.1e})"
            )
        rel_drop = (W - W_trial) / max(abs(W_trial), 1e-300)
        phi, W = trial, W_trial
        if rel_drop < opts.tol:
            res = elliptic_residual(phi, omega)
            if res < opts.res_tol:
                break
    else:
        it = opts.max_iter
        res = elliptic_residual(phi, omega)
        if res >= opts.res_tol:
            raise SolverFailure(
                f"scaling descent: no convergence after {opts.max_iter} iterations "
                f"(residual {res:.3e})"
            )
    logger.info("scaling descent converged: %d iterations", it)
    return _certificate(phi, omega, it, "scaling_descent")


def classify(f, omega=None, m_omega=None, abs_margin=0.0, rel_margin=1e-3):
    """Place a state relative to the ground-state action threshold.

    K_plus / K_minus split the below-threshold region S_omega < m_omega by the
    sign of Q (>= 0 scatters, < 0 blows up, at least for |z| u_0 in L^2);
    above_threshold and on_boundary record states the dichotomy does not
    classify.  margin = max(abs_margin, rel_margin * m_omega) is the dead band
    around the threshold.
    """
    if omega is None:
        omega = f.domain.omega
    if m_omega is None:
        raise ValueError("classify needs the ground-state action m_omega")
    rep = fn.report(f, omega=omega)
    if rep.mass == 0.0:
        raise ValueError("cannot classify the zero field")
    margin = max(abs_margin, rel_margin * m_omega)
    S, Q = rep.action_omega, rep.Q
    if S < m_omega - margin:
        return "K_plus" if Q >= 0.0 else "K_minus"
    if S >= m_omega + margin:
        return "above_threshold"
    return "on_boundary"
