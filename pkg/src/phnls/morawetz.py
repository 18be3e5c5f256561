"""Interaction-Morawetz diagnostics for the confined NLS flow.

The scattering argument runs through a handful of computable objects: a
radial cutoff chi, its self-correlation weights phi_R / varphi_R and the
running average psi_R, a windowed momentum center xi(t, s, R), the
interaction quantity M(t), a localized coercivity inequality, and a
space-time average tested against dispersion.  This module builds them all
on top of the grid Field type.

Correlation weights are computed once per (eta, alpha, d) in unit radius:
phi_R(x) = omega_d^{-1} (chi^2 * chi^2)(x/R), so a single FFT correlation
serves every R.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field
from functools import lru_cache

import numpy as np
from scipy.signal import fftconvolve

from . import field as fld
from . import functionals as fn
from .field import qsum, to_physical

__all__ = [
    "CutoffConfig",
    "MorawetzWeights",
    "build_weights",
    "xi",
    "modulate",
    "interaction_M",
    "coercivity_check",
    "AveragedLHS",
    "averaged_lhs",
]

# volume of the unit ball, the normalization of the correlation integrals
_UNIT_BALL = {1: 2.0, 2: math.pi, 3: 4.0 * math.pi / 3.0}

# aux-grid points per ramp width eta when correlating the cutoff profiles
_RAMP_SAMPLES = {1: 32, 2: 16, 3: 6}


def _smoothstep(s):
    # 10 s^3 - 15 s^4 + 6 s^5: rises 0 -> 1 on [0, 1] with S' = S'' = 0 at both ends
    return s * s * s * (10.0 + s * (6.0 * s - 15.0))


@dataclass(frozen=True)
class CutoffConfig:
    """Radial cutoff: chi = 1 on r <= 1-eta, quintic ramp to 0 at r = 1.

    The ramp keeps chi C^2, so scaled Laplacians come out O((eta R)^{-2}).
    `profile` is the precomputed radial table; chi() interpolates it.
    """

    eta: float = 0.1
    n_table: int = 8192
    r_table: np.ndarray = dataclass_field(init=False, repr=False, compare=False)
    profile: np.ndarray = dataclass_field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not 0.0 < self.eta < 0.5:
            raise ValueError(f"eta must lie in (0, 1/2), got {self.eta}")
        r = np.linspace(0.0, 1.0, self.n_table + 1)
        vals = np.ones_like(r)
        ramp = r >= 1.0 - self.eta
        vals[ramp] = 1.0 - _smoothstep((r[ramp] - (1.0 - self.eta)) / self.eta)
        vals[-1] = 0.0  # the ramp arithmetic leaves ~1e-16 at r = 1
        r.setflags(write=False)
        vals.setflags(write=False)
        object.__setattr__(self, "r_table", r)
        object.__setattr__(self, "profile", vals)

    def chi(self, r):
        """chi(|x|), exactly zero past the unit support."""
        return np.interp(np.asarray(r, dtype=float), self.r_table, self.profile,
                         right=0.0)


@lru_cache(maxsize=16)
def _unit_tables(eta, alpha, d, n_table):
    """Radial tables of the unit-scale correlations chi^2*chi^2, chi^{a+2}*chi^2."""
    cutoff = CutoffConfig(eta=eta, n_table=n_table)
    h = eta / _RAMP_SAMPLES[d]
    n = int(math.ceil(1.0 / h)) + 2
    ax = np.arange(-n, n + 1) * h
    r2 = np.zeros((ax.size,) * d)
    for a in range(d):
        shape = [1] * d
        shape[a] = ax.size
        r2 = r2 + (ax**2).reshape(shape)
    rad = np.sqrt(r2)
    chi2 = cutoff.chi(rad) ** 2
    chip = cutoff.chi(rad) ** (alpha + 2.0)
    # chi is even, so correlation == convolution; endpoints vanish, so the
    # trapezoid-grade product sum is superconvergent for the C^2 profiles
    corr2 = fftconvolve(chi2, chi2, mode="full") * h**d
    corrp = fftconvolve(chip, chi2, mode="full") * h**d
    center = 2 * n
    slc = (slice(center, None),) + (center,) * (d - 1)
    r = np.arange(2 * n + 1) * h
    phi = corr2[slc] / _UNIT_BALL[d]
    varphi = corrp[slc] / _UNIT_BALL[d]
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (phi[1:] + phi[:-1]) * h)])
    psi = np.empty_like(phi)
    psi[0] = phi[0]
    psi[1:] = cum[1:] / r[1:]
    for arr in (r, phi, varphi, psi):
        arr.setflags(write=False)
    return r, phi, varphi, psi, float(cum[-1])


@dataclass(frozen=True)
class MorawetzWeights:
    """Radial lookup tables for phi_R, varphi_R, psi_R at a fixed R.

    phi_R(x) = (omega_d R^d)^{-1} int chi^2((x-s)/R) chi^2(s/R) ds, varphi_R
    the same with chi^{alpha+2} in the first slot, psi_R the radial running
    average of phi_R.  Tables are stored in unit radius r/R; psi_R continues
    past the table as integral/(r/R), which is exact once phi_R's support
    (|x| <= 2R) is left behind.
    """

    R: float
    alpha: float
    d: int
    eta: float
    r_table: np.ndarray
    phi_table: np.ndarray
    varphi_table: np.ndarray
    psi_table: np.ndarray
    integral: float

    def phi(self, r):
        return np.interp(np.asarray(r, dtype=float) / self.R,
                         self.r_table, self.phi_table, right=0.0)

    def varphi(self, r):
        return np.interp(np.asarray(r, dtype=float) / self.R,
                         self.r_table, self.varphi_table, right=0.0)

    def psi(self, r):
        rho = np.asarray(r, dtype=float) / self.R
        near = np.interp(rho, self.r_table, self.psi_table)
        far = self.integral / np.maximum(rho, self.r_table[-1])
        return np.where(rho <= self.r_table[-1], near, far)


def build_weights(cutoff, R, alpha, d):
    """Correlation weights for window scale R; the heavy FFT work is cached
    per (eta, alpha, d) since R only rescales the argument."""
    if not (np.isfinite(R) and R > 0.0):
        raise ValueError(f"R must be positive and finite, got {R}")
    if d not in _UNIT_BALL:
        raise ValueError(f"d must be 1, 2 or 3, got {d}")
    r, phi, varphi, psi, integral = _unit_tables(
        float(cutoff.eta), float(alpha), int(d), int(cutoff.n_table)
    )
    return MorawetzWeights(
        R=float(R), alpha=float(alpha), d=int(d), eta=float(cutoff.eta),
        r_table=r, phi_table=phi, varphi_table=varphi, psi_table=psi,
        integral=integral,
    )


def _window(domain, s, R, cutoff):
    """chi((|x - s|)/R) over the x-grid."""
    s = np.broadcast_to(np.asarray(s, dtype=float).reshape(-1), (domain.d,))
    ax = fld.x_axis(domain)
    r2 = np.zeros(domain.x_shape)
    for a in range(domain.d):
        shape = [1] * domain.d
        shape[a] = domain.N_x
        r2 = r2 + ((ax - s[a]) ** 2).reshape(shape)
    return cutoff.chi(np.sqrt(r2) / R)


def xi(f, s, R, cutoff=None):
    """Momentum center of the window chi_R(. - s): the gauge shift that
    cancels the windowed x-momentum.

    xi = -Im int chi_R^2 conj(u) grad_x u dz / int chi_R^2 |u|^2 dz, or 0
    when the windowed mass sits below 1e-12 of the total (two-case
    definition; avoids dividing by an empty window).
    """
    dom = f.domain
    if cutoff is None:
        cutoff = CutoffConfig()
    win2 = _window(dom, s, R, cutoff) ** 2
    phys, grads = fn._x_gradients(f)
    w = fld._phys_weights(dom)
    dens = np.abs(phys.data) ** 2
    denom = qsum(win2[..., None] * dens * w)
    if denom <= 1e-12 * qsum(dens * w):
        return np.zeros(dom.d)
    out = np.empty(dom.d)
    for a in range(dom.d):
        mom = (phys.data.conj() * grads[a]).imag
        out[a] = -qsum(win2[..., None] * mom * w) / denom
    return out


def modulate(f, k):
    """Gauge boost e^{i k . x} f."""
    dom = f.domain
    phys = to_physical(f)
    k = np.broadcast_to(np.asarray(k, dtype=float).reshape(-1), (dom.d,))
    ax = fld.x_axis(dom)
    phase = np.zeros(dom.x_shape)
    for a in range(dom.d):
        shape = [1] * dom.d
        shape[a] = dom.N_x
        phase = phase + (k[a] * ax).reshape(shape)
    return phys.with_data(phys.data * np.exp(1j * phase)[..., None])


def _kernel_component(domain, weights, axis):
    """K_a(w) = psi_R(|w|) w_a on the minimal-image displacement grid.

    Displacements live on the torus; each coordinate is wrapped to (-L, L].
    The Nyquist plane w_a = L is its own mirror image, so that slab is
    zeroed to keep the kernel exactly odd under w -> -w.
    """
    N = domain.N_x
    off = np.arange(N) * domain.dx
    wrap = np.where(off > domain.L, off - 2.0 * domain.L, off)
    r2 = np.zeros(domain.x_shape)
    comp = None
    for a in range(domain.d):
        shape = [1] * domain.d
        shape[a] = N
        r2 = r2 + (wrap**2).reshape(shape)
        if a == axis:
            comp = np.broadcast_to(wrap.reshape(shape), domain.x_shape).copy()
    K = weights.psi(np.sqrt(r2)) * comp
    if N % 2 == 0:
        cut = [slice(None)] * domain.d
        cut[axis] = N // 2
        K[tuple(cut)] = 0.0
    return K


def interaction_M(f, R, cutoff=None, weights=None):
    """Interaction quantity M = 2 iint rho(x1) psi_R(x1-x2)(x1-x2) . J(x2).

    rho = int |u|^2 dy and J = int Im(conj(u) grad_x u) dy reduce the pair
    integral to x only; the convolution with the odd kernel psi_R(w) w runs
    through the FFT on the periodic box.
    """
    dom = f.domain
    if weights is None:
        if cutoff is None:
            cutoff = CutoffConfig()
        weights = build_weights(cutoff, R, dom.alpha, dom.d)
    phys, grads = fn._x_gradients(f)
    wy = dom.basis.quad_weights
    rho = np.sum(np.abs(phys.data) ** 2 * wy, axis=-1)
    total = 0.0
    axes = tuple(range(dom.d))
    for a in range(dom.d):
        J = np.sum((phys.data.conj() * grads[a]).imag * wy, axis=-1)
        K = _kernel_component(dom, weights, a)
        conv = np.fft.ifftn(np.fft.fftn(K, axes=axes) * np.fft.fftn(J, axes=axes),
                            axes=axes).real
        total += qsum(rho * conv)
    return 2.0 * total * dom.dx ** (2 * dom.d)


def coercivity_check(f, s, R, delta, cutoff=None):
    """Localized semivirial test: Q(chi_R(.-s) u^xi) >= delta * ||grad_x of it||^2.

    Returns (Q_loc, grad_loc, pass).  The gauge shift xi removes the windowed
    momentum first, which is what makes a uniform delta possible along a
    scattering trajectory.
    """
    if cutoff is None:
        cutoff = CutoffConfig()
    k = xi(f, s, R, cutoff)
    centered = modulate(f, k)
    win = _window(f.domain, s, R, cutoff)
    localized = centered.with_data(centered.data * win[..., None])
    nb = fn.base_norms(localized)
    Q_loc = fn.semivirial_Q(localized, nb)
    return Q_loc, nb.grad_x_sq, bool(Q_loc >= delta * nb.grad_x_sq)


@dataclass(frozen=True)
class AveragedLHS:
    """Monte-Carlo average with its sampling error; n_samples = (t, s, R) tuples."""

    estimate: float
    stderr: float
    n_samples: int


def averaged_lhs(trace, T0, J0, R0, s_samples, cutoff=None, rng=None):
    """Space-time average of the windowed mass x localized-gradient product.

    For each stored snapshot with t <= T0 and each window center s, draw R
    log-uniform on [R0, R0 e^{J0}] and accumulate
        (int |chi_R(.-s) u|^2 dz) * ||grad_x(chi_R(.-s) u^xi)||^2.
    With those sampling measures the plain mean *is* the (J0 T0)^{-1} dR/R dt
    average.  Restricted to d <= 2; the d = 3 cost is out of scope.
    """
    if cutoff is None:
        cutoff = CutoffConfig()
    if rng is None:
        rng = np.random.default_rng(0)
    window = [(t, snap) for (t, snap) in trace.snapshots if t <= T0 + 1e-12]
    if not window:
        raise ValueError(f"trace holds no snapshots in [0, {T0}]")
    if window[0][1].domain.d > 2:
        raise ValueError("averaged_lhs supports d <= 2 only")
    vals = []
    for _, snap in window:
        phys = to_physical(snap)
        w = fld._phys_weights(phys.domain)
        dens = np.abs(phys.data) ** 2
        for s in s_samples:
            R = R0 * math.exp(J0 * rng.random())
            win = _window(phys.domain, s, R, cutoff)
            loc_mass = qsum(win[..., None] ** 2 * dens * w)
            k = xi(phys, s, R, cutoff)
            localized = modulate(phys, k)
            localized = localized.with_data(localized.data * win[..., None])
            grad_loc = fn.norms(localized).grad_x_sq
            vals.append(loc_mass * grad_loc)
    vals = np.array(vals)
    est = float(vals.mean())
    err = float(vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else 0.0
    return AveragedLHS(estimate=est, stderr=err, n_samples=int(vals.size))
