"""Tensor-grid states on R^d x R: Fourier in x on a periodic box, Hermite in y.

A `Field` carries a complex array of shape (N_x,)*d + (m,) -- the confined
y-direction is always the last axis, holding either Gauss-Hermite node samples
(m = q) or Hermite coefficients (m = n_max).  The x-axes hold either grid
samples on [-L, L)^d or Fourier coefficients at frequencies pi*k/L.

Normalization conventions, used everywhere downstream:

* physical quadrature is trapezoidal in x (exact for periodic band-limited
  integrands) times Gauss-Hermite in y, so the weight per grid point is
  dx^d * w_k;
* the spectral array is the orthonormal FFT times dx^{d/2} composed with the
  Hermite projection, so sum |u_hat|^2 equals the squared L^2 norm in every
  representation.
"""

from __future__ import annotations

import math
import os
import struct
import tempfile
import warnings
from dataclasses import dataclass, field as dc_field
from functools import lru_cache

import numpy as np
from scipy.signal import czt

from . import hermite

__all__ = [
    "DomainConfig",
    "Field",
    "NormBundle",
    "XProfile",
    "ResolutionError",
    "init_product_state",
    "to_spectral",
    "to_physical",
    "norms",
    "aniso_norm",
    "gn_quotient",
    "scale_x",
    "apply_Aj",
    "boundary_mass_fraction",
    "second_moment_x",
    "random_localized_field",
    "save_field",
    "load_field",
    "qsum",
]


class ResolutionError(ValueError):
    """The requested operation cannot be represented on the current grid."""


def qsum(a):
    """Compensated sum of a real array (exact rounding via math.fsum).

    Quadrature sums feed small differences of O(1) quantities (e.g. the
    semivirial functional near the ground state), so plain left-to-right
    accumulation is not good enough.
    """
    a = np.asarray(a)
    return math.fsum(a.ravel().tolist())


@dataclass(frozen=True)
class DomainConfig:
    """Everything that fixes the discretization of R^d x R.

    The x-box is [-L, L) per axis with N_x points; y uses n_max Hermite modes
    with a q-point Gauss-Hermite rule.  alpha is the nonlinearity exponent and
    omega the frequency parameter of the action.
    """

    d: int = 1
    L: float = 64.0
    N_x: int = 2048
    n_max: int = 64
    q: int = 128
    alpha: float = 5.0
    omega: float = 1.0

    def __post_init__(self):
        if self.d < 1:
            raise ValueError(f"d must be >= 1, got {self.d}")
        if self.L <= 0:
            raise ValueError(f"L must be positive, got {self.L}")
        if self.N_x < 2 or self.N_x & (self.N_x - 1):
            raise ValueError(f"N_x must be a power of two, got {self.N_x}")
        if self.q < 2 * self.n_max:
            raise ValueError(f"need q >= 2*n_max, got q={self.q}, n_max={self.n_max}")
        if self.omega <= 0:
            raise ValueError(f"omega must be positive, got {self.omega}")
        lo = 4.0 / self.d
        hi = math.inf if self.d == 1 else 4.0 / (self.d - 1)
        if not lo < self.alpha < hi:
            warnings.warn(
                f"alpha={self.alpha} outside the intercritical window "
                f"({lo}, {hi}) for d={self.d}; variational identities may fail",
                stacklevel=2,
            )

    @property
    def dx(self):
        return 2.0 * self.L / self.N_x

    @property
    def basis(self):
        return _basis_cache(self.n_max, self.q)

    @property
    def x_shape(self):
        return (self.N_x,) * self.d


@lru_cache(maxsize=None)
def _basis_cache(n_max, q):
    return hermite.build_basis(n_max, q)


@lru_cache(maxsize=None)
def x_axis(domain):
    return -domain.L + domain.dx * np.arange(domain.N_x)


@lru_cache(maxsize=None)
def xi_axis(domain):
    return 2.0 * np.pi * np.fft.fftfreq(domain.N_x, d=domain.dx)


@lru_cache(maxsize=None)
def x_radius_sq(domain):
    """|x|^2 on the x-grid, shape (N_x,)*d."""
    ax = x_axis(domain)
    r2 = np.zeros(domain.x_shape)
    for a in range(domain.d):
        shape = [1] * domain.d
        shape[a] = domain.N_x
        r2 = r2 + (ax**2).reshape(shape)
    return r2


@lru_cache(maxsize=None)
def xi_sq(domain):
    """|xi|^2 on the Fourier grid, shape (N_x,)*d."""
    k = xi_axis(domain)
    s = np.zeros(domain.x_shape)
    for a in range(domain.d):
        shape = [1] * domain.d
        shape[a] = domain.N_x
        s = s + (k**2).reshape(shape)
    return s


@dataclass(frozen=True)
class Field:
    """State on the tensor grid with explicit representation tags."""

    data: np.ndarray
    x_space: str  # "physical" | "fourier"
    y_space: str  # "nodes" | "hermite"
    domain: DomainConfig

    def __post_init__(self):
        if self.x_space not in ("physical", "fourier"):
            raise ValueError(f"bad x_space tag {self.x_space!r}")
        if self.y_space not in ("nodes", "hermite"):
            raise ValueError(f"bad y_space tag {self.y_space!r}")
        m = self.domain.q if self.y_space == "nodes" else self.domain.n_max
        want = self.domain.x_shape + (m,)
        if self.data.shape != want:
            raise ValueError(f"data shape {self.data.shape} != expected {want}")

    def with_data(self, data, x_space=None, y_space=None):
        return Field(
            data=data,
            x_space=self.x_space if x_space is None else x_space,
            y_space=self.y_space if y_space is None else y_space,
            domain=self.domain,
        )


def _x_axes(domain):
    return tuple(range(domain.d))


def to_spectral(f):
    """Fourier in x, Hermite coefficients in y (no-op axes skipped)."""
    data = f.data
    dom = f.domain
    if f.x_space == "physical":
        data = np.fft.fftn(data, axes=_x_axes(dom), norm="ortho") * dom.dx ** (dom.d / 2.0)
    if f.y_space == "nodes":
        data = hermite.analyze(data, dom.basis)
    return Field(data, "fourier", "hermite", dom)


def to_physical(f):
    """Grid samples in x, node values in y."""
    data = f.data
    dom = f.domain
    if f.y_space == "hermite":
        data = hermite.synthesize(data, dom.basis)
    if f.x_space == "fourier":
        data = np.fft.ifftn(data, axes=_x_axes(dom), norm="ortho") / dom.dx ** (dom.d / 2.0)
    return Field(data, "physical", "nodes", dom)


@dataclass(frozen=True)
class XProfile:
    """L^2-normalized Gaussian bump per x-axis: center x0, carrier momentum xi0."""

    sigma: float = 1.0
    center: float = 0.0
    momentum: float = 0.0


def _profile_values(domain, profile):
    if profile.sigma > domain.L / 4.0:
        raise ResolutionError(
            f"profile sigma={profile.sigma} wider than box allows (L/4 = {domain.L / 4})"
        )
    ax = x_axis(domain)
    s = profile.sigma
    g1 = (np.pi * s**2) ** -0.25 * np.exp(
        -((ax - profile.center) ** 2) / (2.0 * s**2)
    ) * np.exp(1j * profile.momentum * ax)
    out = np.ones(domain.x_shape, dtype=complex)
    for a in range(domain.d):
        shape = [1] * domain.d
        shape[a] = domain.N_x
        out = out * g1.reshape(shape)
    return out


def init_product_state(domain, profile=XProfile(), n=0, amplitude=1.0):
    """u(x, y) = amplitude * g(x) * e_n(y), physical representation.

    g is the product of identical per-axis L^2-normalized Gaussians, so the
    field has mass |amplitude|^2 exactly (up to quadrature).
    """
    if n >= domain.n_max:
        raise ValueError(f"Hermite index {n} >= n_max={domain.n_max}")
    g = _profile_values(domain, profile)
    en = domain.basis.basis_table[:, n]
    data = amplitude * g[..., None] * en
    return Field(data, "physical", "nodes", domain)


def _phys_weights(domain):
    return domain.dx**domain.d * domain.basis.quad_weights


def mass_of(f):
    p = to_physical(f)
    w = _phys_weights(f.domain)
    return qsum(np.abs(p.data) ** 2 * w)


@dataclass(frozen=True)
class NormBundle:
    """All the pieces of the Sigma-norm plus requested L^p norms."""

    l2: float
    grad_x_sq: float
    dy_sq: float
    y_weight_sq: float
    lp: dict
    sigma_sq: float = dc_field(init=False)

    def __post_init__(self):
        object.__setattr__(
            self,
            "sigma_sq",
            self.grad_x_sq + self.dy_sq + self.l2**2 + self.y_weight_sq,
        )


def norms(f, p_list=()):
    """NormBundle of a field: L^2/L^p by physical quadrature, derivatives spectrally.

    grad_x_sq uses the |xi|^2 multiplier, dy_sq / y_weight_sq the ladder
    operators (with the truncation-leaked top-mode mass added back, so the
    quadratic forms are exact on the retained span).  Rejects p < 1.
    """
    dom = f.domain
    phys = to_physical(f)
    spec = to_spectral(f)
    w = _phys_weights(dom)
    absu = np.abs(phys.data)
    mass = qsum(absu**2 * w)
    lp = {}
    for p in p_list:
        if p < 1:
            raise ValueError(f"L^p norm needs p >= 1, got {p}")
        lp[p] = qsum(absu**p * w) ** (1.0 / p)
    grad_x_sq = qsum(xi_sq(dom)[..., None] * np.abs(spec.data) ** 2)
    cy, leak_y = hermite.apply_y(spec.data)
    cd, leak_d = hermite.apply_dy(spec.data)
    y_weight_sq = qsum(np.abs(cy) ** 2) + leak_y
    dy_sq = qsum(np.abs(cd) ** 2) + leak_d
    return NormBundle(
        l2=math.sqrt(mass),
        grad_x_sq=grad_x_sq,
        dy_sq=dy_sq,
        y_weight_sq=y_weight_sq,
        lp=lp,
    )


def aniso_norm(f, p, s=0.0):
    """Mixed norm ( integral ||u(x,.)||_{H_y^s}^p dx )^{1/p}, sup over the grid for p = inf.

    The Hermite-Sobolev weight enters as (2n+1)^{s/2} on the y-coefficients.
    """
    dom = f.domain
    spec_y = f if f.y_space == "hermite" else to_spectral(f)
    # x physical, y spectral
    data = spec_y.data
    if spec_y.x_space == "fourier":
        data = np.fft.ifftn(data, axes=_x_axes(dom), norm="ortho") / dom.dx ** (dom.d / 2.0)
    if s:
        data = hermite.apply_H_power(data, s / 2.0)
    hy = np.sqrt(np.sum(np.abs(data) ** 2, axis=-1))
    if p == np.inf or p == math.inf:
        return float(hy.max())
    if p < 1:
        raise ValueError(f"need p >= 1, got {p}")
    return qsum(hy**p * dom.dx**dom.d) ** (1.0 / p)


def gn_quotient(f):
    """Anisotropic Gagliardo-Nirenberg ratio of a nonzero field:

        ||u||_{a+2}^{a+2} / ( ||grad_x u||^{ad/2} ||d_y u||^{a/2} ||u||^{(4-a(d-1))/2} )

    with a = alpha.  Finiteness and empirical boundedness over generic smooth
    fields is the property of interest; the value of the best constant never
    enters any computation here.
    """
    dom = f.domain
    a = dom.alpha
    nb = norms(f, p_list=[a + 2.0])
    num = nb.lp[a + 2.0] ** (a + 2.0)
    den = (
        nb.grad_x_sq ** (a * dom.d / 4.0)
        * nb.dy_sq ** (a / 4.0)
        * nb.l2 ** ((4.0 - a * (dom.d - 1.0)) / 2.0)
    )
    if den == 0.0:
        raise ValueError("Gagliardo-Nirenberg quotient undefined for the zero field")
    return num / den


def boundary_mass_fraction(f):
    """Fraction of mass sitting at |x| > 0.9 L (the periodization police)."""
    dom = f.domain
    phys = to_physical(f)
    w = _phys_weights(dom)
    dens = np.abs(phys.data) ** 2 * w
    total = qsum(dens)
    if total == 0.0:
        return 0.0
    tail = x_radius_sq(dom) > (0.9 * dom.L) ** 2
    return qsum(dens[tail]) / total


def second_moment_x(f):
    """integral |x|^2 |u|^2 dz  (the raw semivirial weight; box-tail sensitive)."""
    dom = f.domain
    phys = to_physical(f)
    w = _phys_weights(dom)
    return qsum(x_radius_sq(dom)[..., None] * np.abs(phys.data) ** 2 * w)


def _tail_radius(dens, r2, tail=1e-12):
    """Smallest radius whose complement holds at most a `tail` mass fraction.

    Mass-based rather than amplitude-based so that broadband round-off dust
    (e.g. from a previous chirp-z resampling) does not inflate the estimate.
    The cumulative sum is normalized so its plateau is exactly 1.0; `tail`
    must stay well above machine epsilon for the comparison to be meaningful.
    """
    dens = dens.ravel()
    r2 = r2.ravel()
    order = np.argsort(r2)
    csum = np.cumsum(dens[order])
    if csum[-1] == 0.0:
        return 0.0
    csum /= csum[-1]
    idx = min(int(np.searchsorted(csum, 1.0 - tail)), order.size - 1)
    return math.sqrt(float(r2[order[idx]]))


def _support_radius(values, domain, tail=1e-12):
    dens = np.sum(np.abs(values) ** 2, axis=-1)
    return _tail_radius(dens, x_radius_sq(domain), tail)


def scale_x(f, lam):
    """Mass-preserving x-dilation u^lam(x, y) = lam^{d/2} u(lam x, y).

    Implemented axis-by-axis as a chirp-z transform of the Fourier data --
    i.e. exact evaluation of the band-limited interpolant at the points
    lam * x_j -- so the dilation commutes exactly with band-limited calculus
    (in particular the gradient law ||grad_x u^lam||^2 = lam^2 ||grad_x u||^2).

    Rejects dilations whose result the grid cannot represent: support leaving
    the box (lam < 1) or spectral content pushed past the Nyquist frequency
    (lam > 1).  For lam > 1, output points whose evaluation coordinate lam*x
    falls outside the box take the value 0 (extension by zero) rather than the
    wrap-around value of the periodic interpolant.
    """
    if lam <= 0:
        raise ValueError(f"lam must be positive, got {lam}")
    dom = f.domain
    phys = to_physical(f)
    if lam == 1.0:
        return phys
    if lam < 1.0:
        r = _support_radius(phys.data, dom)
        if r / lam > dom.L:
            raise ResolutionError(
                f"support radius {r:.3g} / lam leaves the box (L={dom.L})"
            )
    else:
        spec = np.fft.fftn(phys.data, axes=_x_axes(dom), norm="ortho")
        kmax = _tail_radius(np.sum(np.abs(spec) ** 2, axis=-1), xi_sq(dom))
        if lam * kmax > np.pi / dom.dx:
            raise ResolutionError(
                f"dilation by {lam} pushes spectrum past the grid Nyquist"
            )
    data = phys.data
    N = dom.N_x
    j = np.arange(N)
    ktil = j - N // 2  # signed frequency in fftshift order
    phase_in = np.exp(1j * np.pi * ktil * (1.0 - lam))
    phase_out = np.exp(-1j * np.pi * lam * j)
    w = np.exp(2j * np.pi * lam / N)
    for a in range(dom.d):
        spec = np.fft.fftshift(np.fft.fft(data, axis=a, norm="ortho"), axes=a)
        shape = [1] * data.ndim
        shape[a] = N
        spec = spec * phase_in.reshape(shape)
        out = czt(spec, m=N, w=w, a=1.0, axis=a)
        data = math.sqrt(lam) / math.sqrt(N) * out * phase_out.reshape(shape)
    if lam > 1.0:
        # Evaluation points lam*x_j beyond the box would pick up the periodic
        # wrap-around copy of the interpolant; extend the input by zero there
        # instead, which is the better estimate for a box-contained field.
        xs = -dom.L + (2.0 * dom.L / N) * j
        alive = (np.abs(lam * xs) <= dom.L).astype(data.real.dtype)
        for a in range(dom.d):
            shape = [1] * data.ndim
            shape[a] = N
            data = data * alive.reshape(shape)
    return Field(data, "physical", "nodes", dom)


def apply_Aj(f, t, j):
    """Apply A_1(t) = y sin t - i cos t d_y or A_2(t) = y cos t + i sin t d_y.

    Returns (field, leakage): the truncated result plus the squared L^2 norm
    of the component raised past the top Hermite mode.
    """
    if j not in (1, 2):
        raise ValueError(f"j must be 1 or 2, got {j}")
    spec = to_spectral(f)
    op = hermite.apply_A1 if j == 1 else hermite.apply_A2
    out, leak = op(spec.data, t)
    return Field(out, "fourier", "hermite", f.domain), leak


def random_localized_field(domain, rng, n_bumps=3, max_hermite=None):
    """Smooth, box-contained random field for property checks.

    A few Gaussian bumps with random centers/widths/momenta carry a random
    low-order Hermite mix with geometrically decaying weights -- smooth in
    both directions, compactly supported well inside the box, generic enough
    to probe the scaling and Gagliardo-Nirenberg identities.
    """
    if max_hermite is None:
        max_hermite = min(domain.n_max, 8)
    data = np.zeros(domain.x_shape + (domain.q,), dtype=complex)
    for _ in range(n_bumps):
        prof = XProfile(
            sigma=rng.uniform(0.7, 1.8) * min(1.0, domain.L / 16.0),
            center=rng.uniform(-domain.L / 6, domain.L / 6),
            momentum=rng.uniform(-1.0, 1.0),
        )
        g = _profile_values(domain, prof)
        c = (rng.standard_normal(max_hermite) + 1j * rng.standard_normal(max_hermite))
        c *= np.exp(-np.arange(max_hermite) / 2.0)
        yvals = domain.basis.basis_table[:, :max_hermite] @ c
        amp = rng.uniform(0.3, 1.0) * np.exp(2j * np.pi * rng.random())
        data += amp * g[..., None] * yvals
    return Field(data, "physical", "nodes", domain)


# --- snapshot file format -------------------------------------------------
#
# header: magic "PHNL", version u32, then d, N_x, n_max, q as u32,
# L, alpha, omega as little-endian f8, then one byte each for the x/y
# representation tags, then the payload as interleaved (re, im) f8 pairs in
# row-major order with the x indices fastest (y-slice index slowest).

_MAGIC = b"PHNL"
_VERSION = 1
_HEADER = struct.Struct("<4sIIIIIdddBB")
_X_TAGS = {"physical": 0, "fourier": 1}
_Y_TAGS = {"nodes": 0, "hermite": 1}


def save_field(f, path):
    """Write a field snapshot (atomic: temp file + rename); bit-exact round trip."""
    header = _HEADER.pack(
        _MAGIC,
        _VERSION,
        f.domain.d,
        f.domain.N_x,
        f.domain.n_max,
        f.domain.q,
        f.domain.L,
        f.domain.alpha,
        f.domain.omega,
        _X_TAGS[f.x_space],
        _Y_TAGS[f.y_space],
    )
    payload = np.ascontiguousarray(np.moveaxis(f.data, -1, 0)).astype("<c16", copy=False)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".phnl-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(header)
            fh.write(payload.tobytes())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_field(path, alpha=None, omega=None):
    """Read a snapshot written by save_field.

    alpha/omega overrides let a snapshot seed an experiment with different
    functional parameters; the grid geometry always comes from the file.
    """
    with open(path, "rb") as fh:
        raw = fh.read(_HEADER.size)
        magic, version, d, N_x, n_max, q, L, f_alpha, f_omega, xt, yt = _HEADER.unpack(raw)
        if magic != _MAGIC:
            raise ValueError(f"{path}: not a PHNL snapshot (magic {magic!r})")
        if version != _VERSION:
            raise ValueError(f"{path}: unsupported snapshot version {version}")
        dom = DomainConfig(
            d=d,
            L=L,
            N_x=N_x,
            n_max=n_max,
            q=q,
            alpha=f_alpha if alpha is None else alpha,
            omega=f_omega if omega is None else omega,
        )
        x_space = {v: k for k, v in _X_TAGS.items()}[xt]
        y_space = {v: k for k, v in _Y_TAGS.items()}[yt]
        m = q if y_space == "nodes" else n_max
        count = N_x**d * m
        payload = np.frombuffer(fh.read(count * 16), dtype="<c16", count=count)
    data = np.moveaxis(payload.reshape((m,) + (N_x,) * d), 0, -1).copy()
    return Field(data, x_space, y_space, dom)
