"""Spectral machinery for the 1-D quantum harmonic oscillator H_y = -d^2/dy^2 + y^2.

The Hermite functions e_n (orthonormal in L^2(R), eigenvalues 2n+1) are the
y-basis of every field in this package.  This module provides basis
construction with Gauss-Hermite quadrature, forward/inverse transforms,
functional calculus in the eigenbasis, and the ladder operators y* and d/dy
needed for the oscillator algebra.

Coefficient arrays are plain complex ndarrays whose *last* axis is the Hermite
index; every routine broadcasts over leading axes so the field layer can batch
one transform across the whole x-grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal

__all__ = [
    "HermiteBasis",
    "build_basis",
    "hermite_values",
    "analyze",
    "synthesize",
    "apply_H_power",
    "apply_y",
    "apply_dy",
    "apply_A1",
    "apply_A2",
]

# Renormalization guard for the three-term recurrence: rescale a node's
# running values when they drift past these magnitudes, tracking the shift
# as a power of two.  Keeps the recurrence valid arbitrarily deep into the
# classically forbidden region where e_n(y) ~ exp(-y^2/2) underflows.
_SCALE_LO = 1e-250
_SCALE_HI = 1e250
_SCALE_SHIFT = 831  # 2**831 ~ 1.4e250


def hermite_values(n_modes, y):
    """Evaluate e_0..e_{n_modes-1} at the points ``y``.

    Returns an array of shape ``(len(y), n_modes)``.  Built from
    e_0 = pi^{-1/4} exp(-y^2/2) and the stable recurrence

        e_{n+1}(y) = sqrt(2/(n+1)) y e_n(y) - sqrt(n/(n+1)) e_{n-1}(y),

    never from the Rodrigues formula (factorials overflow past n ~ 85).
    Values that genuinely underflow double precision come back as 0.
    """
    y = np.asarray(y, dtype=float)
    out = np.empty((y.size, n_modes))
    # scaled recurrence: true e_n = cur * 2**(-shift)
    shift = np.zeros(y.size, dtype=np.int64)
    prev = np.zeros(y.size)
    cur = np.pi ** -0.25 * np.exp(-0.5 * y**2)
    tiny = np.abs(cur) < _SCALE_LO
    if tiny.any():
        # exp(-y^2/2) underflows at extreme quadrature nodes (|y| > ~37.6);
        # seed the recurrence there in scaled form, true e_0 = cur * 2**(-shift)
        ylog2 = (-0.5 * y[tiny] ** 2 - 0.25 * np.log(np.pi)) / np.log(2.0)
        k = np.ceil(-ylog2).astype(np.int64)
        cur = cur.copy()
        cur[tiny] = np.exp2(ylog2 + k)
        shift[tiny] = k
    out[:, 0] = np.ldexp(cur, -shift.clip(max=1060))
    for n in range(n_modes - 1):
        nxt = np.sqrt(2.0 / (n + 1)) * y * cur - np.sqrt(n / (n + 1)) * prev
        prev, cur = cur, nxt
        mag = np.maximum(np.abs(cur), np.abs(prev))
        lo = mag < _SCALE_LO
        if lo.any():
            prev[lo] = np.ldexp(prev[lo], _SCALE_SHIFT)
            cur[lo] = np.ldexp(cur[lo], _SCALE_SHIFT)
            shift[lo] += _SCALE_SHIFT
        hi = mag > _SCALE_HI
        if hi.any():
            prev[hi] = np.ldexp(prev[hi], -_SCALE_SHIFT)
            cur[hi] = np.ldexp(cur[hi], -_SCALE_SHIFT)
            shift[hi] -= _SCALE_SHIFT
        out[:, n + 1] = np.ldexp(cur, -shift.clip(max=1060))
    return out


@dataclass(frozen=True)
class HermiteBasis:
    """Gauss-Hermite quadrature plus tabulated Hermite functions.

    ``quad_weights`` are rescaled so that sum_k w_k f(y_k) approximates
    integral f(y) dy directly for f with Gaussian decay -- the exp(+y^2)
    factor of the classical Gauss-Hermite weights is folded in analytically,
    which avoids underflow for q beyond ~100.
    """

    n_max: int
    quad_nodes: np.ndarray
    quad_weights: np.ndarray
    basis_table: np.ndarray  # (q, n_max), entry (k, n) = e_n(y_k)
    eigenvalues: np.ndarray = field(init=False)

    def __post_init__(self):
        object.__setattr__(
            self, "eigenvalues", 2.0 * np.arange(self.n_max) + 1.0
        )
        for name in ("quad_nodes", "quad_weights", "basis_table", "eigenvalues"):
            getattr(self, name).setflags(write=False)

    @property
    def q(self):
        return self.quad_nodes.size


def build_basis(n_max, q):
    """Construct a HermiteBasis with q Gauss-Hermite nodes.

    Nodes come from the Golub-Welsch eigenproblem of the Hermite Jacobi
    matrix; the rescaled weight at node y_k is 1 / sum_{n<q} e_n(y_k)^2
    (the Christoffel function), exact for integrands in span{e_m e_n : m+n < 2q}
    against dy.  Requires q >= 2*n_max so products of two retained basis
    functions are integrated exactly.
    """
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    if q < 2 * n_max:
        raise ValueError(
            f"quadrature size q={q} cannot resolve products of {n_max} modes; "
            f"need q >= {2 * n_max}"
        )
    # Jacobi matrix for orthonormal Hermite polynomials: zero diagonal,
    # off-diagonal sqrt(k/2)
    offdiag = np.sqrt(0.5 * np.arange(1, q))
    nodes = eigh_tridiagonal(np.zeros(q), offdiag, eigvals_only=True)
    table_full = hermite_values(q, nodes)
    weights = 1.0 / np.sum(table_full**2, axis=1)
    return HermiteBasis(
        n_max=n_max,
        quad_nodes=nodes,
        quad_weights=weights,
        basis_table=np.ascontiguousarray(table_full[:, :n_max]),
    )


def analyze(values, basis):
    """Project node samples onto Hermite coefficients: c_n = sum_k w_k f(y_k) e_n(y_k).

    ``values`` has the quadrature axis last; leading axes broadcast.
    Exact for functions in span{e_0..e_{n_max-1}} when q >= 2 n_max.
    """
    values = np.asarray(values)
    if values.shape[-1] != basis.q:
        raise ValueError(
            f"last axis {values.shape[-1]} != quadrature size {basis.q}"
        )
    return values @ (basis.quad_weights[:, None] * basis.basis_table)


def synthesize(coeffs, basis):
    """Evaluate sum_n c_n e_n at the quadrature nodes (inverse of analyze)."""
    coeffs = np.asarray(coeffs)
    n = coeffs.shape[-1]
    if n > basis.n_max:
        raise ValueError(f"{n} coefficients exceed basis n_max={basis.n_max}")
    return coeffs @ basis.basis_table[:, :n].T


def apply_H_power(coeffs, gamma):
    """Functional calculus H_y^gamma: multiply c_n by (2n+1)^gamma.

    Negative powers are fine since the spectrum starts at 1.
    """
    coeffs = np.asarray(coeffs)
    n = np.arange(coeffs.shape[-1])
    return coeffs * (2.0 * n + 1.0) ** gamma


def _ladder(coeffs, sign):
    # out_m = sqrt((m+1)/2) c_{m+1} + sign * sqrt(m/2) c_{m-1}, length fixed;
    # the component raised onto e_{n_max} is dropped and its L^2 mass returned.
    coeffs = np.asarray(coeffs)
    m = coeffs.shape[-1]
    idx = np.arange(m)
    up = np.sqrt(0.5 * (idx + 1.0))
    down = np.sqrt(0.5 * idx)
    out = np.zeros_like(coeffs, dtype=np.result_type(coeffs, float))
    out[..., :-1] = up[:-1] * coeffs[..., 1:]
    out[..., 1:] += sign * down[1:] * coeffs[..., :-1]
    leakage = 0.5 * m * float(np.sum(np.abs(coeffs[..., -1]) ** 2))
    return out, leakage


def apply_y(coeffs):
    """Multiplication by y in coefficient space.

    Ladder action y e_n = sqrt(n/2) e_{n-1} + sqrt((n+1)/2) e_{n+1}; the top
    component leaking past the truncation is dropped and its squared L^2 norm
    (n_max/2)|c_{n_max-1}|^2 (summed over leading axes) is returned alongside.
    """
    return _ladder(coeffs, +1.0)


def apply_dy(coeffs):
    """d/dy in coefficient space: d/dy e_n = sqrt(n/2) e_{n-1} - sqrt((n+1)/2) e_{n+1}.

    Same truncation-leakage convention as apply_y.
    """
    return _ladder(coeffs, -1.0)


def apply_A1(coeffs, t):
    """A_1(t) = y sin(t) - i cos(t) d/dy, in coefficient space.

    The components leaked past the truncation by y* and d/dy are collinear,
    so the combined leaked vector sqrt(n_max/2) c_top (sin t + i cos t) has
    squared norm equal to either ladder's leakage alone.
    """
    cy, ly = apply_y(coeffs)
    cd, ld = apply_dy(coeffs)
    return np.sin(t) * cy - 1j * np.cos(t) * cd, np.sin(t) ** 2 * ly + np.cos(t) ** 2 * ld


def apply_A2(coeffs, t):
    """A_2(t) = y cos(t) + i sin(t) d/dy, in coefficient space."""
    cy, ly = apply_y(coeffs)
    cd, ld = apply_dy(coeffs)
    return np.cos(t) * cy + 1j * np.sin(t) * cd, np.cos(t) ** 2 * ly + np.sin(t) ** 2 * ld
