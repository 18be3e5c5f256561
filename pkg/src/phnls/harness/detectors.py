"""Trace-level verdict detectors and the windowed criterion norm.

Everything here consumes an EvolutionTrace after the fact; nothing feeds
back into the stepping.  Blow-up and scattering are detected from the
recorded functional series, so a persisted trace re-analyzes to the same
verdict as the live run.
"""

from __future__ import annotations

import math

import numpy as np

from .. import functionals as fn
from ..evolution import scattering_profile
from ..field import aniso_norm, to_physical
from .config import DetectorConfig

__all__ = [
    "cauchy_deltas",
    "criterion_norm",
    "detect_blowup",
    "detect_scatter_proxy",
]


def _grad_z_sq(trace):
    return trace.series("grad_x_sq") + trace.series("dy_sq")


def _powerlaw_time(t, g):
    """Blow-up time from g(t) ~ A (T - t)^{-p} on the last few samples.

    For each trial exponent p, g^{-1/p} is affine in t with root T; the
    straightest fit wins.  Returns None when no fit sees growth.
    """
    m = min(8, len(t))
    t, g = t[-m:], g[-m:]
    if m < 3 or np.any(g <= 0):
        return None
    best, best_resid = None, math.inf
    for p in (0.5, 1.0, 2.0):
        y = g ** (-1.0 / p)
        coeffs, resid = np.polyfit(t, y, 1, full=True)[:2]
        slope, icept = coeffs
        if slope >= 0:
            continue  # not growing
        scale = float(np.sum(y**2)) or 1.0
        rel = float(resid[0]) / scale if resid.size else 0.0
        if rel < best_resid:
            best_resid = rel
            best = float(-icept / slope)
    return best


def detect_blowup(trace, blowup_factor=100.0):
    """(fired, t_est): gradient growth with a sustained trend, or dt underflow.

    Fires when ||grad_z u||^2 grew by blowup_factor with the last 5 samples
    monotone increasing, or when the stepper already hit dt_min.  t_est
    extrapolates the gradient's power-law divergence; when the stepper
    underflowed, its own estimate wins (it got closest to the singularity).
    """
    g = _grad_z_sq(trace)
    t = trace.times()
    hit_floor = trace.verdict == "blowup_detected"
    grew = bool(g[-1] >= blowup_factor * g[0])
    trend = len(g) >= 5 and bool(np.all(np.diff(g[-5:]) > 0.0))
    if not (hit_floor or (grew and trend)):
        return False, None
    if hit_floor and trace.blowup_time_estimate is not None:
        return True, float(trace.blowup_time_estimate)
    t_est = _powerlaw_time(t, g)
    return True, t_est


def cauchy_deltas(trace, n_windows=3):
    """Sigma-norm gaps of the linear pullback over dyadic times.

    v(t) = linear_step(u(t), -t) is sampled from the trace snapshots at the
    n_windows+1 dyadic times T, T/2, ..., T/2^n (nearest available snapshot,
    no duplicates); returns ||v(t_{k+1}) - v(t_k)||_Sigma ordered by time.
    A scattering solution makes these decrease; a bound state does not.
    """
    snaps = trace.snapshots
    if len(snaps) < 2:
        return []
    times = np.array([t for t, _ in snaps])
    T = times[-1]
    targets = [T / 2.0**k for k in range(n_windows, -1, -1)]
    idx = sorted({int(np.argmin(np.abs(times - tt))) for tt in targets})
    if len(idx) < 2:
        return []
    profiles = [to_physical(scattering_profile(snaps[i][1], times[i])) for i in idx]
    deltas = []
    for va, vb in zip(profiles, profiles[1:]):
        diff = va.with_data(vb.data - va.data)
        deltas.append(math.sqrt(fn.base_norms(diff).sigma_sq))
    return deltas


def _cauchy_ok(deltas, n_windows, scale):
    """Decreasing deltas, or all already at the roundoff floor.

    An exactly-linear evolution gives deltas ~ 1e-16 * scale in arbitrary
    order; demanding strict decrease there would reject perfect scattering.
    """
    if len(deltas) < n_windows:
        return False
    floor = 1e-10 * scale
    return bool(np.all(np.diff(deltas) < 0.0)) or all(d < floor for d in deltas)


def detect_scatter_proxy(trace, cfg=DetectorConfig()):
    """(fired, evidence): the three observable surrogates of scattering.

    (a) potential energy ||u||_{alpha+2}^{alpha+2} decayed from its maximum
    by >= potential_decay_factor; (b) Q/||grad_x u||^2 ended within 0.05 of 1
    (the nonlinearity no longer contributes); (c) the linear-pullback Cauchy
    deltas decrease across >= cauchy_windows dyadic windows.  A trace whose
    boundary monitor tripped is inconclusive regardless of (a)-(c).
    """
    pot = trace.series("lp_alpha_plus_2")
    Q = trace.series("Q")
    gx = trace.series("grad_x_sq")
    decay_ratio = float(pot.max() / pot[-1]) if pot[-1] > 0 else math.inf
    q_ratio = float(Q[-1] / gx[-1]) if gx[-1] > 0 else 0.0
    deltas = cauchy_deltas(trace, cfg.cauchy_windows)
    boundary_clean = trace.verdict != "boundary_contaminated"
    pot_ok = decay_ratio >= cfg.potential_decay_factor
    q_ok = abs(q_ratio - 1.0) <= 0.05
    scale = math.sqrt(float(gx[-1] + trace.series("mass")[-1]))
    cauchy_ok = _cauchy_ok(deltas, cfg.cauchy_windows, scale)
    fired = boundary_clean and pot_ok and q_ok and cauchy_ok
    evidence = {
        "potential_decay_ratio": decay_ratio,
        "q_over_grad_final": q_ratio,
        "cauchy_deltas": [float(d) for d in deltas],
        "boundary_clean": boundary_clean,
    }
    return fired, evidence


def criterion_norm(trace, t0, t1, q, r, s):
    """( integral_{t0}^{t1} aniso_norm(u(t), r, s)^q dt )^{1/q} from snapshots.

    Trapezoid in time over the snapshots inside [t0, t1]; the window must lie
    inside the trace and contain at least two snapshots.
    """
    if not t1 > t0:
        raise ValueError(f"need t1 > t0, got [{t0}, {t1}]")
    times = np.array([t for t, _ in trace.snapshots])
    if times.size == 0 or t0 < times[0] - 1e-9 or t1 > times[-1] + 1e-9:
        raise ValueError(
            f"window [{t0}, {t1}] outside the trace's snapshot range "
            f"[{times[0] if times.size else '-'}, {times[-1] if times.size else '-'}]"
        )
    inside = [(t, f) for t, f in trace.snapshots if t0 - 1e-9 <= t <= t1 + 1e-9]
    if len(inside) < 2:
        raise ValueError(f"window [{t0}, {t1}] contains {len(inside)} snapshot(s); need >= 2")
    ts = np.array([t for t, _ in inside])
    vals = np.array([aniso_norm(f, r, s) for _, f in inside])
    return float(np.trapezoid(vals**q, ts) ** (1.0 / q))
