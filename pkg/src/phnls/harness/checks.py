"""Named verification checks: module properties plus the acceptance gate.

Every check is a function (Context) -> (ok, detail) registered with a name,
a module suite, and optionally the acceptance-criterion number it certifies.
The Context lazily builds and caches the heavyweight fixtures (ground-state
certification pair, the dichotomy runs) so one `verify` pass — or one pytest
session — shares them across all checks.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import math
import os
import tempfile
import time
import warnings
from dataclasses import dataclass

import numpy as np

from .. import evolution as ev
from .. import functionals as fn
from .. import ground_state as gs
from .. import hermite
from .. import morawetz as mor
from ..field import (
    DomainConfig,
    XProfile,
    aniso_norm,
    gn_quotient,
    init_product_state,
    random_localized_field,
    scale_x,
    to_physical,
    to_spectral,
    qsum,
)
import phnls.field as fld
from .config import (
    DetectorConfig,
    ExperimentConfig,
    InitialSpec,
    MorawetzJob,
    StepConfig,
    canonical_toml,
    parse_config,
)
from .detectors import cauchy_deltas, criterion_norm, detect_blowup, detect_scatter_proxy
from .runner import DichotomyReport, StoredRun, run

__all__ = ["Check", "CheckResult", "Context", "SUITES", "format_table", "verify"]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Check:
    name: str
    suite: str
    criterion: int | None
    fn: object


@dataclass(frozen=True)
class CheckResult:
    name: str
    suite: str
    criterion: int | None
    ok: bool
    detail: str
    seconds: float


_CHECKS: list[Check] = []


def _check(name, suite, criterion=None):
    def deco(fn):
        _CHECKS.append(Check(name, suite, criterion, fn))
        return fn

    return deco


# ---------------------------------------------------------------------------
# Shared fixtures
# ---------------------------------------------------------------------------

# The certification grid for the d=1, alpha=5 ground state: fine enough in x
# (dx = 1/16) that the discrete dilation identities hold at the 1e-8 level.
ACC_DOMAIN = DomainConfig(d=1, L=16.0, N_x=512, n_max=64, q=128, alpha=5.0, omega=1.0)

# Cheap grid for property checks on generic smooth fields.
SMALL_DOMAIN = DomainConfig(d=1, L=16.0, N_x=256, n_max=16, q=32, alpha=5.0, omega=1.0)

# Conservation studies need more Hermite headroom: at n_max = 16 the quintic
# cascade leaks ~2e-9 of the mass over t = 5, swamping the 1e-10 target and
# the dt^2 energy signal; at n_max = 48 the leak sits at 1e-11.
CONSERVATION_DOMAIN = DomainConfig(d=1, L=16.0, N_x=256, n_max=48, q=96, alpha=5.0, omega=1.0)

# Wide, y-trivial grid for the linear dispersive estimates: the evolution is
# a single exact spectral multiplier, so the box only has to contain the
# spread Gaussian at t = 50.
DISPERSIVE_DOMAIN = DomainConfig(d=1, L=512.0, N_x=4096, n_max=4, q=8, alpha=5.0, omega=1.0)

# Subcritical branch (alpha d < 4) where the bound state is orbitally stable,
# so a standing-wave run is meaningful over t = 1.  On the alpha = 5 branch
# the state sits on a knife edge: a 5% mass kick collapses by t ~ 0.08, so
# roundoff and projection leaks get amplified to O(1) within the horizon and
# no phase-rotation bound can hold in double precision.  The construction
# warns about the variational window; that is expected and deliberate here.
with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    STABLE_DOMAIN = DomainConfig(d=1, L=16.0, N_x=512, n_max=64, q=128, alpha=3.0, omega=1.0)

# The K_plus scattering run.  A default-sized box L = 64 cannot carry this
# experiment: the dispersing state's spectral tail reaches the 0.9 L boundary
# shell with > 1e-6 of the mass by t ~ 2.4, tripping the contamination
# monitor.  Radiation with cumulative tail mass 1e-6 travels at group speed
# ~ 2*14.4, so a clean [0, 20] run needs 0.9 L >= 2 * 14.4 * 20 -> L = 640.
KPLUS_CONFIG = ExperimentConfig(
    domain=DomainConfig(d=1, L=640.0, N_x=8192, n_max=64, q=128, alpha=5.0, omega=1.0),
    initial=InitialSpec(kind="ground_state_scaled", scale=0.95),
    step=StepConfig(dt=2e-3, adapt=True, observe_stride=50, snapshot_interval=2.5),
    detectors=DetectorConfig(),
    morawetz=MorawetzJob(R=(8.0, 16.0), s=(-16.0, -8.0, 0.0, 8.0, 16.0), delta=0.01),
    t_max=20.0,
    seed=7,
)

# Blow-up detection rides the adaptive-dt floor: the collapse crosses
# dt_min while the core still spans ~6 grid cells, halting the run cleanly
# before under-resolution sprays the box.  (Letting it run past that point
# bursts ~4% of the mass into Nyquist-speed dust that trips the boundary
# monitor with the gradient trend already decaying, so no detector could
# honestly fire afterwards.)
KMINUS_CONFIG = ExperimentConfig(
    domain=DomainConfig(d=1, L=64.0, N_x=4096, n_max=64, q=128, alpha=5.0, omega=1.0),
    initial=InitialSpec(kind="ground_state_scaled", scale=1.05),
    step=StepConfig(dt=2e-3, dt_min=1e-4, adapt=True, observe_stride=10),
    t_max=10.0,
    seed=7,
)


class Context:
    """Lazily built, memoized fixtures shared across checks."""

    def __init__(self, work_dir=None, log=logger.info):
        if work_dir is None:
            work_dir = tempfile.mkdtemp(prefix="phnls_verify_")
        self.work_dir = work_dir
        self.log = log
        self._cache = {}

    def _get(self, key, builder):
        if key not in self._cache:
            t0 = time.time()
            self._cache[key] = builder()
            self.log(f"[fixture] {key} built in {time.time() - t0:.1f}s")
        return self._cache[key]

    # -- ground states -------------------------------------------------

    def gs_pet(self):
        return self._get("gs_pet", lambda: gs.solve_petviashvili(ACC_DOMAIN))

    def gs_desc(self):
        return self._get("gs_desc", lambda: gs.solve_scaling_descent(ACC_DOMAIN))

    def gs_small(self):
        return self._get("gs_small", lambda: gs.solve_petviashvili(SMALL_DOMAIN))

    def gs_stable(self):
        def build():
            with warnings.catch_warnings():
                # the intercritical-window warning is expected here: the
                # stable branch is chosen deliberately
                warnings.simplefilter("ignore")
                return gs.solve_petviashvili(STABLE_DOMAIN)

        return self._get("gs_stable", build)

    # -- conservation-study traces --------------------------------------

    def _conservation(self, dt):
        u0 = init_product_state(CONSERVATION_DOMAIN, XProfile(sigma=1.2), n=1, amplitude=1.2)
        cfg = StepConfig(dt=dt, adapt=False, observe_stride=5)
        return ev.evolve(u0, 5.0, cfg)

    def conservation_trace(self):
        return self._get("conservation_trace", lambda: self._conservation(4e-3))

    def conservation_trace_half(self):
        return self._get("conservation_trace_half", lambda: self._conservation(2e-3))

    # -- dichotomy runs --------------------------------------------------

    def kplus(self):
        """(report, stored run) for the 0.95 phi_GS scattering experiment."""

        def build():
            out = os.path.join(self.work_dir, "kplus")
            report = run(KPLUS_CONFIG, out)
            return report, StoredRun(out)

        return self._get("kplus", build)

    def kminus(self):
        def build():
            out = os.path.join(self.work_dir, "kminus")
            report = run(KMINUS_CONFIG, out)
            return report, StoredRun(out)

        return self._get("kminus", build)

    def sigma_bound_traces(self):
        """Short clean K_plus traces at three amplitudes on the default box."""

        def build():
            dom = KMINUS_CONFIG.domain
            result = gs.solve_petviashvili(dom)
            traces = {}
            for c in (0.8, 0.9, 0.95):
                u0 = result.field.with_data(c * result.field.data)
                traces[c] = ev.evolve(
                    u0, 2.0, StepConfig(dt=2e-3, adapt=True, observe_stride=25)
                )
            return result, traces

        return self._get("sigma_bound", build)


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _sigma_sq_series(trace):
    return (
        trace.series("grad_x_sq")
        + trace.series("dy_sq")
        + trace.series("y_weight_sq")
        + trace.series("mass")
    )


def _fmt(x):
    return f"{x:.3g}"


def _all(parts):
    """Combine (ok, detail) pairs: all must hold, details joined."""
    ok = all(p[0] for p in parts)
    detail = "; ".join(p[1] for p in parts)
    return ok, detail


def _bound(label, value, limit):
    return value < limit, f"{label} {_fmt(value)} (< {_fmt(limit)})"


# ---------------------------------------------------------------------------
# 1. spectral exactness
# ---------------------------------------------------------------------------


@_check("spectral_exactness", "hermite_spectral", criterion=1)
def check_spectral_exactness(ctx):
    basis = ACC_DOMAIN.basis
    w = basis.quad_weights
    gram = basis.basis_table.T @ (w[:, None] * basis.basis_table)
    ortho_err = float(np.abs(gram - np.eye(basis.n_max)).max())

    # H e_n = (2n+1) e_n through the ladder operators; the top two columns
    # leak past the truncation by construction, so test the leak-free ones.
    eye = np.eye(basis.n_max)
    y1, _ = hermite.apply_y(eye)
    y2, _ = hermite.apply_y(y1)
    d1, _ = hermite.apply_dy(eye)
    d2, _ = hermite.apply_dy(d1)
    h_applied = y2 - d2
    expect = eye * (2.0 * np.arange(basis.n_max) + 1.0)
    eig_err = float(np.abs(h_applied - expect)[:, : basis.n_max - 2].max())

    rng = np.random.default_rng(11)
    spec = fld.Field(
        rng.standard_normal((ACC_DOMAIN.N_x, ACC_DOMAIN.n_max))
        + 1j * rng.standard_normal((ACC_DOMAIN.N_x, ACC_DOMAIN.n_max)),
        "fourier",
        "hermite",
        ACC_DOMAIN,
    )
    back = to_spectral(to_physical(spec))
    rt_err = float(np.abs(back.data - spec.data).max() / np.abs(spec.data).max())

    return _all(
        [
            _bound("orthonormality", ortho_err, 1e-10),
            _bound("eigenrelation", eig_err, 1e-10),
            _bound("round trip", rt_err, 1e-11),
        ]
    )


# ---------------------------------------------------------------------------
# 2. linear propagator
# ---------------------------------------------------------------------------


@_check("linear_propagator", "evolution", criterion=2)
def check_linear_propagator(ctx):
    dom = DISPERSIVE_DOMAIN
    u0 = init_product_state(dom, XProfile(sigma=1.0), n=0, amplitude=1.0)

    # y-sector revival: every Hermite phase is exp(-i pi (2n+1)) = -1, so
    # u(pi) = -(free x-flow at pi) u0 in the shared spectral representation.
    lhs = to_spectral(ev.linear_step(u0, math.pi)).data
    rhs = -to_spectral(u0).data * np.exp(-1j * math.pi * fld.xi_sq(dom))[..., None]
    rev_err = float(np.abs(lhs - rhs).max())

    # Gaussian-in-x dispersive decay of sup_x ||u(x,.)||_{L^2_y}: the exact
    # value is pi^{-1/4} (1 + 4 t^2)^{-1/4}.
    sup10 = aniso_norm(ev.linear_step(u0, 10.0), math.inf, 0.0)
    exact10 = math.pi**-0.25 * (1.0 + 4.0 * 10.0**2) ** -0.25
    val_err = abs(sup10 - exact10)

    scaled = [
        aniso_norm(ev.linear_step(u0, t), math.inf, 0.0) * math.sqrt(t)
        for t in (5.0, 10.0, 20.0, 50.0)
    ]
    trend_ratio = max(scaled) / min(scaled)

    return _all(
        [
            _bound("revival", rev_err, 1e-10),
            (val_err < 1e-3, f"sup at t=10: {sup10:.6f} vs {exact10:.6f} (err {_fmt(val_err)})"),
            (trend_ratio < 2.0, f"t^(-1/2) trend spread {trend_ratio:.3f} (< 2)"),
        ]
    )


# ---------------------------------------------------------------------------
# 3. conservation / 4. semivirial identity
# ---------------------------------------------------------------------------


@_check("conservation", "evolution", criterion=3)
def check_conservation(ctx):
    tr = ctx.conservation_trace()
    tr2 = ctx.conservation_trace_half()
    m = tr.series("mass")
    mass_drift = float(np.abs(m - m[0]).max() / m[0])
    e1 = abs(tr.series("energy")[-1] - tr.series("energy")[0])
    e2 = abs(tr2.series("energy")[-1] - tr2.series("energy")[0])
    order = math.log2(e1 / e2) if e2 > 0 else math.inf
    return _all(
        [
            _bound("mass drift", mass_drift, 1e-10),
            (order >= 1.9, f"energy order {order:.2f} (>= 1.9; drifts {_fmt(e1)} -> {_fmt(e2)})"),
        ]
    )


@_check("semivirial_identity", "evolution", criterion=4)
def check_semivirial_identity(ctx):
    tr = ctx.conservation_trace()
    t = tr.times()
    v = tr.series("v_semi")
    q8 = 8.0 * tr.series("Q")
    # uniform interior samples only (the trailing row may break the spacing)
    h = t[1] - t[0]
    n = len(t) - 1 if abs((t[-1] - t[-2]) - h) > 1e-9 * h else len(t)
    errs = []
    for i in range(2, n - 2):
        fd = (-v[i - 2] + 16 * v[i - 1] - 30 * v[i] + 16 * v[i + 1] - v[i + 2]) / (12 * h * h)
        errs.append(abs(fd - q8[i]) / max(abs(q8[i]), 1e-30))
    worst = max(errs)
    return _bound("max |FD V'' - 8Q| / |8Q|", worst, 1e-2)


# ---------------------------------------------------------------------------
# 5. dilation (lambda) identities on random fields
# ---------------------------------------------------------------------------


def _calibrated_random_field(rng):
    """Random smooth field rescaled so lambda_star lands in [1.2, 1.6].

    Keeps every dilation within the grid's comfortable range and keeps Q(u)
    bounded away from zero, so relative comparisons are meaningful.
    """
    dom = SMALL_DOMAIN
    f = random_localized_field(dom, rng)
    target = rng.uniform(1.2, 1.6)
    nb, pot = fn._pieces(f)
    # lambda_star(c u) = (2(alpha+2) grad / (alpha d c^alpha pot))^(2/p), p = alpha d - 4
    p = dom.alpha * dom.d - 4.0
    ratio = 2.0 * (dom.alpha + 2.0) * nb.grad_x_sq / (dom.alpha * dom.d * pot)
    c = (ratio * target ** (-0.5 * p)) ** (1.0 / dom.alpha)
    return f.with_data(c * f.data)


@_check("dilation_identities", "functionals", criterion=5)
def check_dilation_identities(ctx):
    rng = np.random.default_rng(23)
    worst_q = worst_cell = worst_fd = 0.0
    sign_ok = True
    for _ in range(20):
        f = _calibrated_random_field(rng)
        lam = fn.lambda_star(f)

        # Q at the dilation computed through the resampling route
        fs = scale_x(f, lam)
        q_rel = abs(fn.semivirial_Q(fs)) / fn.base_norms(fs).grad_x_sq
        worst_q = max(worst_q, q_rel)

        sign_ok &= fn.semivirial_Q(scale_x(f, 0.5 * lam)) > 0.0
        sign_ok &= fn.semivirial_Q(scale_x(f, 2.0 * lam)) < 0.0

        lam_grid = np.geomspace(0.25, 4.0, 129)
        profile = fn.scan_action_profile(f, lam_grid=lam_grid)
        k = int(np.argmax([row[1] for row in profile]))
        cell = abs(math.log(profile[k][0] / lam)) / math.log(lam_grid[1] / lam_grid[0])
        worst_cell = max(worst_cell, cell)

        h = 3e-4
        fd = (fn.action(scale_x(f, 1 + h)) - fn.action(scale_x(f, 1 - h))) / (2 * h)
        q0 = fn.semivirial_Q(f)
        worst_fd = max(worst_fd, abs(fd - q0) / abs(q0))
    return _all(
        [
            _bound("max |Q(u^lam*)|/grad", worst_q, 1e-8),
            (sign_ok, "sign pattern at 0.5/2 lambda* correct"),
            (worst_cell <= 1.0, f"profile max within {worst_cell:.2f} grid cells of lambda*"),
            _bound("max |dS/dlam - Q|/|Q|", worst_fd, 1e-6),
        ]
    )


# ---------------------------------------------------------------------------
# 6. ground state certification
# ---------------------------------------------------------------------------


@_check("ground_state_certified", "ground_state", criterion=6)
def check_ground_state(ctx):
    pet = ctx.gs_pet()
    desc = ctx.gs_desc()
    nb = fn.base_norms(pet.field)
    q_rel = abs(pet.Q_value) / nb.grad_x_sq
    lam_err = abs(pet.lambda_star_value - 1.0)
    m_rel = abs(pet.m_omega - desc.m_omega) / pet.m_omega

    remainders = [fn.truncated_virial_remainder(pet.field, R)[0] for R in (1.0, 2.0, 4.0, 8.0)]
    mags = [abs(a) for a in remainders]
    halving = all(b <= 0.5 * a for a, b in zip(mags, mags[1:]))
    vanishing = mags[-1] < 1e-2 * mags[0]

    return _all(
        [
            _bound("petviashvili residual", pet.elliptic_residual, 1e-8),
            _bound("|Q|/grad^2", q_rel, 1e-6),
            _bound("|lambda*-1|", lam_err, 1e-4),
            _bound("m_omega disagreement", m_rel, 1e-5),
            (halving, "A_R halves per doubling: " + ", ".join(_fmt(a) for a in mags)),
            (vanishing, f"A_8/A_1 = {_fmt(mags[-1] / mags[0])}"),
        ]
    )


# ---------------------------------------------------------------------------
# 7. dichotomy at desk scale
# ---------------------------------------------------------------------------


@_check("dichotomy_kplus", "harness", criterion=7)
def check_dichotomy_kplus(ctx):
    report, stored = ctx.kplus()
    sig = _sigma_sq_series(stored)
    return _all(
        [
            (report.classification_in == "K_plus", f"classified {report.classification_in}"),
            (report.outcome == "scatter_proxy", f"outcome {report.outcome}"),
            (
                report.evidence["verdict"] == "completed"
                and report.evidence["t_final"] >= 20.0 - 1e-9,
                f"verdict {report.evidence['verdict']} at t={report.evidence['t_final']:.3f}",
            ),
            (
                float(sig.max()) <= 1.2 * float(sig[0]),
                f"sup sigma_sq {sig.max():.3f} vs initial {sig[0]:.3f}",
            ),
            (not report.mismatch, "no dichotomy mismatch"),
        ]
    )


@_check("dichotomy_kminus", "harness", criterion=7)
def check_dichotomy_kminus(ctx):
    report, stored = ctx.kminus()
    return _all(
        [
            (report.classification_in == "K_minus", f"classified {report.classification_in}"),
            (report.outcome == "blowup", f"outcome {report.outcome}"),
            (
                report.evidence["t_final"] < 10.0,
                f"detected by t={report.evidence['t_final']:.3f} "
                f"(estimate {report.evidence['blowup_time_estimate']})",
            ),
            (not report.mismatch, "no dichotomy mismatch"),
        ]
    )


# ---------------------------------------------------------------------------
# 8. interaction Morawetz
# ---------------------------------------------------------------------------


def _interaction_m_brute(f, R):
    """O(N^2) pair sum with the same kernel tables as the FFT path."""
    dom = f.domain
    weights = mor.build_weights(mor.CutoffConfig(), R, dom.alpha, dom.d)
    phys = to_physical(f)
    wy = dom.basis.quad_weights
    rho = np.sum(np.abs(phys.data) ** 2 * wy, axis=-1)
    _, grads = fn._x_gradients(f)
    N = dom.N_x
    di = (np.arange(N)[:, None] - np.arange(N)[None, :]) % N
    total = 0.0
    for a in range(dom.d):
        K = mor._kernel_component(dom, weights, a)
        J = np.sum(np.imag(np.conj(phys.data) * grads[a]) * wy, axis=-1)
        if dom.d == 1:
            pair = K[di]
            total += 2.0 * float(rho @ pair @ J) * dom.dx ** (2 * dom.d)
        else:  # d == 2 on tiny grids
            pair = K[di[:, None, :, None], di[None, :, None, :]]
            total += (
                2.0
                * float(np.einsum("ab,abcd,cd->", rho, pair, J))
                * dom.dx ** (2 * dom.d)
            )
    return total


@_check("morawetz_suite", "morawetz", criterion=8)
def check_morawetz(ctx):
    rng = np.random.default_rng(5)
    dom1 = DomainConfig(d=1, L=8.0, N_x=64, n_max=4, q=8, alpha=5.0, omega=1.0)
    f1 = random_localized_field(dom1, rng)
    d1 = abs(mor.interaction_M(f1, 2.0) - _interaction_m_brute(f1, 2.0))

    dom2 = DomainConfig(d=2, L=8.0, N_x=16, n_max=4, q=8, alpha=3.0, omega=1.0)
    f2 = random_localized_field(dom2, rng)
    d2 = abs(mor.interaction_M(f2, 2.0) - _interaction_m_brute(f2, 2.0))

    report, _ = ctx.kplus()
    summary = report.evidence["morawetz"]
    sup_by_R = {float(k): v for k, v in summary["sup_abs_M_by_R"].items()}
    consts = [sup_by_R[R] / R for R in sorted(sup_by_R)]
    stable = max(consts) / min(consts) <= 1.5
    rate = summary["coercivity_pass_rate"]

    return _all(
        [
            _bound("FFT vs brute force (d=1)", d1, 1e-10),
            _bound("FFT vs brute force (d=2)", d2, 1e-10),
            (stable, f"sup|M|/R across R doubling: {', '.join(_fmt(c) for c in consts)}"),
            (rate >= 0.95, f"coercivity pass rate {rate:.3f} over {summary['coercivity_samples']} samples"),
        ]
    )


# ---------------------------------------------------------------------------
# 9. anisotropic Gagliardo-Nirenberg boundedness
# ---------------------------------------------------------------------------


@_check("gn_boundedness", "field", criterion=9)
def check_gn_boundedness(ctx):
    rng = np.random.default_rng(3)
    running = 0.0
    ok = True
    for k in range(100):
        quo = gn_quotient(random_localized_field(SMALL_DOMAIN, rng))
        if not math.isfinite(quo):
            return False, f"non-finite quotient at sample {k}"
        if k >= 50 and quo > 1.2 * running:
            ok = False
        running = max(running, quo)
    return ok, f"100 finite quotients, running max {running:.4f}"


# ---------------------------------------------------------------------------
# 10. criterion exponents and windowed norm
# ---------------------------------------------------------------------------


@_check("criterion_norm_trend", "harness", criterion=10)
def check_criterion_norm(ctx):
    hand = {
        (1, 5.0): (70.0 / 9.0, 7.0, 0.1, 0.9),
        (2, 3.0): (7.5, 5.0, 1.0 / 3.0, 2.0 / 3.0),
    }
    for (d, alpha), expect in hand.items():
        got = fn.criterion_exponents(d, alpha)
        vals = (got.q, got.r, got.s_c, got.s)
        if any(abs(a - b) > 1e-12 for a, b in zip(vals, expect)):
            return False, f"exponents for d={d}, alpha={alpha}: {vals} != {expect}"

    _, stored = ctx.kplus()
    ce = fn.criterion_exponents(1, 5.0)
    norms_by_T = [
        criterion_norm(stored, T - 5.0, T, ce.q, ce.r, ce.s) for T in (10.0, 15.0, 20.0)
    ]
    decreasing = all(b < a for a, b in zip(norms_by_T, norms_by_T[1:]))
    detail = "window norms " + " -> ".join(_fmt(v) for v in norms_by_T)
    return decreasing, f"exponents match hand arithmetic; {detail}"


# ---------------------------------------------------------------------------
# harness plumbing checks (beyond the numbered criteria)
# ---------------------------------------------------------------------------


@_check("config_echo_identity", "harness")
def check_config_echo(ctx):
    for cfg in (KPLUS_CONFIG, KMINUS_CONFIG, ExperimentConfig()):
        text = canonical_toml(cfg)
        again = canonical_toml(parse_config(text))
        if text != again:
            return False, "canonical echo is not byte-stable"
        if parse_config(text) != cfg:
            return False, "parse(canonical(cfg)) != cfg"
    return True, "canonical TOML echo byte-identical for 3 configs"


@_check("report_recompute_identity", "harness")
def check_report_recompute(ctx):
    report, stored = ctx.kplus()
    blow_fired, t_est = detect_blowup(stored, KPLUS_CONFIG.detectors.blowup_factor)
    scatter_fired, scatter_ev = detect_scatter_proxy(stored, KPLUS_CONFIG.detectors)
    if blow_fired or not scatter_fired:
        return False, "detector verdicts changed on the stored run"
    saved = json.loads(report.to_json())["evidence"]
    for key, value in scatter_ev.items():
        if saved[key] != value:
            return False, f"evidence[{key!r}] recomputed differently: {saved[key]} vs {value}"
    g = stored.series("grad_x_sq") + stored.series("dy_sq")
    if saved["gradient_growth_ratio"] != float(g[-1] / g[0]):
        return False, "gradient growth ratio recomputed differently"
    return True, "evidence recomputes byte-identically from persisted artifacts"


@_check("kplus_persistence", "harness")
def check_kplus_persistence(ctx):
    # The sharp conservation clause (action drift < 1e-6) is checked on a
    # gentle K_plus state; the flagship's violent transient sits at the
    # Hermite-truncation floor ~3e-5 and is certified by the other clauses.
    small = ctx.gs_small()
    u0 = init_product_state(SMALL_DOMAIN, XProfile(sigma=1.5), n=0, amplitude=0.4)
    cls = gs.classify(u0, m_omega=small.m_omega)
    if cls != "K_plus":
        return False, f"gentle state classified {cls}, wanted K_plus"
    tr = ev.evolve(u0, 3.0, StepConfig(dt=2e-3, adapt=False, observe_stride=10))
    S = tr.series("action_omega")
    Q = tr.series("Q")
    gx = tr.series("grad_x_sq")
    drift = float(np.abs(S - S[0]).max() / abs(S[0]))
    parts = [
        (bool(np.all(Q >= -1e-6 * gx)), f"Q >= -1e-6 grad on gentle trace (min ratio {_fmt(float((Q/gx).min()))})"),
        (bool(np.all(S < small.m_omega)), "S_omega < m_omega on gentle trace"),
        _bound("action drift (gentle)", drift, 1e-6),
    ]
    report, stored = ctx.kplus()
    Qf = stored.series("Q")
    gf = stored.series("grad_x_sq")
    Sf = stored.series("action_omega")
    parts.append(
        (bool(np.all(Qf >= -1e-6 * gf)), "Q >= -1e-6 grad on flagship trace")
    )
    parts.append((bool(np.all(Sf < report.m_omega)), "S_omega < m_omega on flagship trace"))
    return _all(parts)


@_check("sigma_bound_stability", "harness")
def check_sigma_bound(ctx):
    result, traces = ctx.sigma_bound_traces()
    consts = {}
    for c, tr in traces.items():
        consts[c] = float(_sigma_sq_series(tr).max()) / result.m_omega
    vals = np.array(sorted(consts.values()))
    spread = float(np.abs(vals / vals.mean() - 1.0).max())
    detail = ", ".join(f"c={c}: {consts[c]:.3f}" for c in sorted(consts))
    return spread <= 0.20, f"sup sigma_sq / m_omega: {detail} (spread {spread:.2%})"


@_check("time_reversal", "evolution")
def check_time_reversal(ctx):
    # Strang composed with conjugation inverts itself exactly; what is not
    # reversible is the Hermite-truncation leak of the nonlinear phase, which
    # scales like |u|^(2 alpha) -- hence the moderate amplitude here.
    rng = np.random.default_rng(17)
    u0 = to_physical(random_localized_field(CONSERVATION_DOMAIN, rng))
    u0 = u0.with_data(u0.data * (0.4 / np.abs(u0.data).max()))
    state = u0
    for _ in range(100):
        state = ev.strang_step(state, 2e-3)
    state = to_physical(state)
    state = state.with_data(np.conj(state.data))
    for _ in range(100):
        state = ev.strang_step(state, 2e-3)
    back = np.conj(to_physical(state).data)
    err = float(np.abs(back - u0.data).max() / np.abs(u0.data).max())
    return _bound("conjugation round trip", err, 1e-10)


@_check("linear_trace_detectors", "harness")
def check_linear_trace(ctx):
    dom = DomainConfig(d=1, L=64.0, N_x=512, n_max=4, q=8, alpha=5.0, omega=1.0)
    u0 = init_product_state(dom, XProfile(sigma=1.0), n=0, amplitude=1e-3)
    tr = ev.evolve(u0, 8.0, StepConfig(dt=5e-3, adapt=False, observe_stride=20, snapshot_interval=0.5))
    blow_fired, _ = detect_blowup(tr)
    scatter_fired, evd = detect_scatter_proxy(tr)
    return _all(
        [
            (not blow_fired, "blow-up never fires on a linear trace"),
            (scatter_fired, f"scatter proxy fires on linear Gaussian (decay {_fmt(evd['potential_decay_ratio'])})"),
        ]
    )


@_check("standing_wave", "harness")
def check_standing_wave(ctx):
    # On the stable branch the bound state rotates as e^{+i omega t}; the
    # residual deviation is Strang splitting error, so it must shrink at
    # second order when dt halves.  A frozen threshold alone cannot separate
    # "standing wave" from "slow drift", the convergence clause can.
    pet = ctx.gs_stable()
    phi = to_physical(pet.field).data
    devs, thetas = {}, {}
    traces = {}
    for dt in (2e-3, 1e-3):
        tr = ev.evolve(pet.field, 1.0, StepConfig(dt=dt, adapt=False, observe_stride=50, snapshot_interval=1.0))
        t_end, u_end = tr.snapshots[-1]
        d = to_physical(u_end).data
        devs[dt] = float(np.abs(d - phi * np.exp(1j * STABLE_DOMAIN.omega * t_end)).max())
        thetas[dt] = float(np.angle(np.vdot(phi, d)) - STABLE_DOMAIN.omega * t_end)
        traces[dt] = tr
    order = math.log2(devs[2e-3] / devs[1e-3])
    scatter_fired, _ = detect_scatter_proxy(traces[1e-3])

    # The alpha = 5 state is orbitally unstable, so only a short hold is
    # meaningful there; by t = 0.25 the deviation has grown past 0.2.
    pet5 = ctx.gs_pet()
    tr5 = ev.evolve(pet5.field, 0.1, StepConfig(dt=1e-3, adapt=False, observe_stride=50, snapshot_interval=0.1))
    t5, u5 = tr5.snapshots[-1]
    dev5 = float(
        np.abs(to_physical(u5).data - to_physical(pet5.field).data * np.exp(1j * ACC_DOMAIN.omega * t5)).max()
    )

    return _all(
        [
            _bound("stable-branch deviation at dt=1e-3 over t=1", devs[1e-3], 5e-2),
            (order >= 1.5, f"deviation is splitting error: order {_fmt(order)} under dt halving (>= 1.5)"),
            _bound("|global phase - omega t|", abs(thetas[1e-3]), 2e-2),
            (not scatter_fired, "scatter proxy stays quiet on the standing wave"),
            _bound("unstable-branch deviation over t=0.1", dev5, 5e-2),
        ]
    )


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------

SUITES = tuple(sorted({c.suite for c in _CHECKS}) + ["acceptance"])


def verify(suite=None, ctx=None):
    """Run the named checks (all, one suite, or 'acceptance') -> results."""
    if ctx is None:
        ctx = Context()
    selected = []
    for c in _CHECKS:
        if suite is None or c.suite == suite or (suite == "acceptance" and c.criterion):
            selected.append(c)
    if not selected:
        raise ValueError(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}")
    results = []
    for c in selected:
        t0 = time.time()
        try:
            ok, detail = c.fn(ctx)
        except Exception as exc:  # a crash is a failure with the exception named
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append(CheckResult(c.name, c.suite, c.criterion, ok, detail, time.time() - t0))
        ctx.log(f"[{'PASS' if ok else 'FAIL'}] {c.name} ({results[-1].seconds:.1f}s) {detail}")
    return results


def format_table(results):
    lines = []
    width = max(len(r.name) for r in results)
    for r in results:
        tag = "PASS" if r.ok else "FAIL"
        crit = f" [criterion {r.criterion}]" if r.criterion else ""
        lines.append(f"{tag}  {r.name:<{width}}  {r.seconds:7.1f}s{crit}  {r.detail}")
    n_ok = sum(r.ok for r in results)
    lines.append(f"{n_ok}/{len(results)} checks passed")
    return "\n".join(lines)
