"""Run a configured experiment end to end and persist every artifact.

A run directory is self-contained: the canonical config echo, the ground
state it solved (when applicable), the observer trace as CSV, the field
snapshots, an optional interaction-Morawetz pass, and a JSON report whose
evidence scalars recompute bit-for-bit from the persisted trace.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import os
import time
from dataclasses import dataclass, field

import numpy as np

from .. import __version__
from .. import functionals as fn
from .. import ground_state as gs
from .. import morawetz as mor
from ..evolution import EvolutionTrace, evolve, read_trace_csv, write_trace_csv
from ..field import XProfile, init_product_state, load_field, save_field
from .config import canonical_toml, config_hash
from .detectors import detect_blowup, detect_scatter_proxy

__all__ = [
    "DichotomyReport",
    "StoredRun",
    "build_initial",
    "load_run",
    "run",
]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DichotomyReport:
    """Where the initial state sat, what the dynamics did, and the receipts."""

    classification_in: str
    outcome: str  # scatter_proxy | blowup | inconclusive
    evidence: dict
    trace_path: str
    mismatch: bool = False
    m_omega: float = float("nan")
    config_hash: str = ""
    version: str = __version__

    def to_json(self):
        return json.dumps(dataclasses.asdict(self), indent=1, sort_keys=True)


def _atomic_write(path, data):
    tmp = f"{path}.tmp"
    mode = "wb" if isinstance(data, bytes) else "w"
    with open(tmp, mode) as fh:
        fh.write(data)
    os.replace(tmp, path)


def build_initial(cfg, out_dir=None):
    """Construct the initial field per cfg.initial.

    Returns (field, ground_state_result).  The ground state is solved on the
    experiment grid whenever the classification threshold m_omega is needed,
    i.e. always; for file/product initials it only supplies m_omega.
    """
    dom = cfg.domain
    result = gs.solve_petviashvili(dom)
    if out_dir is not None:
        save_field(result.field, os.path.join(out_dir, "gs.phnl"))
    init = cfg.initial
    if init.kind == "ground_state_scaled":
        u0 = result.field.with_data(init.scale * result.field.data)
    elif init.kind == "product_state":
        u0 = init_product_state(
            dom,
            XProfile(sigma=init.sigma, center=init.center, momentum=init.momentum),
            n=init.hermite_n,
            amplitude=init.amplitude,
        )
    else:  # file
        u0 = load_field(init.path, alpha=dom.alpha, omega=dom.omega)
        if u0.domain != dom:
            raise ValueError(
                f"snapshot grid {u0.domain} does not match the configured domain {dom}"
            )
        if init.scale != 1.0:
            u0 = u0.with_data(init.scale * u0.data)
    return u0, result


def _morawetz_pass(trace, job, seed):
    """sup_t |M| per radius plus localized-coercivity sampling over snapshots."""
    dom = trace.snapshots[0][1].domain
    rows = []  # (t, R, M)
    for R in job.R:
        for t, f in trace.snapshots:
            rows.append((t, R, mor.interaction_M(f, R)))
    sup_M = {
        R: max(abs(m) for t, r, m in rows if r == R) for R in job.R
    }
    rng = np.random.default_rng(seed)
    checks = []
    for t, f in trace.snapshots:
        for R in job.R:
            for s_val in job.s:
                center = np.full(dom.d, float(s_val))
                jitter = center + rng.uniform(-0.5, 0.5, size=dom.d) * R
                _, _, ok = mor.coercivity_check(f, jitter, R, job.delta)
                checks.append(bool(ok))
    summary = {
        "sup_abs_M_by_R": {repr(float(R)): float(sup_M[R]) for R in job.R},
        "coercivity_pass_rate": float(np.mean(checks)) if checks else 1.0,
        "coercivity_samples": len(checks),
        "delta": job.delta,
    }
    return rows, summary


def _write_morawetz_csv(out_dir, rows):
    lines = ["t,R,M"] + [f"{t:.17g},{R:.17g},{m:.17g}" for t, R, m in rows]
    path = os.path.join(out_dir, "morawetz.csv")
    _atomic_write(path, "\n".join(lines) + "\n")
    return path


def run(cfg, out_dir):
    """Execute the full pipeline and persist everything into out_dir."""
    os.makedirs(out_dir, exist_ok=True)
    digest = config_hash(cfg)
    _atomic_write(os.path.join(out_dir, "config.echo.toml"), canonical_toml(cfg))

    u0, gs_result = build_initial(cfg, out_dir)
    classification = gs.classify(u0, omega=cfg.domain.omega, m_omega=gs_result.m_omega)

    t0 = time.time()
    trace = evolve(u0, cfg.t_max, cfg.step, omega=cfg.domain.omega)
    wall = time.time() - t0

    trace_path = os.path.join(out_dir, "trace.csv")
    write_trace_csv(trace, trace_path)
    _persist_snapshots(trace, out_dir)

    blow_fired, t_est = detect_blowup(trace, cfg.detectors.blowup_factor)
    scatter_fired, scatter_ev = detect_scatter_proxy(trace, cfg.detectors)
    if blow_fired:
        outcome = "blowup"
    elif scatter_fired:
        outcome = "scatter_proxy"
    else:
        outcome = "inconclusive"

    mismatch = outcome == "blowup" and classification not in ("K_minus", "above_threshold")
    if mismatch:
        logger.error(
            "MISMATCH: blow-up detected from a %s initial state (S_omega below the "
            "ground-state threshold with Q >= 0); this contradicts the expected "
            "dichotomy and deserves investigation, not a quiet report.",
            classification,
        )

    g = trace.series("grad_x_sq") + trace.series("dy_sq")
    evidence = {
        "gradient_growth_ratio": float(g[-1] / g[0]),
        "blowup_time_estimate": t_est,
        "verdict": trace.verdict,
        "t_final": float(trace.times()[-1]),
        "wall_seconds": wall,
        **scatter_ev,
    }

    if cfg.morawetz is not None and trace.snapshots and cfg.domain.d <= 3:
        m_rows, m_summary = _morawetz_pass(trace, cfg.morawetz, cfg.seed)
        evidence["morawetz"] = m_summary
        _write_morawetz_csv(out_dir, m_rows)

    report = DichotomyReport(
        classification_in=classification,
        outcome=outcome,
        evidence=evidence,
        trace_path=trace_path,
        mismatch=mismatch,
        m_omega=gs_result.m_omega,
        config_hash=digest,
    )
    _atomic_write(os.path.join(out_dir, "report.json"), report.to_json())
    _atomic_write(
        os.path.join(out_dir, "trace_meta.json"),
        json.dumps(
            {
                "verdict": trace.verdict,
                "omega": trace.omega,
                "blowup_time_estimate": trace.blowup_time_estimate,
                "config_hash": digest,
                "version": __version__,
            },
            indent=1,
            sort_keys=True,
        ),
    )
    return report


def _persist_snapshots(trace, out_dir):
    snap_dir = os.path.join(out_dir, "snapshots")
    os.makedirs(snap_dir, exist_ok=True)
    manifest = []
    for k, (t, f) in enumerate(trace.snapshots):
        name = f"snap_{k:04d}.phnl"
        save_field(f, os.path.join(snap_dir, name))
        manifest.append({"t": t, "file": name})
    _atomic_write(
        os.path.join(snap_dir, "manifest.json"), json.dumps(manifest, indent=1)
    )


class StoredRun:
    """A persisted run re-opened for analysis.

    Duck-types the parts of EvolutionTrace the detectors and the Morawetz
    pass consume: times()/series() come from trace.csv (written at %.17g,
    so they reparse to the exact doubles the live run held), snapshots from
    the bit-exact field files.
    """

    def __init__(self, out_dir):
        self.path = out_dir
        self.columns = read_trace_csv(os.path.join(out_dir, "trace.csv"))
        with open(os.path.join(out_dir, "trace_meta.json")) as fh:
            meta = json.load(fh)
        self.verdict = meta["verdict"]
        self.omega = meta["omega"]
        self.blowup_time_estimate = meta["blowup_time_estimate"]
        self.config_hash = meta["config_hash"]
        snap_dir = os.path.join(out_dir, "snapshots")
        self.snapshots = []
        manifest_path = os.path.join(snap_dir, "manifest.json")
        if os.path.exists(manifest_path):
            with open(manifest_path) as fh:
                manifest = json.load(fh)
            for entry in manifest:
                f = load_field(os.path.join(snap_dir, entry["file"]))
                self.snapshots.append((entry["t"], f))

    def times(self):
        return self.columns["t"]

    def series(self, key):
        return self.columns[key]

    @property
    def domain(self):
        if not self.snapshots:
            raise ValueError(f"run at {self.path} persisted no snapshots")
        return self.snapshots[0][1].domain


def load_run(out_dir):
    return StoredRun(out_dir)
