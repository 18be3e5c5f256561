"""Fourier-Hermite spectral toolkit for NLS with partial harmonic confinement.

The equation is i du/dt + Lap_z u - y^2 u = -|u|^alpha u on R^d_x x R_y:
free (dispersive) in the x-directions, harmonically trapped in y.  The x-box
is periodic with an FFT basis; the y-direction uses the Hermite eigenbasis of
-d^2/dy^2 + y^2, which makes every linear operator diagonal.

Modules:

- ``hermite``      Gauss-Hermite quadrature, basis tables, ladder operators.
- ``field``        Discretized fields, transforms, norms, x-dilation, I/O.
- ``functionals``  Mass, energy, action, semivirial Q, scaling diagnostics.
- ``ground_state`` Petviashvili and constrained-descent solvers, classify.
- ``evolution``    Strang splitting, observers, trace persistence.
- ``morawetz``     Interaction-Morawetz weights, localized coercivity.
- ``harness``      Experiment configs, detectors, runs, verify suite, CLI.
"""

from . import evolution, field, functionals, ground_state, hermite, morawetz
from .field import DomainConfig, Field

__version__ = "0.1.0"

__all__ = [
    "DomainConfig",
    "Field",
    "__version__",
    "evolution",
    "field",
    "functionals",
    "ground_state",
    "harness",
    "hermite",
    "morawetz",
]

from . import harness  # noqa: E402  (harness imports the modules above)
