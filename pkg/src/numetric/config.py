"""Tolerance profiles and grid defaults."""

from __future__ import annotations

import os
from dataclasses import dataclass, replace

DEFAULT_GRID = 4096
MAX_GRID = 2**20
MIN_GRID = 16
DEFAULT_AP_RADIUS = 200.0
CIRCLE_MARGIN = 1e-6


@dataclass(frozen=True)
class Tolerances:
    """Numerical tolerances used across the library.

    Attributes
    ----------
    invertibility : float
        Relative threshold on ``min|det| / max|det|`` below which a
        function is treated as vanishing.
    identity : float
        Structural identities (normalization residuals, pointwise
        singular-value identities).
    certificate : float
        Slack allowed in the robust-stability inequalities.
    metric : float
        Slack allowed in the metric axioms.
    equivalence : float
        Defect allowed when matching two factorizations up to a unitary.
    riccati : float
        Relative residual target for the Riccati solver.
    winding : float
        Distance of the accumulated phase / 2 pi from an integer.
    ap_error : float
        Largest acceptable error bar of a non-lattice average winding.
    """

    invertibility: float = 1e-9
    identity: float = 1e-8
    certificate: float = 1e-7
    metric: float = 1e-7
    equivalence: float = 1e-7
    riccati: float = 1e-12
    winding: float = 1e-6
    ap_error: float = 1e-3


PROFILES = {
    "default": Tolerances(),
    "strict": Tolerances(identity=1e-10, certificate=1e-9, metric=1e-9, equivalence=1e-9),
    "loose": Tolerances(identity=1e-6, certificate=1e-5, metric=1e-5, equivalence=1e-5),
}


def get_profile(name: str = "default", **overrides) -> Tolerances:
    try:
        tol = PROFILES[name]
    except KeyError:
        raise ValueError(f"unknown tolerance profile {name!r}; choose from {sorted(PROFILES)}")
    return replace(tol, **overrides) if overrides else tol


def default_grid_size() -> int:
    """Grid size from ``NUMETRIC_GRID`` if set, else the built-in default."""
    raw = os.environ.get("NUMETRIC_GRID")
    if not raw:
        return DEFAULT_GRID
    n = int(raw)
    check_grid_size(n)
    return n


def check_grid_size(n: int) -> None:
    if n < MIN_GRID or n > MAX_GRID or n & (n - 1):
        raise ValueError(f"grid size must be a power of two in [{MIN_GRID}, {MAX_GRID}], got {n}")
