"""Numerical evaluation of the stationary-variance spectral integral.

Each stable scalar mode contributes the improper integral over the real
line of 1 / |c(i r)|^2, where c is the unit-delay characteristic function
of the mode; expanded, the denominator reads

    2 ((s1 k2 - k1) r^2 + s2 k1) cos r - 2 r (k2 r^2 + s1 k1 - k2 s2) sin r
      + r^4 + (s1^2 + k2^2 - 2 s2) r^2 + s2^2 + k1^2.

The integrand is even and positive on the open stability region, decays
like r^-4, and develops a non-integrable zero of the denominator exactly
on the region boundary, so the evaluator refuses near-singular tuples
instead of returning a garbage number.

Quadrature policy: adaptive integration on [0, R] with forced breakpoints
at the resonance radius sqrt(s2 + |k1|) and at the crossing frequencies,
a second adaptive pass on [R, 4R], and the analytic r^-4 tail bound
2/(3 (4R)^3) beyond, with R at least max(10, cbrt(4/(3 tol)),
3 sqrt(s2+|k1|) + k2^2 + s1^2) so the tail estimate is valid and every
resonance peak is inside the adaptive window.  With the feedback switched
off (k = 0) the integral has the closed form pi / (s1 s2), which is kept
as a cross-check in the tests rather than as a special-case fast path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from ._gridopt import grid_minimize
from .errors import InfeasibleError
from .stability import ScaledParams, classify, crossing_structure

# the integral is declared divergent when the denominator minimum falls below
# this fraction of its natural scale (the healthy minimum is of the order of
# effective-damping^2 x stiffness, reached at the resonance radius)
_MIN_DENOMINATOR_REL = 1e-8


@dataclass(frozen=True)
class SpectralEvaluation:
    """Value of the mode integral with its accuracy bookkeeping."""

    value: float
    abs_error_estimate: float
    truncation_point: float


def magnitude_sq(r, sp: ScaledParams):
    """Squared magnitude of the characteristic function on the imaginary axis."""
    r = np.asarray(r, dtype=float)
    s1, s2, k1, k2 = sp.s1, sp.s2, sp.k1, sp.k2
    r2 = r * r
    return (
        2.0 * ((s1 * k2 - k1) * r2 + s2 * k1) * np.cos(r)
        - 2.0 * r * (k2 * r2 + s1 * k1 - k2 * s2) * np.sin(r)
        + r2 * r2
        + (s1 * s1 + k2 * k2 - 2.0 * s2) * r2
        + s2 * s2
        + k1 * k1
    )


def integrand(r, sp: ScaledParams):
    """1 / |c(i r)|^2; raises when the denominator is not strictly positive."""
    den = magnitude_sq(r, sp)
    if np.any(den <= 0.0):
        raise InfeasibleError("nonpositive spectral denominator: tuple on or outside the stability boundary")
    return 1.0 / den


def _resonance_points(sp: ScaledParams) -> list[float]:
    pts = [math.sqrt(max(sp.s2 + abs(sp.k1), 0.0))]
    try:
        structure = crossing_structure(sp)
        pts.append(structure.gamma_plus)
        if structure.gamma_minus is not None:
            pts.append(structure.gamma_minus)
    except InfeasibleError:
        pass
    return sorted({p for p in pts if p > 0.0})


def _probe_minimum(sp: ScaledParams, hi: float) -> float:
    """Minimum of the denominator on [0, hi]: coarse grid plus one local refinement
    so that a near-boundary resonance notch is not stepped over."""
    r = np.linspace(0.0, hi, 4001)
    den = magnitude_sq(r, sp)
    idx = int(np.argmin(den))
    window = 2.0 * hi / 4000.0
    fine = np.linspace(max(r[idx] - window, 0.0), r[idx] + window, 2001)
    return float(min(den.min(), magnitude_sq(fine, sp).min()))


def evaluate(sp: ScaledParams, rel_tol: float = 1e-6, check_stability: bool = True) -> SpectralEvaluation:
    """Evaluate the mode integral to the requested relative tolerance.

    Raises InfeasibleError when the tuple is not strictly inside the
    stability region or when the denominator approaches zero (the integral
    diverges on the boundary).
    """
    if check_stability and not classify(sp).stable:
        raise InfeasibleError(f"mode tuple {sp} is not strictly inside the stability region")

    peaks = _resonance_points(sp)
    probe_hi = max(peaks[-1] if peaks else 1.0, 1.0) * 2.0 + 5.0
    stiffness = sp.s2 + abs(sp.k1)
    den_scale = stiffness * stiffness + (sp.s1 + abs(sp.k2)) ** 2 * stiffness
    if _probe_minimum(sp, probe_hi) < _MIN_DENOMINATOR_REL * den_scale:
        raise InfeasibleError("spectral integral diverging: denominator minimum within 1e-8 of zero")

    fn = lambda r: 1.0 / magnitude_sq(r, sp)

    # rough scale to convert the relative tolerance into an absolute one
    r_rough = max(10.0, 2.0 * probe_hi)
    rough = quad(fn, 0.0, r_rough, limit=300, points=[p for p in peaks if p < r_rough], full_output=1)[0]
    tol_abs = max(rel_tol, 1e-12) * max(2.0 * rough, 1e-300)

    radius = max(
        10.0,
        (4.0 / (3.0 * tol_abs)) ** (1.0 / 3.0) / 4.0,  # tail applied at 4R below
        3.0 * math.sqrt(max(sp.s2 + abs(sp.k1), 0.0)) + sp.k2 * sp.k2 + sp.s1 * sp.s1,
    )

    total = 0.0
    err = 0.0
    edges = [0.0] + [p for p in peaks if p < radius] + [radius, 4.0 * radius]
    for a, b in zip(edges[:-1], edges[1:]):
        out = quad(fn, a, b, limit=400, epsabs=tol_abs / 8.0, epsrel=rel_tol / 8.0, full_output=1)
        total += out[0]
        err += out[1]

    tail_at = 4.0 * radius
    tail = 1.0 / (3.0 * tail_at**3)
    # the r^-4 model of the tail is off by O(1/r) oscillatory terms
    slop = (2.0 * abs(sp.k2) / tail_at + abs(sp.s1**2 + sp.k2**2 - 2.0 * sp.s2) / tail_at**2) * tail
    total += tail
    err += slop + tail * 1e-3

    value = 2.0 * total
    abs_err = 2.0 * err
    if not math.isfinite(value) or value <= 0.0:
        raise InfeasibleError("spectral quadrature failed to produce a positive value")
    return SpectralEvaluation(value=value, abs_error_estimate=abs_err, truncation_point=tail_at)


def minimize_over_gains(
    s1: float,
    s2: float,
    box: tuple[float, float, float, float],
    grid_step: float = 0.05,
    rel_tol: float = 1e-4,
) -> tuple[tuple[float, float], float]:
    """Minimise the mode integral over scaled gains (k1, k2) in ``box``.

    Every probe is checked for stability first; unstable or divergent
    probes count as +inf.  Returns ((k1, k2), value).  Raises
    InfeasibleError when the box contains no stable point.
    """

    def objective(k1: float, k2: float) -> float:
        sp = ScaledParams(s1=s1, s2=s2, k1=k1, k2=k2)
        verdict = classify(sp)
        if not verdict.stable:
            return math.inf
        try:
            return evaluate(sp, rel_tol=rel_tol, check_stability=False).value
        except InfeasibleError:
            return math.inf

    return grid_minimize(objective, box, grid_step)
