"""Exact delay-stability classification of the decomposed feedback modes.

After diagonalising the closed loop, every network mode obeys a scalar
second-order delay equation whose unit-delay characteristic function is

    c(z) = z^2 + s1 z + k2 z e^(-z) + s2 + k1 e^(-z),

where (s1, s2) = (d*tau, lambda*tau^2) carry the grid constants and
(k1, k2) = (mu*tau^2, kappa*tau) carry the feedback gains, with the delay
tau absorbed into the coordinates.  Asymptotic stability is decided exactly
by membership in one of four parameter regions:

    W0  consensus branch (s2 = k1 = 0): the frequency sub-system is a
        first-order delay equation, stable for |k2| < s1 or up to a single
        arccot-type delay cut-off;
    W1  no imaginary crossing exists; delay-independent stability;
    W2  exactly one crossing frequency; stable until its first cut-off;
    W3  two crossing frequencies; stability holds on finitely many
        interlacing delay windows before terminal instability.

The crossing frequencies gamma+- solve |z^2 + s1 z + s2| = |k1 + i k2 z| on
the imaginary axis and their phases phi+- give the cut-off delays
(phi + 2 pi l) / gamma.  A spectral-collocation approximation of the
rightmost characteristic root provides an independent numerical oracle for
the whole classification.

Points within ``band`` of any defining inequality of the selected region
are reported as boundary and treated as unstable: the classification is an
if-and-only-if statement for the open region, and marginal tuples are not
certifiably safe.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleError, ValidationError
from .network import GainSpec, LaplacianSpectrum, ModeGains, resolve_gains

BOUNDARY_BAND = 1e-9

# window chains longer than this are truncated (reporting only; the root
# count that decides stability never enumerates windows)
_MAX_WINDOWS = 4096


@dataclass(frozen=True)
class ScaledParams:
    """Delay-suppressed coordinates (s1, s2; k1, k2) of one scalar mode."""

    s1: float
    s2: float
    k1: float
    k2: float

    def __post_init__(self):
        for name in ("s1", "s2", "k1", "k2"):
            if not math.isfinite(getattr(self, name)):
                raise ValidationError(f"{name} must be finite")
        if self.s1 < 0 or self.s2 < 0:
            raise ValidationError("s1 and s2 must be nonnegative")

    @classmethod
    def from_physical(cls, d: float, lam: float, mu: float, kappa: float, tau: float) -> "ScaledParams":
        """Absorb the delay into the parameters: (d*tau, lam*tau^2; mu*tau^2, kappa*tau)."""
        if tau <= 0:
            raise ValidationError("tau must be positive when scaling parameters")
        return cls(s1=d * tau, s2=lam * tau * tau, k1=mu * tau * tau, k2=kappa * tau)


@dataclass(frozen=True)
class SwitchStructure:
    """Crossing frequencies, phases and stability windows of one mode.

    ``windows`` are half-open intervals of the delay multiplier: provided
    the delay-free part of the mode is stable (s1 + k2 > 0), the mode with
    characteristic function c(z; T) = z^2+s1 z+s2 + (k2 z + k1)e^(-zT) is
    stable exactly when T lies in their union, and the scaled tuple is
    stable when the unit multiplier T = 1 does.  (For start-unstable
    tuples only the root count of :func:`classify` is authoritative.)
    ``gamma_minus``/``phi_minus`` are None when only one crossing frequency
    exists.  ``truncated`` flags structures whose window chain ended early
    (no admissible switch index, or interlacing broke before it).
    """

    gamma_plus: float
    phi_plus: float
    gamma_minus: float | None
    phi_minus: float | None
    l_star: int | None
    windows: tuple[tuple[float, float], ...]
    truncated: bool = False


@dataclass(frozen=True)
class StabilityVerdict:
    """Classification of one scaled tuple."""

    stable: bool
    region: str                 # "W0".."W3" when stable, else "none"
    margin: float               # min slack of the best region's inequalities
    boundary: bool              # within the boundary band of that region
    detail: object = None       # SwitchStructure for W2/W3, None otherwise


@dataclass(frozen=True)
class NetworkStability:
    """Per-mode verdicts for a closed-loop network."""

    stable: bool
    verdicts: tuple[StabilityVerdict, ...]
    params: tuple[ScaledParams, ...]
    gains: ModeGains
    # consensus limit theta -> rho * ones when mode-1 gains vanish:
    # rho = rho_theta_coeff * sum(theta(0)) + rho_omega_coeff * sum(omega(0))
    rho_theta_coeff: float | None
    rho_omega_coeff: float | None


def delay_free_stable(d: float, lam: float, mu: float, kappa: float) -> bool:
    """Stability of one non-consensus mode when the feedback has no delay."""
    return (kappa + d > 0.0) and (lam + mu > 0.0)


def _arccot(x: float) -> float:
    """Decreasing branch of arccot with range (0, pi)."""
    return math.pi / 2.0 - math.atan(x)


def crossing_structure(sp: ScaledParams) -> SwitchStructure:
    """Crossing frequencies gamma+- > 0 with phases phi+- in [0, 2 pi).

    Raises InfeasibleError when no positive crossing frequency exists
    (the delay-independent case).
    """
    s1, s2, k1, k2 = sp.s1, sp.s2, sp.k1, sp.k2
    delta = k2 * k2 + 2.0 * s2 - s1 * s1
    prod = s2 * s2 - k1 * k1  # product of the squared crossing frequencies
    disc = delta * delta - 4.0 * prod

    if prod > 0.0:
        # two-crossing side: both roots exist only for delta > 2 sqrt(prod)
        if delta <= 0.0 or disc <= 0.0:
            raise InfeasibleError("no positive crossing frequency for this tuple")
        root = math.sqrt(disc)
        g_plus_sq = 0.5 * (delta + root)
        g_minus_sq = 0.5 * (delta - root)
        if g_minus_sq <= 0.0:
            raise InfeasibleError("no positive crossing frequency for this tuple")
        gamma_plus = math.sqrt(g_plus_sq)
        gamma_minus = math.sqrt(g_minus_sq)
    else:
        # single-crossing side: the larger root is the only positive one
        g_plus_sq = 0.5 * (delta + math.sqrt(disc))
        if g_plus_sq <= 0.0:
            raise InfeasibleError("no positive crossing frequency for this tuple")
        gamma_plus = math.sqrt(g_plus_sq)
        gamma_minus = None

    phi_plus = _crossing_phase(sp, gamma_plus)
    if gamma_minus is None:
        return SwitchStructure(
            gamma_plus=gamma_plus,
            phi_plus=phi_plus,
            gamma_minus=None,
            phi_minus=None,
            l_star=None,
            windows=((0.0, phi_plus / gamma_plus),),
        )

    phi_minus = _crossing_phase(sp, gamma_minus)
    l_star, truncated = _switch_count(gamma_plus, phi_plus, gamma_minus, phi_minus)
    windows = [(0.0, phi_plus / gamma_plus)]
    cap = l_star if l_star is not None else int(math.ceil((gamma_minus - phi_minus) / (2 * math.pi))) + 1
    if cap > _MAX_WINDOWS:
        # near-coincident crossing frequencies produce astronomically many
        # switches; only the leading windows are materialised
        cap = _MAX_WINDOWS
        truncated = True
    prev_hi = windows[0][1]
    for l in range(1, max(cap, 0) + 1):
        lo = (phi_minus + 2.0 * (l - 1) * math.pi) / gamma_minus
        hi = (phi_plus + 2.0 * l * math.pi) / gamma_plus
        if lo <= prev_hi or hi <= lo:
            truncated = True
            break
        windows.append((lo, hi))
        prev_hi = hi
    return SwitchStructure(
        gamma_plus=gamma_plus,
        phi_plus=phi_plus,
        gamma_minus=gamma_minus,
        phi_minus=phi_minus,
        l_star=l_star,
        windows=tuple(windows),
        truncated=truncated,
    )


def _crossing_phase(sp: ScaledParams, gamma: float) -> float:
    """Phase phi in [0, 2 pi) at which the delayed term cancels c(i gamma)."""
    s1, s2, k1, k2 = sp.s1, sp.s2, sp.k1, sp.k2
    g2 = gamma * gamma
    denom = k2 * k2 * g2 + k1 * k1
    if denom <= 0.0:
        raise InfeasibleError("crossing phase undefined for vanishing gains")
    cos_val = -(s1 * k2 * g2 + k1 * (s2 - g2)) / denom
    sin_val = (s1 * k1 * gamma - k2 * gamma * (s2 - g2)) / denom
    return math.atan2(sin_val, cos_val) % (2.0 * math.pi)


def _switch_count(gp: float, pp: float, gm: float, pm: float) -> tuple[int | None, bool]:
    """Largest admissible window index: the unique integer in an open
    unit-width interval, or None (flagged) when the endpoints are integral."""
    spread = 2.0 * math.pi * (gp - gm)
    if spread <= 0.0:
        return None, True
    lower = (gm * (pp + 2.0 * math.pi) - pm * gp) / spread
    upper = lower + 1.0
    l_star = math.floor(lower) + 1
    if not (lower < l_star < upper):
        return None, True
    if l_star < 1:
        return None, True
    return l_star, False


def _w0_margin(sp: ScaledParams) -> float:
    """Signed slack of the consensus-branch conditions (s2 = k1 = 0 assumed)."""
    s1, k2 = sp.s1, sp.k2
    branch1 = s1 - abs(k2)
    root = math.sqrt(max(k2 * k2 - s1 * s1, 0.0))
    if k2 > s1 and root > 0.0:
        branch2 = min(k2 - s1, _arccot(-s1 / root) - root)
    else:
        branch2 = k2 - s1  # nonpositive or degenerate; keeps the slack continuous
    return max(branch1, branch2)


def _crossing_count(gamma: float, phi: float) -> int:
    """Number of cut-off multipliers (phi + 2 pi l)/gamma, l >= 0, at most 1."""
    if gamma < phi:
        return 0
    return int(math.floor((gamma - phi) / (2.0 * math.pi))) + 1


def _crossing_slack(gamma: float, phi: float) -> float:
    """Distance of the unit multiplier to the nearest cut-off, in frequency units."""
    m = (gamma - phi) / (2.0 * math.pi)
    best = math.inf
    for l in {max(0, math.floor(m)), max(0, math.ceil(m))}:
        best = min(best, abs(gamma - phi - 2.0 * math.pi * l))
    return best


def classify(sp: ScaledParams, band: float = BOUNDARY_BAND) -> StabilityVerdict:
    """Assign a scaled tuple to its stability region, if any.

    Stability is decided by exact counting of right-half-plane roots: the
    delay-free quadratic z^2 + (s1+k2) z + (s2+k1) contributes 0 or 2
    unstable roots, every cut-off of the destabilising crossing family
    below the unit multiplier adds a pair, every cut-off of the
    stabilising family removes a pair.  On the start-stable quadrant
    (k2 + s1 > 0, k1 + s2 > 0) this reproduces the four-region table
    verbatim; outside it, the count additionally recognises
    delay-stabilised tuples in the two-crossing regime, which are labelled
    W3 as well.  A permanently negative c(0) = s2 + k1 means a real
    unstable root no delay can move.

    The verdict is stable only when every defining inequality holds with
    slack larger than ``band``; tuples inside the band are flagged as
    boundary and treated as unstable.
    """
    s1, s2, k1, k2 = sp.s1, sp.s2, sp.k1, sp.k2

    if s2 == 0.0 and k1 == 0.0:
        margin = _w0_margin(sp)
        if margin > band:
            return StabilityVerdict(stable=True, region="W0", margin=margin, boundary=False)
        return StabilityVerdict(stable=False, region="none", margin=margin, boundary=abs(margin) <= band)

    hard = k1 + s2  # sign of c(0); negative means a permanent real unstable root
    if hard <= band:
        return StabilityVerdict(stable=False, region="none", margin=hard, boundary=abs(hard) <= band)

    a0 = s1 + k2
    n0 = 0 if a0 > 0.0 else 2
    split = s2 - abs(k1)  # > 0 gives two crossing frequencies, <= 0 one
    gap = 2.0 * math.sqrt(max(s2 * s2 - k1 * k1, 0.0)) - (k2 * k2 + 2.0 * s2 - s1 * s1)

    try:
        detail = crossing_structure(sp)
    except InfeasibleError:
        detail = None

    if detail is None:
        # no imaginary crossing: the delay-free verdict holds for every delay
        stable = n0 == 0
        region = "W1" if stable else "none"
        margin = min(hard, a0, split, gap) if stable else a0
    else:
        count = n0 + 2 * (_crossing_count(detail.gamma_plus, detail.phi_plus))
        slack = _crossing_slack(detail.gamma_plus, detail.phi_plus)
        if detail.gamma_minus is not None:
            count -= 2 * _crossing_count(detail.gamma_minus, detail.phi_minus)
            slack = min(slack, _crossing_slack(detail.gamma_minus, detail.phi_minus))
        stable = count == 0
        if split <= 0.0:
            region = "W2"
            margin = min(hard, abs(a0), -split, slack)
        else:
            region = "W3"
            margin = min(hard, abs(a0), split, -gap, slack)
        if not stable:
            region = "none"
            margin = -abs(margin) if margin > 0 else margin

    if stable and margin > band:
        return StabilityVerdict(stable=True, region=region, margin=margin, boundary=False, detail=detail)
    return StabilityVerdict(
        stable=False, region="none", margin=margin, boundary=abs(margin) <= band, detail=detail
    )


def network_verdict(
    spectrum: LaplacianSpectrum,
    gains: GainSpec,
    d: float,
    tau: float,
    band: float = BOUNDARY_BAND,
) -> NetworkStability:
    """Mode-by-mode verdict for the closed loop under delay ``tau``.

    The network converges (to a consensus point on the phase axis) exactly
    when every scaled mode tuple is stable.  When the consensus-mode gains
    vanish the limit is rho * ones with rho determined by the initial data;
    the returned coefficients give rho as
    rho_theta_coeff * sum(phi_theta(0)) + rho_omega_coeff * sum(phi_omega(0)).
    """
    mode_gains = resolve_gains(gains, spectrum)
    if tau < 0:
        raise ValidationError("tau must be nonnegative")
    params = []
    verdicts = []
    for lam, mu, kappa in zip(mode_gains.lambdas, mode_gains.mu, mode_gains.kappa):
        if tau == 0.0:
            stable = delay_free_stable(d, lam, mu, kappa) or (
                # consensus mode: converges to a constant when mu = 0
                lam == 0.0 and mu == 0.0 and kappa + d > 0.0
            )
            sp = ScaledParams(s1=0.0, s2=0.0, k1=0.0, k2=0.0)
            verdicts.append(
                StabilityVerdict(
                    stable=stable, region="delay-free" if stable else "none", margin=math.nan, boundary=False
                )
            )
            params.append(sp)
            continue
        sp = ScaledParams.from_physical(d, lam, mu, kappa, tau)
        params.append(sp)
        verdicts.append(classify(sp, band=band))
    overall = all(v.stable for v in verdicts)
    if mode_gains.mu[0] == 0.0 and mode_gains.kappa[0] == 0.0:
        n = spectrum.n
        rho_theta, rho_omega = 1.0 / n, 1.0 / (d * n)
    else:
        rho_theta = rho_omega = None
    return NetworkStability(
        stable=overall,
        verdicts=tuple(verdicts),
        params=tuple(params),
        gains=mode_gains,
        rho_theta_coeff=rho_theta,
        rho_omega_coeff=rho_omega,
    )


# ---------------------------------------------------------------------------
# Rightmost characteristic root (independent numerical oracle)
# ---------------------------------------------------------------------------


def _char(sp: ScaledParams, z: complex) -> complex:
    return z * z + sp.s1 * z + sp.s2 + (sp.k2 * z + sp.k1) * cmath.exp(-z)


def _char_deriv(sp: ScaledParams, z: complex) -> complex:
    return 2.0 * z + sp.s1 + (sp.k2 - sp.k2 * z - sp.k1) * cmath.exp(-z)


def _chebyshev_diff(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Chebyshev extreme points on [-1, 1] and the differentiation matrix."""
    if n == 0:
        return np.array([1.0]), np.zeros((1, 1))
    x = np.cos(np.pi * np.arange(n + 1) / n)
    c = np.ones(n + 1)
    c[0] = c[-1] = 2.0
    c *= (-1.0) ** np.arange(n + 1)
    dx = x[:, None] - x[None, :]
    d = np.outer(c, 1.0 / c) / (dx + np.eye(n + 1))
    d -= np.diag(d.sum(axis=1))
    return x, d


def _collocation_matrix(a0: np.ndarray, a1: np.ndarray, nodes: int) -> np.ndarray:
    """Spectral collocation of the solution operator of x'(t) = A0 x(t) + A1 x(t-1)."""
    m = a0.shape[0]
    _, d = _chebyshev_diff(nodes)
    d = 2.0 * d  # map [-1, 1] -> [-1, 0]; node 0 is t = 0, node `nodes` is t = -1
    big = np.kron(d, np.eye(m))
    big[:m, :] = 0.0
    big[:m, :m] = a0
    big[:m, -m:] += a1
    return big


def rightmost_root(sp: ScaledParams, resolution: int = 128) -> complex:
    """Approximate rightmost root of c(z) = z^2+s1 z+s2 + (k2 z+k1)e^(-z).

    Spectral collocation of the delay operator provides root candidates;
    the best candidates are polished by Newton iteration on c itself.  For
    the consensus branch (s2 = k1 = 0) the structural root at the origin is
    factored out and the reduced first-order equation is analysed instead.
    Raises InfeasibleError when no candidate converges.
    """
    if resolution < 32:
        raise ValidationError("resolution must be at least 32")

    if sp.k1 == 0.0 and sp.k2 == 0.0:
        if sp.s2 == 0.0:
            return complex(-sp.s1) if sp.s1 > 0 else 0j
        roots = np.roots([1.0, sp.s1, sp.s2])
        return complex(roots[np.argmax(roots.real)])

    if sp.s2 == 0.0 and sp.k1 == 0.0:
        # factor out the structural zero root; analyse z + s1 + k2 e^(-z)
        a0 = np.array([[-sp.s1]])
        a1 = np.array([[-sp.k2]])
        char = lambda z: z + sp.s1 + sp.k2 * cmath.exp(-z)
        deriv = lambda z: 1.0 + 0j - sp.k2 * cmath.exp(-z)
    else:
        a0 = np.array([[0.0, 1.0], [-sp.s2, -sp.s1]])
        a1 = np.array([[0.0, 0.0], [-sp.k1, -sp.k2]])
        char = lambda z: _char(sp, z)
        deriv = lambda z: _char_deriv(sp, z)

    eigs = np.linalg.eigvals(_collocation_matrix(a0, a1, resolution))
    # collocation resolves roots of moderate modulus; large spurious ones are dropped
    eigs = eigs[np.abs(eigs) <= resolution / 4.0]
    if eigs.size == 0:
        raise InfeasibleError("no resolvable characteristic root candidates")
    candidates = eigs[np.argsort(-eigs.real)][:8]

    scale = 1.0 + abs(sp.s1) + abs(sp.s2) + abs(sp.k1) + abs(sp.k2)
    refined = []
    for z0 in candidates:
        z = complex(z0)
        ok = False
        for _ in range(50):
            f = char(z)
            if abs(f) < 1e-13 * scale:
                ok = True
                break
            df = deriv(z)
            if df == 0:
                break
            step = f / df
            z -= step
            if abs(step) < 1e-14 * (1.0 + abs(z)):
                ok = abs(char(z)) < 1e-10 * scale
                break
        if ok and abs(z - z0) < 1.0 + abs(z0) / 4.0:
            refined.append(z)
    if not refined:
        raise InfeasibleError("Newton refinement of the rightmost root did not converge")
    return max(refined, key=lambda z: z.real)
