import math

import numpy as np
import pytest

from wacrisk.errors import InfeasibleError, ValidationError
from wacrisk.network import GainSpec, effective_resistance
from wacrisk.risk import SystemicSet
from wacrisk.spectral import evaluate
from wacrisk.stability import ScaledParams, classify
from wacrisk.stats import NoiseParams, pair_deviations_load_noise_only
from wacrisk.synthesis import (
    deviation_floor,
    resistance_bounds,
    risk_floor,
    synthesize,
    tradeoff_scan,
)

D2, LAM2, J2 = 0.075, 1.584, 2.0
SET_A = SystemicSet(zeta=math.pi / 3.0, c=1.5, eps=0.1)


def test_zero_noise_returns_box_corner(two_machine_spectrum):
    result = synthesize(
        two_machine_spectrum, D2, 0.1, NoiseParams(0.0, 0.0), J2, gain_box=(0.0, 0.4, 0.0, 1.0), grid_step=0.2
    )
    assert result.mu[1] == 0.0 and result.kappa[1] == 0.0
    assert np.allclose(result.weights, 0.0)


def test_synthesize_two_machine_matches_direct_search(two_machine_spectrum):
    noise = NoiseParams(0.7, 0.3)
    result = synthesize(
        two_machine_spectrum, D2, 0.1, noise, J2, gain_box=(0.0, 3.0, 0.0, 3.0), grid_step=0.25
    )
    assert result.mu[0] == 0.0 and result.kappa[0] == 0.0
    # optimality certificate: central-difference gradient of the mode weight
    mu_s, kap_s, w_s = result.mu[1], result.kappa[1], result.weights[1]

    def weight(mu, kappa):
        sp = ScaledParams.from_physical(D2, LAM2, mu, kappa, 0.1)
        return 0.1**3 * noise.mode_intensity_sq(mu, kappa, J2) * evaluate(sp, rel_tol=1e-8).value

    step = 5e-3
    gx = (weight(mu_s + step, kap_s) - weight(mu_s - step, kap_s)) / (2 * step)
    gy = (weight(mu_s, kap_s + step) - weight(mu_s, kap_s - step)) / (2 * step)
    assert math.hypot(gx, gy) <= 1e-2 * w_s / step
    # the assembled matrices reproduce the per-mode gains and commute
    lap = two_machine_spectrum.laplacian
    assert np.linalg.norm(lap @ result.M - result.M @ lap) < 1e-10
    assert np.linalg.norm(lap @ result.K - result.K @ lap) < 1e-10
    q = two_machine_spectrum.eigenvectors
    assert np.allclose(np.diag(q.T @ result.M @ q), result.mu, atol=1e-12)


def test_synthesize_no_stable_gain(two_machine_spectrum):
    # a box of destabilising phase gains only
    with pytest.raises(InfeasibleError):
        synthesize(
            two_machine_spectrum,
            D2,
            0.1,
            NoiseParams(0.7, 0.0),
            J2,
            gain_box=(2.0, 5.0, 0.0, 0.0),
            grid_step=0.5,
        )


def test_deviation_floor_vanishes_with_delay(two_machine_spectrum):
    # over the full stability region the floor scales away like tau^{3/2}
    tiny = deviation_floor(two_machine_spectrum, D2, 1e-3, 0.7, J2)
    assert tiny < 5e-3


def test_deviation_floor_bounds_gain_grid(two_machine_spectrum):
    tau, eta = 0.1, 0.7
    floor = deviation_floor(
        two_machine_spectrum, D2, tau, eta, J2, gain_box=(-1.5, 40.0, -0.05, 40.0), grid_step=1.0
    )
    # exhaustive grid oracle: no gain choice beats the floor
    worst = math.inf
    for mu in np.linspace(-1.2, 40.0, 15):
        for kappa in np.linspace(0.0, 40.0, 15):
            try:
                stats = pair_deviations_load_noise_only(
                    two_machine_spectrum, GainSpec.uniform(mu, kappa), D2, tau, eta, J2, rel_tol=1e-5
                )
            except InfeasibleError:
                continue
            worst = min(worst, stats.sigma[0])
    assert floor <= worst + 1e-6


def test_deviation_floor_monotone_in_delay(two_machine_spectrum):
    floors = [deviation_floor(two_machine_spectrum, D2, tau, 0.7, J2) for tau in (0.05, 0.1, 0.2)]
    assert floors[0] <= floors[1] <= floors[2]


def test_risk_floor_trichotomy():
    report = risk_floor(0.3, SET_A)
    assert report.regime == "reducible" and report.risk_floor == 0.0
    mid = 0.5 * (SET_A.zero_risk_threshold + SET_A.infinite_risk_threshold)
    report = risk_floor(mid, SET_A)
    assert report.regime == "floored" and 0.0 < report.risk_floor < math.inf
    report = risk_floor(0.7, SET_A)
    assert report.regime == "infinite" and math.isinf(report.risk_floor)


def test_resistance_bounds_two_machine(two_machine_spectrum):
    bounds = resistance_bounds(two_machine_spectrum, D2, 0.1, rays=90)
    # single nonzero mode: the bound collapses to 1 / (gain_max * lambda_2)
    assert bounds.bound_kappa == pytest.approx(1.0 / (bounds.kappa_max * LAM2), rel=1e-12)
    assert bounds.bound_mu == pytest.approx(1.0 / (bounds.mu_max * LAM2), rel=1e-12)
    # any stable consensus gain keeps its effective resistance above the bound
    for kappa in (0.05, 0.3, 1.0, 3.0):
        if classify(ScaledParams.from_physical(D2, LAM2, 0.0, LAM2 * kappa, 0.1)).stable:
            assert effective_resistance(kappa * np.array([LAM2])) > bounds.bound_kappa


def test_resistance_bounds_tighten_with_delay(two_machine_spectrum):
    near = resistance_bounds(two_machine_spectrum, D2, 0.1, rays=60)
    far = resistance_bounds(two_machine_spectrum, D2, 0.2, rays=60)
    assert far.bound_kappa > near.bound_kappa
    assert far.bound_mu > near.bound_mu


def test_tradeoff_scan_rejects_zero_noise(two_machine_spectrum):
    with pytest.raises(ValidationError):
        tradeoff_scan(
            two_machine_spectrum, D2, 0.1, NoiseParams(0.0, 0.0), J2, SET_A, (0.1, 1.0, 0.1, 1.0)
        )


def test_tradeoff_scan_reducible_set_reaches_zero(two_machine_spectrum):
    # the zero-risk gain window makes the product infimum collapse to zero
    scan = tradeoff_scan(
        two_machine_spectrum,
        D2,
        0.1,
        NoiseParams(0.7, 0.3),
        J2,
        SET_A,
        gain_box=(0.05, 1.5, 0.05, 1.5),
        grid=(12, 12),
    )
    assert scan.omega_hat == 0.0
    assert np.all(scan.rows[:, 5] >= scan.omega_hat)


def test_tradeoff_scan_floored_set_positive(two_machine_spectrum):
    # a hard limit below the best achievable deviation leaves no zero-risk
    # gain, so the product stays bounded away from zero
    strict = SystemicSet(zeta=0.6, c=1.5, eps=0.1)
    scans = []
    for tau in (0.05, 0.1):
        scan = tradeoff_scan(
            two_machine_spectrum,
            D2,
            tau,
            NoiseParams(0.7, 0.3),
            J2,
            strict,
            gain_box=(0.05, 1.5, 0.05, 1.5),
            grid=(12, 12),
        )
        assert scan.omega_hat > 0.0
        finite = scan.rows[np.isfinite(scan.rows[:, 5])]
        assert len(finite) > 0
        scans.append(scan.omega_hat)
    assert scans[1] >= scans[0] * 0.98  # delay does not improve the trade-off
