"""Acceptance criteria, one test per criterion with a printed verdict line.

Run with `pytest tests/test_acceptance.py -v -s` to see one PASS/FAIL line
per criterion alongside the pytest verdicts.
"""
import functools
import math

import numpy as np
from numpy.testing import assert_allclose

from qkdattack.analysis import find_crossover, success_region
from qkdattack.attack import (
    UsdPerformance,
    optimize_yields,
    solve_yield_lp,
)
from qkdattack.coherent import (
    SourceConfig,
    build_usd_povm,
    coherent_vector,
    usd_success_linear_optics,
    usd_success_optimal,
)
from qkdattack.decoy import (
    ChannelParams,
    GainStats,
    believed_rate,
    key_rate_lower,
    one_decoy_e1_upper,
    one_decoy_estimates,
    one_decoy_y1_lower,
    observed_gains,
)
from qkdattack.montecarlo import TrialConfig, expected_gains, run_trials
from grid_oracle import grid_best_objective
from reference_formulas import (
    attack_gains_ref,
    e1_bound_ref,
    rate_lower_ref,
    y1_bound_ref,
)

SOURCE = SourceConfig(mu=0.5, nu=0.1)
SOURCE_PI = SourceConfig(mu=0.5, nu=0.1, theta_d=math.pi)
MEASURED_USD = UsdPerformance(q_mu=1.18e-3, q_nu=1.16e-3, xi_mu=0.9690, xi_nu=0.9837)
CHANNEL = ChannelParams.from_loss_db(40.0, y0=1e-7, e_d=0.02)


def criterion(number, name):
    def decorate(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                fn(*args, **kwargs)
            except BaseException:
                print(f"criterion {number} ({name}): FAIL")
                raise
            print(f"criterion {number} ({name}): PASS")
        return wrapper
    return decorate


@criterion(1, "USD success probabilities")
def test_criterion_1_usd_probabilities():
    assert abs(usd_success_optimal(SOURCE) - 0.0375) <= 5e-5
    assert abs(usd_success_linear_optics(SOURCE) - 0.0187) <= 5e-5
    assert abs(usd_success_optimal(SOURCE_PI) - 0.230) <= 5e-4


@criterion(2, "USD POVM properties at cutoff 40")
def test_criterion_2_povm_properties():
    e_mu, e_nu, e_f = build_usd_povm(SOURCE, cutoff=40)
    total = e_mu.entries + e_nu.entries + e_f.entries
    assert_allclose(total, np.eye(41), atol=1e-14)
    for op in (e_mu, e_nu, e_f):
        assert op.min_eigenvalue() >= -1e-8
    ket_signal = coherent_vector(math.sqrt(SOURCE.mu / 2), 40)
    ket_decoy = coherent_vector(math.sqrt(SOURCE.nu / 2), 40)
    assert abs(e_mu.expectation(ket_signal) - usd_success_optimal(SOURCE)) <= 1e-6
    assert abs(e_mu.expectation(ket_decoy)) <= 1e-8
    assert abs(e_nu.expectation(ket_signal)) <= 1e-8


@criterion(3, "crossover thresholds 36.3 / 21.2 / 13.3 dB")
def test_criterion_3_crossover_thresholds():
    measured = find_crossover(SOURCE, MEASURED_USD, CHANNEL, 33.0, 44.0)
    assert abs(measured - 36.3) <= 0.5
    ideal_zero = UsdPerformance(q_mu=0.0375, q_nu=0.0375, xi_mu=1.0, xi_nu=1.0)
    zero_phase = find_crossover(SOURCE, ideal_zero, CHANNEL, 17.0, 30.0)
    assert abs(zero_phase - 21.2) <= 0.5
    ideal_pi = UsdPerformance(q_mu=0.230, q_nu=0.230, xi_mu=1.0, xi_nu=1.0)
    pi_phase = find_crossover(SOURCE_PI, ideal_pi, CHANNEL, 8.0, 20.0)
    assert abs(pi_phase - 13.3) <= 0.5


@criterion(4, "error-constrained success region [36.3, 48.1] dB")
def test_criterion_4_success_region():
    region = success_region(
        SOURCE, MEASURED_USD, CHANNEL, (33.0, 52.0, 0.5), enforce_errors=True
    )
    assert abs(region.lower_db - 36.3) <= 0.5
    assert region.upper_db is not None
    assert abs(region.upper_db - 48.1) <= 0.5


@criterion(5, "LP optimum vs brute-force grid oracle at N=3")
def test_criterion_5_lp_grid_oracle():
    rng = np.random.default_rng(20240813)
    pitch = 0.05
    grid = np.round(np.arange(0.0, 1.0 + pitch / 2, pitch), 12)
    for _ in range(20):
        mu = rng.uniform(0.35, 0.7)
        nu = rng.uniform(0.08, 0.25)
        q_mu = rng.uniform(0.3, 0.9)
        q_nu = rng.uniform(0.3, 0.9)
        xi_mu = rng.uniform(0.8, 1.0)
        xi_nu = rng.uniform(0.8, 1.0)
        z_mu = rng.choice(grid, 3)
        z_nu = rng.choice(grid, 3)
        t_mu, t_nu, _, _ = attack_gains_ref(
            mu, nu, q_mu, q_nu, xi_mu, xi_nu, z_mu, z_nu
        )
        lp = solve_yield_lp(mu, nu, q_mu, q_nu, xi_mu, xi_nu, 3, t_mu, t_nu)
        assert lp.feasible
        # never beaten by a grid point satisfying the constraints exactly
        exact_obj = q_mu * (xi_mu * z_mu[0] + (1 - xi_mu) * z_nu[0])
        assert lp.objective <= exact_obj + 1e-9
        # within two grid pitches of objective movement from the best
        # slack-feasible grid point
        best = grid_best_objective(
            mu, nu, q_mu, q_nu, xi_mu, xi_nu, t_mu, t_nu, pitch=pitch
        )
        assert best is not None
        assert abs(lp.objective - best) <= 2 * pitch * q_mu


@criterion(6, "infeasibility at 0 dB loss")
def test_criterion_6_infeasible_at_zero_loss():
    sol = optimize_yields(SOURCE, MEASURED_USD, CHANNEL.at_loss_db(0.0))
    assert not sol.feasible


@criterion(7, "Monte Carlo gains within 5 sigma and bit-identical")
def test_criterion_7_monte_carlo():
    ch = CHANNEL.at_loss_db(38.0)
    sol = optimize_yields(SOURCE, MEASURED_USD, ch)
    assert sol.feasible
    tc = TrialConfig(
        n_pulses=1_000_000, seed=20240817,
        cfg=SOURCE, usd=MEASURED_USD, plan=sol.plan,
    )
    stats = run_trials(tc)
    analytic = expected_gains(tc)
    for hat, ref, n in (
        (stats.gain_mu_hat, analytic.q_mu_gain, stats.n_signal),
        (stats.gain_nu_hat, analytic.q_nu_gain, stats.n_decoy),
    ):
        se = math.sqrt(ref * (1 - ref) / n)
        assert abs(hat - ref) <= 5 * se
    assert run_trials(tc) == stats


@criterion(8, "dual-implementation formula agreement at 1e-12")
def test_criterion_8_dual_implementation():
    rng = np.random.default_rng(20240819)
    checked = 0
    while checked < 100:
        ch = ChannelParams.from_loss_db(
            rng.uniform(15.0, 42.0),
            y0=10 ** rng.uniform(-8, -6.5),
            e_d=rng.uniform(0.005, 0.04),
        )
        g = observed_gains(SOURCE, ch)
        y1_ref = y1_bound_ref(
            SOURCE.mu, SOURCE.nu, g.q_mu_gain, g.q_nu_gain, g.emu_qmu
        )
        if not 0 < y1_ref < 1:
            continue
        assert_allclose(one_decoy_y1_lower(SOURCE, g), y1_ref, rtol=1e-12)
        e1_ref = e1_bound_ref(SOURCE.mu, g.emu_qmu, y1_ref)
        assert 0 < e1_ref < 0.5
        clamped, raw = one_decoy_e1_upper(SOURCE, g, y1_ref)
        assert_allclose(raw, e1_ref, rtol=1e-12)
        d = one_decoy_estimates(SOURCE, g)
        rate_ref = rate_lower_ref(
            SOURCE.mu, g.q_mu_gain, g.emu_qmu / g.q_mu_gain,
            d.y1_lower, d.e1_upper,
        )
        assert_allclose(key_rate_lower(SOURCE, g, d), rate_ref, rtol=1e-12)
        checked += 1


@criterion(9, "property suites")
def test_criterion_9_property_suites():
    rng = np.random.default_rng(20240821)

    # phase extremes: success minimized at zero relative phase, maximized at pi
    for _ in range(10):
        nu = rng.uniform(0.02, 0.4)
        mu = nu + rng.uniform(0.05, 0.5)
        lo = usd_success_optimal(SourceConfig(mu=mu, nu=nu))
        hi = usd_success_optimal(SourceConfig(mu=mu, nu=nu, theta_d=math.pi))
        for phase in np.linspace(0, 2 * math.pi, 41):
            v = usd_success_optimal(SourceConfig(mu=mu, nu=nu, theta_d=-phase))
            assert lo - 1e-15 <= v <= hi + 1e-15

    # feasibility is monotone in loss
    flags = [
        optimize_yields(SOURCE, MEASURED_USD, CHANNEL.at_loss_db(float(loss))).feasible
        for loss in np.arange(5.0, 50.0, 2.5)
    ]
    assert flags == sorted(flags)

    # believed rate is monotone non-increasing in loss for the reference set
    rates = [
        believed_rate(SOURCE, CHANNEL.at_loss_db(float(loss)))[0]
        for loss in np.arange(5.0, 55.0, 0.5)
    ]
    assert all(b <= a + 1e-18 for a, b in zip(rates, rates[1:]))

    # estimates stay inside their declared ranges for arbitrary valid gains
    for _ in range(200):
        q_mu = rng.uniform(0, 1)
        q_nu = rng.uniform(0, 1)
        g = GainStats(
            q_mu_gain=q_mu, q_nu_gain=q_nu,
            emu_qmu=rng.uniform(0, q_mu), enu_qnu=rng.uniform(0, q_nu),
        )
        y1 = one_decoy_y1_lower(SOURCE, g)
        assert 0.0 <= y1 <= 1.0
        if y1 > 0:
            clamped, _ = one_decoy_e1_upper(SOURCE, g, y1)
            assert 0.0 <= clamped <= 0.5
