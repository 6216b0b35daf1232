"""Tests for the Monte Carlo attack pipeline and stability-series ingestion."""
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import stats as scipy_stats

from qkdattack.attack import UsdPerformance, YieldPlan, optimize_yields
from qkdattack.coherent import SourceConfig
from qkdattack.decoy import ChannelParams
from qkdattack.montecarlo import (
    PulseRecord,
    StateKind,
    TrialConfig,
    UsdOutcome,
    expected_gains,
    ingest_stability_series,
    pulse_records,
    read_stability_csv,
    run_trials,
    sample_pulses,
)

REF = SourceConfig(mu=0.5, nu=0.1)
TABLE_USD = UsdPerformance(q_mu=1.18e-3, q_nu=1.16e-3, xi_mu=0.9690, xi_nu=0.9837)


@pytest.fixture(scope="module")
def optimized_plan():
    ch = ChannelParams.from_loss_db(38.0, y0=1e-7, e_d=0.02)
    sol = optimize_yields(REF, TABLE_USD, ch)
    assert sol.feasible
    return sol.plan


def _trial(plan, n=100_000, seed=1):
    return TrialConfig(n_pulses=n, seed=seed, cfg=REF, usd=TABLE_USD, plan=plan)


class TestSampling:
    def test_zero_capacity_attacker(self, optimized_plan):
        dud = UsdPerformance(q_mu=0.0, q_nu=0.0)
        tc = TrialConfig(n_pulses=50_000, seed=3, cfg=REF, usd=dud,
                         plan=optimized_plan)
        stats = run_trials(tc)
        assert stats.q_mu_hat == 0.0 and stats.q_nu_hat == 0.0
        assert stats.gain_mu_hat == 0.0 and stats.gain_nu_hat == 0.0
        assert math.isnan(stats.xi_mu_hat)

    def test_determinism_bit_identical(self, optimized_plan):
        tc = _trial(optimized_plan, seed=99)
        assert run_trials(tc) == run_trials(tc)

    def test_block_partition_invariance(self, optimized_plan):
        tc = _trial(optimized_plan, seed=5)
        whole = run_trials(tc, block_size=1 << 20)
        chunked = run_trials(tc, block_size=777)
        assert whole == chunked

    def test_stream_is_pulse_addressed(self, optimized_plan):
        tc = _trial(optimized_plan, n=10_000, seed=11)
        full = sample_pulses(tc)
        part = sample_pulses(tc, start=4_000, count=3_000)
        for key in full:
            assert np.array_equal(full[key][4_000:7_000], part[key])

    def test_never_forwards_inconclusive(self, optimized_plan):
        # forwarding requires a conclusive outcome, vacuum never forwards
        tc = _trial(YieldPlan(3, np.ones(3), np.ones(3)), n=200_000, seed=13)
        arr = sample_pulses(tc)
        fwd = arr["forwarded"]
        assert not np.any(fwd & (arr["outcome"] == UsdOutcome.FAIL))
        assert not np.any(fwd & (arr["photon"] == 0))

    def test_equiprobable_state_choice(self, optimized_plan):
        stats = run_trials(_trial(optimized_plan, n=200_000, seed=17))
        assert stats.n_signal + stats.n_decoy == 200_000
        assert abs(stats.n_signal - 100_000) < 5 * math.sqrt(200_000 * 0.25)

    def test_phase_independent_of_outcome(self, optimized_plan):
        arr = sample_pulses(_trial(optimized_plan, n=400_000, seed=7))
        table = np.zeros((4, 3), dtype=int)
        for ph in range(4):
            for oc in range(3):
                table[ph, oc] = int(np.sum(
                    (arr["phase_index"] == ph) & (arr["outcome"] == oc)
                ))
        assert table.sum() == 400_000
        p = scipy_stats.chi2_contingency(table).pvalue
        assert p > 1e-3

    def test_pulse_records_match_arrays(self, optimized_plan):
        tc = _trial(optimized_plan, n=500, seed=23)
        records = pulse_records(tc, 500)
        arr = sample_pulses(tc)
        assert len(records) == 500
        for i in (0, 123, 499):
            rec = records[i]
            assert rec.state_kind == arr["state"][i]
            assert rec.photon_count == arr["photon"][i]
            assert rec.forwarded == arr["forwarded"][i]
            assert rec.bb84_phase in (0.0, 0.5 * math.pi, math.pi, 1.5 * math.pi)

    def test_record_invariant(self):
        with pytest.raises(ValueError):
            PulseRecord(
                state_kind=StateKind.SIGNAL, bb84_phase=0.0, photon_count=2,
                usd_outcome=UsdOutcome.FAIL, forwarded=True,
            )


class TestStatisticalConsistency:
    def test_gains_match_analytics_at_reference_point(self, optimized_plan):
        tc = _trial(optimized_plan, n=1_000_000, seed=20240817)
        stats = run_trials(tc)
        expected = expected_gains(tc)
        for hat, ref, n in (
            (stats.gain_mu_hat, expected.q_mu_gain, stats.n_signal),
            (stats.gain_nu_hat, expected.q_nu_gain, stats.n_decoy),
        ):
            se = math.sqrt(ref * (1 - ref) / n)
            assert abs(hat - ref) <= 5 * se

    def test_all_ones_plan_approaches_conclusive_gain(self):
        usd = UsdPerformance(q_mu=0.5, q_nu=0.4, xi_mu=1.0, xi_nu=1.0)
        plan = YieldPlan(20, np.ones(20), np.ones(20))
        tc = TrialConfig(n_pulses=400_000, seed=29, cfg=REF, usd=usd, plan=plan)
        stats = run_trials(tc)
        for hat, q, alpha, n in (
            (stats.gain_mu_hat, 0.5, REF.mu, stats.n_signal),
            (stats.gain_nu_hat, 0.4, REF.nu, stats.n_decoy),
        ):
            ref = q * (1 - math.exp(-alpha))
            se = math.sqrt(ref * (1 - ref) / n)
            assert abs(hat - ref) <= 5 * se

    def test_success_rate_converges_binomially(self, optimized_plan):
        zs = []
        for seed in range(30):
            tc = _trial(optimized_plan, n=100_000, seed=seed)
            stats = run_trials(tc)
            se = math.sqrt(TABLE_USD.q_mu * (1 - TABLE_USD.q_mu) / stats.n_signal)
            zs.append((stats.q_mu_hat - TABLE_USD.q_mu) / se)
        p = scipy_stats.kstest(np.array(zs), "norm").pvalue
        assert p > 1e-3

    def test_accuracy_estimates_in_range(self, optimized_plan):
        stats = run_trials(_trial(optimized_plan, n=500_000, seed=31))
        for value in (stats.xi_mu_hat, stats.xi_nu_hat):
            assert 0.9 <= value <= 1.0


class TestStabilitySeries:
    def test_constant_series(self):
        rows = [(t, 1.18e-3, 1.16e-3, 0.969, 0.9837) for t in range(10)]
        summary = ingest_stability_series(rows)
        assert summary.n_rows == 10
        assert all(s == 0.0 for s in summary.stds.values())
        assert summary.flagged == ()

    def test_two_row_sample_std(self):
        rows = [(0, 0.1, 0.2, 0.9, 0.9), (1, 0.2, 0.2, 0.9, 0.9)]
        summary = ingest_stability_series(rows)
        assert_allclose(summary.means["q_mu"], 0.15, rtol=1e-12)
        # textbook two-point sample deviation |a-b|/sqrt(2)
        assert_allclose(summary.stds["q_mu"], 0.1 / math.sqrt(2), rtol=1e-12)

    def test_generator_estimator_round_trip(self):
        rng = np.random.default_rng(101)
        n = 748
        target_std = 4.3e-5
        series = np.clip(rng.normal(1.18e-3, target_std, n), 0.0, 1.0)
        rows = [
            (t, float(series[t]), 1.16e-3, 0.969, 0.9837) for t in range(n)
        ]
        summary = ingest_stability_series(rows)
        assert abs(summary.stds["q_mu"] - target_std) <= 0.2 * target_std

    def test_flags_above_threshold(self):
        rows = [(0, 0.1, 0.2, 0.9, 0.9), (1, 0.3, 0.2, 0.9, 0.9)]
        summary = ingest_stability_series(rows, deviation_threshold=0.05)
        assert summary.flagged == ("q_mu",)

    def test_rejects_short_series(self):
        with pytest.raises(ValueError, match="at least 2"):
            ingest_stability_series([(0, 0.1, 0.1, 0.9, 0.9)])

    def test_rejects_malformed_rows_with_index(self):
        rows = [(0, 0.1, 0.1, 0.9, 0.9), (1, 0.1, 0.1, 0.9)]
        with pytest.raises(ValueError, match="row 1"):
            ingest_stability_series(rows)
        rows = [(0, 0.1, 0.1, 0.9, 0.9), (1, 0.1, 1.1, 0.9, 0.9)]
        with pytest.raises(ValueError, match="row 1.*q_nu"):
            ingest_stability_series(rows)

    def test_csv_round_trip(self, tmp_path):
        path = tmp_path / "stability.csv"
        path.write_text(
            "t,q_mu,q_nu,xi_mu,xi_nu\n"
            "0,0.00118,0.00116,0.969,0.9837\n"
            "1,0.00119,0.00115,0.970,0.9836\n"
        )
        rows = read_stability_csv(path)
        assert len(rows) == 2
        summary = ingest_stability_series(rows)
        assert summary.n_rows == 2

    def test_csv_rejects_wrong_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("time,a,b,c,d\n0,1,2,3,4\n")
        with pytest.raises(ValueError, match="header"):
            read_stability_csv(path)
