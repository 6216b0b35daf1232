"""Monte Carlo realization of the intercept-and-forward attack pipeline.

Samples the full per-pulse chain (state choice, BB84 phase, discrimination
outcome, photon number, forwarding decision) to validate the analytic gain
and error formulas, and ingests discrimination-stability time series of the
shape produced by long measurement runs.

Randomness comes from a counter-based generator (Philox) keyed by the trial
seed, with a fixed number of draw slots per pulse, so pulse p always sees
the same random values no matter how trials are partitioned into blocks.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np
from numpy.random import Generator, Philox

from .attack import UsdPerformance, YieldPlan, attack_gains
from .coherent import SourceConfig
from .decoy import GainStats

#: BB84 encoding phases.
BB84_PHASES = (0.0, 0.5 * math.pi, math.pi, 1.5 * math.pi)

# Eight uniform draws are reserved per pulse (five used); Philox emits four
# doubles per counter step, so a block starting at pulse p resumes the
# serial stream after advance(2 * p).
_DRAWS_PER_PULSE = 8
_SLOT_STATE, _SLOT_PHASE, _SLOT_OUTCOME, _SLOT_PHOTON, _SLOT_FORWARD = range(5)

_DEFAULT_BLOCK = 1 << 16


class StateKind(IntEnum):
    SIGNAL = 0
    DECOY = 1


class UsdOutcome(IntEnum):
    """Conclusive-signal, conclusive-decoy, or inconclusive outcome."""

    SIGNAL = 0
    DECOY = 1
    FAIL = 2


@dataclass(frozen=True)
class TrialConfig:
    """Inputs of one reproducible trial batch."""

    n_pulses: int
    seed: int
    cfg: SourceConfig
    usd: UsdPerformance
    plan: YieldPlan

    def __post_init__(self):
        if self.n_pulses < 1:
            raise ValueError(f"n_pulses must be >= 1, got {self.n_pulses}")


@dataclass(frozen=True)
class PulseRecord:
    """One sampled pulse of the attack chain."""

    state_kind: StateKind
    bb84_phase: float
    photon_count: int
    usd_outcome: UsdOutcome
    forwarded: bool

    def __post_init__(self):
        if self.forwarded and self.usd_outcome == UsdOutcome.FAIL:
            raise ValueError("inconclusive pulses are never forwarded")


@dataclass(frozen=True)
class EmpiricalStats:
    """Per-trial estimates with binomial standard errors.

    Conditional accuracy estimates (xi) are NaN when no conclusive outcome
    was observed for that state.
    """

    q_mu_hat: float
    q_mu_se: float
    q_nu_hat: float
    q_nu_se: float
    xi_mu_hat: float
    xi_mu_se: float
    xi_nu_hat: float
    xi_nu_se: float
    gain_mu_hat: float
    gain_mu_se: float
    gain_nu_hat: float
    gain_nu_se: float
    n_pulses: int
    n_signal: int
    n_decoy: int


def _poisson_cdf(mean: float, min_len: int) -> np.ndarray:
    """CDF table long enough that the residual tail is below 1e-15."""
    k = max(min_len, 8)
    while True:
        n = np.arange(k + 1)
        pmf = np.exp(-mean + n * np.log(mean) - np.cumsum(np.log(np.maximum(n, 1)))) \
            if mean > 0 else np.where(n == 0, 1.0, 0.0)
        cdf = np.cumsum(pmf)
        if 1.0 - cdf[-1] < 1e-15:
            return cdf
        k *= 2


def sample_pulses(tc: TrialConfig, start: int = 0, count: int | None = None) -> dict:
    """Sample pulses [start, start + count) of the trial as arrays.

    Returns a dict with int arrays "state", "phase_index", "photon",
    "outcome" and a bool array "forwarded". The draw for pulse p depends
    only on (seed, p), so any partition of the pulse range reproduces the
    same values.
    """
    if count is None:
        count = tc.n_pulses - start
    if not (0 <= start and start + count <= tc.n_pulses):
        raise ValueError("pulse range outside the trial")

    gen = Generator(Philox(key=tc.seed).advance(2 * start))
    u = gen.random((count, _DRAWS_PER_PULSE))

    state = np.where(u[:, _SLOT_STATE] < 0.5, StateKind.SIGNAL, StateKind.DECOY)
    signal = state == StateKind.SIGNAL
    phase_index = np.minimum((u[:, _SLOT_PHASE] * 4).astype(np.int64), 3)

    usd = tc.usd
    # conclusive thresholds per sent state (conclusive-signal first)
    t_first = np.where(signal, usd.q_mu * usd.xi_mu, usd.q_nu * (1.0 - usd.xi_nu))
    t_both = np.where(signal, usd.q_mu, usd.q_nu)
    u_out = u[:, _SLOT_OUTCOME]
    outcome = np.where(
        u_out < t_first, UsdOutcome.SIGNAL,
        np.where(u_out < t_both, UsdOutcome.DECOY, UsdOutcome.FAIL),
    )

    n = tc.plan.n_trunc
    cdf_mu = _poisson_cdf(tc.cfg.mu, n + 1)
    cdf_nu = _poisson_cdf(tc.cfg.nu, n + 1)
    u_ph = u[:, _SLOT_PHOTON]
    photon = np.where(
        signal,
        np.searchsorted(cdf_mu, u_ph, side="right"),
        np.searchsorted(cdf_nu, u_ph, side="right"),
    )

    # forwarding probability looked up by (concluded state, photon count);
    # vacuum, inconclusive, and beyond-truncation pulses are never forwarded
    max_photon = max(len(cdf_mu), len(cdf_nu)) + 1
    z_mu_ext = np.zeros(max_photon)
    z_nu_ext = np.zeros(max_photon)
    z_mu_ext[1:n + 1] = tc.plan.z_mu
    z_nu_ext[1:n + 1] = tc.plan.z_nu
    photon_idx = np.minimum(photon, max_photon - 1)
    z = np.where(
        outcome == UsdOutcome.SIGNAL, z_mu_ext[photon_idx],
        np.where(outcome == UsdOutcome.DECOY, z_nu_ext[photon_idx], 0.0),
    )
    forwarded = u[:, _SLOT_FORWARD] < z

    return {
        "state": state,
        "phase_index": phase_index,
        "photon": photon,
        "outcome": outcome,
        "forwarded": forwarded,
    }


def pulse_records(tc: TrialConfig, count: int | None = None) -> list[PulseRecord]:
    """First pulses of the trial as records; meant for small counts."""
    arrays = sample_pulses(tc, 0, count if count is not None else min(tc.n_pulses, 1000))
    return [
        PulseRecord(
            state_kind=StateKind(int(s)),
            bb84_phase=BB84_PHASES[int(ph)],
            photon_count=int(k),
            usd_outcome=UsdOutcome(int(o)),
            forwarded=bool(f),
        )
        for s, ph, k, o, f in zip(
            arrays["state"], arrays["phase_index"], arrays["photon"],
            arrays["outcome"], arrays["forwarded"],
        )
    ]


def _ratio_se(successes: int, trials: int) -> tuple[float, float]:
    if trials == 0:
        return float("nan"), float("nan")
    p = successes / trials
    return p, math.sqrt(p * (1.0 - p) / trials)


def run_trials(tc: TrialConfig, block_size: int = _DEFAULT_BLOCK) -> EmpiricalStats:
    """Accumulate empirical discrimination and gain statistics.

    Deterministic given the trial config: the same seed reproduces the same
    statistics bit for bit, independent of block_size.
    """
    if block_size < 1:
        raise ValueError("block_size must be >= 1")
    n_sig = n_dec = 0
    concl_sig = concl_dec = 0
    correct_sig = correct_dec = 0
    fwd_sig = fwd_dec = 0
    for start in range(0, tc.n_pulses, block_size):
        arr = sample_pulses(tc, start, min(block_size, tc.n_pulses - start))
        signal = arr["state"] == StateKind.SIGNAL
        conclusive = arr["outcome"] != UsdOutcome.FAIL
        n_sig += int(np.sum(signal))
        n_dec += int(np.sum(~signal))
        concl_sig += int(np.sum(conclusive & signal))
        concl_dec += int(np.sum(conclusive & ~signal))
        correct_sig += int(np.sum(signal & (arr["outcome"] == UsdOutcome.SIGNAL)))
        correct_dec += int(np.sum(~signal & (arr["outcome"] == UsdOutcome.DECOY)))
        fwd_sig += int(np.sum(arr["forwarded"] & signal))
        fwd_dec += int(np.sum(arr["forwarded"] & ~signal))

    q_mu, q_mu_se = _ratio_se(concl_sig, n_sig)
    q_nu, q_nu_se = _ratio_se(concl_dec, n_dec)
    xi_mu, xi_mu_se = _ratio_se(correct_sig, concl_sig)
    xi_nu, xi_nu_se = _ratio_se(correct_dec, concl_dec)
    gain_mu, gain_mu_se = _ratio_se(fwd_sig, n_sig)
    gain_nu, gain_nu_se = _ratio_se(fwd_dec, n_dec)
    return EmpiricalStats(
        q_mu_hat=q_mu, q_mu_se=q_mu_se,
        q_nu_hat=q_nu, q_nu_se=q_nu_se,
        xi_mu_hat=xi_mu, xi_mu_se=xi_mu_se,
        xi_nu_hat=xi_nu, xi_nu_se=xi_nu_se,
        gain_mu_hat=gain_mu, gain_mu_se=gain_mu_se,
        gain_nu_hat=gain_nu, gain_nu_se=gain_nu_se,
        n_pulses=tc.n_pulses, n_signal=n_sig, n_decoy=n_dec,
    )


def expected_gains(tc: TrialConfig) -> GainStats:
    """Analytic statistics the trial should reproduce."""
    return attack_gains(tc.cfg, tc.usd, tc.plan)


_STABILITY_COLUMNS = ("q_mu", "q_nu", "xi_mu", "xi_nu")
_STABILITY_HEADER = ("t",) + _STABILITY_COLUMNS


@dataclass(frozen=True)
class StabilitySummary:
    """Mean, sample standard deviation, and threshold flags per column."""

    means: dict[str, float]
    stds: dict[str, float]
    flagged: tuple[str, ...]
    n_rows: int


def ingest_stability_series(rows, deviation_threshold: float | None = None) -> StabilitySummary:
    """Summarize a (t, q_mu, q_nu, xi_mu, xi_nu) stability time series.

    Needs at least two rows; every probability column must lie in [0, 1]
    (malformed rows are rejected with their index). Columns whose sample
    standard deviation exceeds deviation_threshold are flagged.
    """
    data = []
    for idx, row in enumerate(rows):
        try:
            values = [float(v) for v in row]
        except (TypeError, ValueError) as exc:
            raise ValueError(f"row {idx}: non-numeric entry ({exc})") from None
        if len(values) != len(_STABILITY_HEADER):
            raise ValueError(
                f"row {idx}: expected {len(_STABILITY_HEADER)} columns, got {len(values)}"
            )
        for name, v in zip(_STABILITY_COLUMNS, values[1:]):
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"row {idx}: {name}={v} outside [0, 1]")
        data.append(values)
    if len(data) < 2:
        raise ValueError(f"need at least 2 rows, got {len(data)}")

    table = np.asarray(data)[:, 1:]
    means = table.mean(axis=0)
    stds = table.std(axis=0, ddof=1)
    # a constant column has zero sample deviation exactly, not summation noise
    stds[table.max(axis=0) == table.min(axis=0)] = 0.0
    flagged = tuple(
        name for name, s in zip(_STABILITY_COLUMNS, stds)
        if deviation_threshold is not None and s > deviation_threshold
    )
    return StabilitySummary(
        means=dict(zip(_STABILITY_COLUMNS, means.tolist())),
        stds=dict(zip(_STABILITY_COLUMNS, stds.tolist())),
        flagged=flagged,
        n_rows=len(data),
    )


def read_stability_csv(path) -> list[tuple[float, ...]]:
    """Read a stability series CSV with header t,q_mu,q_nu,xi_mu,xi_nu."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != _STABILITY_HEADER:
            raise ValueError(
                f"expected header {','.join(_STABILITY_HEADER)}, got {header}"
            )
        rows = []
        for idx, row in enumerate(reader):
            if not row:
                continue
            try:
                rows.append(tuple(float(v) for v in row))
            except ValueError as exc:
                raise ValueError(f"row {idx}: {exc}") from None
    return rows
