"""Interceptor-side model: conditional yields, statistics-preserving
constraints, and the key-rate upper bound.

The attacker discriminates signal from decoy on each pulse (succeeding with
probability q_mu / q_nu and, given success, naming the right state with
probability xi_mu / xi_nu), measures the photon number, and forwards over a
lossless link with a per-photon-number yield of her choosing. Choosing the
yields to reproduce the normal channel's detection statistics while
minimizing the single-photon signal yield is a linear program; its optimum
gives the key-rate upper bound R^u = Y1_s * mu * e^(-mu).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .coherent import (
    SourceConfig,
    poisson_pmf,
    poisson_tail,
    usd_success_linear_optics,
    usd_success_optimal,
)
from .decoy import ChannelParams, GainStats

#: Photon-number truncation default; Poisson tail for means <= 1 is < 1e-18.
DEFAULT_N_TRUNC = 20

#: Truncation tail mass above which optimize_yields warns.
TRUNC_TAIL_TOL = 1e-12


@dataclass(frozen=True)
class UsdPerformance:
    """Discrimination quality of the attacker's USD measurement.

    q_mu / q_nu: conclusive-outcome probability given a signal / decoy pulse.
    xi_mu / xi_nu: probability the conclusive outcome names the sent state.
    """

    q_mu: float
    q_nu: float
    xi_mu: float = 1.0
    xi_nu: float = 1.0

    def __post_init__(self):
        for name in ("q_mu", "q_nu", "xi_mu", "xi_nu"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")

    def validate_against(self, cfg: SourceConfig, ceiling: str = "optimal") -> None:
        """Check the success probabilities against a theoretical ceiling.

        ceiling="optimal" allows anything up to the optimal-USD success
        probability; ceiling="linear_optics" enforces the interferometric
        implementation's ceiling of half that value. A 1% relative
        allowance tolerates probabilities quoted to a few significant
        figures.
        """
        if ceiling == "optimal":
            cap = usd_success_optimal(cfg)
        elif ceiling == "linear_optics":
            cap = usd_success_linear_optics(cfg)
        else:
            raise ValueError(f"unknown ceiling {ceiling!r}")
        for name, v in (("q_mu", self.q_mu), ("q_nu", self.q_nu)):
            if v > cap * 1.01 + 1e-12:
                raise ValueError(
                    f"{name}={v} exceeds the {ceiling} USD ceiling {cap:.6g} "
                    f"for this source"
                )


@dataclass(frozen=True)
class YieldPlan:
    """Attacker's per-photon-number forwarding yields.

    z_mu[i-1] / z_nu[i-1] is the yield for an i-photon pulse after a
    conclusive signal / decoy outcome, i = 1..n_trunc. Vacuum outcomes and
    inconclusive outcomes are never forwarded (those yields are
    structurally zero and not stored).
    """

    n_trunc: int
    z_mu: np.ndarray
    z_nu: np.ndarray

    def __post_init__(self):
        z_mu = np.asarray(self.z_mu, dtype=float)
        z_nu = np.asarray(self.z_nu, dtype=float)
        if self.n_trunc < 1:
            raise ValueError(f"n_trunc must be >= 1, got {self.n_trunc}")
        if z_mu.shape != (self.n_trunc,) or z_nu.shape != (self.n_trunc,):
            raise ValueError(
                f"yield vectors must have shape ({self.n_trunc},), got "
                f"{z_mu.shape} and {z_nu.shape}"
            )
        if np.any(z_mu < 0) or np.any(z_mu > 1) or np.any(z_nu < 0) or np.any(z_nu > 1):
            raise ValueError("all yields must lie in [0, 1]")
        object.__setattr__(self, "z_mu", z_mu)
        object.__setattr__(self, "z_nu", z_nu)

    @classmethod
    def zeros(cls, n_trunc: int) -> "YieldPlan":
        return cls(n_trunc, np.zeros(n_trunc), np.zeros(n_trunc))


@dataclass(frozen=True)
class AttackSolution:
    """Outcome of the yield optimization at one channel point.

    When the statistics cannot be reproduced, feasible is False and the
    remaining fields are None; that is a normal outcome, not an error.
    """

    feasible: bool
    plan: YieldPlan | None
    y1_signal: float | None
    rate_upper: float | None
    constraint_residuals: dict[str, float]


def yields_from_plan(
    cfg: SourceConfig, usd: UsdPerformance, plan: YieldPlan
) -> tuple[np.ndarray, np.ndarray]:
    """Receiver-visible yields implied by a forwarding plan.

    Y_i^s = q_mu [xi_mu Z_i^mu + (1 - xi_mu) Z_i^nu]
    Y_i^d = q_nu [xi_nu Z_i^nu + (1 - xi_nu) Z_i^mu]

    Returns two arrays indexed by photon number i = 0..n_trunc; the i = 0
    entries are 0.
    """
    y_s = np.zeros(plan.n_trunc + 1)
    y_d = np.zeros(plan.n_trunc + 1)
    y_s[1:] = usd.q_mu * (usd.xi_mu * plan.z_mu + (1.0 - usd.xi_mu) * plan.z_nu)
    y_d[1:] = usd.q_nu * (usd.xi_nu * plan.z_nu + (1.0 - usd.xi_nu) * plan.z_mu)
    return y_s, y_d


def attack_gains(cfg: SourceConfig, usd: UsdPerformance, plan: YieldPlan) -> GainStats:
    """Detection statistics the receiver sees under the attack.

    Gains are the Poisson-weighted sums of the plan-implied yields over
    i = 1..n_trunc. Error products count only misidentified forwardings,
    each wrong with probability 1/2:
    E_mu Q_mu = sum_i (1/2) q_mu (1 - xi_mu) Z_i^nu P_i^mu, and symmetrically
    for the decoy intensity.
    """
    i = np.arange(1, plan.n_trunc + 1)
    p_mu = poisson_pmf(cfg.mu, i)
    p_nu = poisson_pmf(cfg.nu, i)
    y_s, y_d = yields_from_plan(cfg, usd, plan)
    return GainStats(
        q_mu_gain=float(p_mu @ y_s[1:]),
        q_nu_gain=float(p_nu @ y_d[1:]),
        emu_qmu=float(0.5 * usd.q_mu * (1.0 - usd.xi_mu) * (p_mu @ plan.z_nu)),
        enu_qnu=float(0.5 * usd.q_nu * (1.0 - usd.xi_nu) * (p_nu @ plan.z_mu)),
    )


@dataclass(frozen=True)
class LpSolution:
    """Raw output of the yield LP: stacked [z_mu, z_nu] before clamping."""

    feasible: bool
    z: np.ndarray | None
    objective: float | None


def solve_yield_lp(
    mu: float,
    nu: float,
    q_mu: float,
    q_nu: float,
    xi_mu: float,
    xi_nu: float,
    n_trunc: int,
    target_mu: float,
    target_nu: float,
    error_budget_mu: float | None = None,
    error_budget_nu: float | None = None,
) -> LpSolution:
    """Minimize the single-photon signal yield subject to gain equalities.

    Variables are Z_i^mu, Z_i^nu in [0, 1] for i = 1..n_trunc. The gain
    equalities pin the Poisson-weighted yields to target_mu and target_nu;
    when error budgets are given, the misidentification error products are
    additionally constrained below them. Rows are rescaled to unit right
    hand side before calling the solver (raw coefficients span many orders
    of magnitude at high loss).

    The objective is Y_1^s = q_mu [xi_mu Z_1^mu + (1 - xi_mu) Z_1^nu].
    """
    i = np.arange(1, n_trunc + 1)
    p_mu = poisson_pmf(mu, i)
    p_nu = poisson_pmf(nu, i)

    c = np.zeros(2 * n_trunc)
    c[0] = q_mu * xi_mu
    c[n_trunc] = q_mu * (1.0 - xi_mu)

    a_eq = np.zeros((2, 2 * n_trunc))
    a_eq[0, :n_trunc] = q_mu * xi_mu * p_mu
    a_eq[0, n_trunc:] = q_mu * (1.0 - xi_mu) * p_mu
    a_eq[1, :n_trunc] = q_nu * (1.0 - xi_nu) * p_nu
    a_eq[1, n_trunc:] = q_nu * xi_nu * p_nu
    b_eq = np.array([target_mu, target_nu])

    a_ub = b_ub = None
    if error_budget_mu is not None or error_budget_nu is not None:
        if error_budget_mu is None or error_budget_nu is None:
            raise ValueError("error budgets must be given for both intensities")
        a_ub = np.zeros((2, 2 * n_trunc))
        a_ub[0, n_trunc:] = 0.5 * q_mu * (1.0 - xi_mu) * p_mu
        a_ub[1, :n_trunc] = 0.5 * q_nu * (1.0 - xi_nu) * p_nu
        b_ub = np.array([error_budget_mu, error_budget_nu])

    def scaled(a, b):
        s = np.where(b > 0, b, 1.0)
        return a / s[:, None], b / s

    a_eq_s, b_eq_s = scaled(a_eq, b_eq)
    if a_ub is not None:
        a_ub_s, b_ub_s = scaled(a_ub, b_ub)
    else:
        a_ub_s = b_ub_s = None

    res = linprog(
        c,
        A_ub=a_ub_s,
        b_ub=b_ub_s,
        A_eq=a_eq_s,
        b_eq=b_eq_s,
        bounds=[(0.0, 1.0)] * (2 * n_trunc),
        method="highs",
    )
    if res.status == 2:
        return LpSolution(feasible=False, z=None, objective=None)
    if not res.success:
        raise RuntimeError(f"yield LP solver failed (status {res.status}): {res.message}")
    return LpSolution(feasible=True, z=res.x.copy(), objective=float(c @ res.x))


def gain_targets(cfg: SourceConfig, ch: ChannelParams) -> tuple[float, float]:
    """Normal-channel gains the attack must reproduce, 1 - e^(-eta*alpha)."""
    return (
        1.0 - math.exp(-ch.eta * cfg.mu),
        1.0 - math.exp(-ch.eta * cfg.nu),
    )


def error_budgets(cfg: SourceConfig, ch: ChannelParams) -> tuple[float, float]:
    """Error products of the normal channel, the attacker's error headroom."""
    t_mu, t_nu = gain_targets(cfg, ch)
    return (ch.e0 * ch.y0 + ch.e_d * t_mu, ch.e0 * ch.y0 + ch.e_d * t_nu)


def optimize_yields(
    cfg: SourceConfig,
    usd: UsdPerformance,
    ch: ChannelParams,
    n_trunc: int = DEFAULT_N_TRUNC,
    enforce_errors: bool = False,
) -> AttackSolution:
    """Best statistics-preserving attack at one channel point.

    Solves the yield LP against the normal-channel gain targets, optionally
    also enforcing the error-statistics inequalities, and reports the
    optimal plan with its Y_1^s and R^u. Infeasibility (the attacker cannot
    reproduce the expected statistics at this loss) is reported via
    feasible=False.
    """
    tail = poisson_tail(cfg.mu, n_trunc)
    if tail > TRUNC_TAIL_TOL:
        warnings.warn(
            f"photon-number truncation {n_trunc} leaves Poisson tail "
            f"{tail:.3e} > {TRUNC_TAIL_TOL:.1e} for mean {cfg.mu}",
            stacklevel=2,
        )
    t_mu, t_nu = gain_targets(cfg, ch)
    bud_mu = bud_nu = None
    if enforce_errors:
        bud_mu, bud_nu = error_budgets(cfg, ch)
    sol = solve_yield_lp(
        cfg.mu, cfg.nu, usd.q_mu, usd.q_nu, usd.xi_mu, usd.xi_nu,
        n_trunc, t_mu, t_nu, bud_mu, bud_nu,
    )
    if not sol.feasible:
        return AttackSolution(
            feasible=False, plan=None, y1_signal=None, rate_upper=None,
            constraint_residuals={},
        )

    plan = YieldPlan(
        n_trunc,
        np.clip(sol.z[:n_trunc], 0.0, 1.0),
        np.clip(sol.z[n_trunc:], 0.0, 1.0),
    )
    achieved = attack_gains(cfg, usd, plan)
    residuals = {
        "gain_eq": max(
            abs(achieved.q_mu_gain - t_mu), abs(achieved.q_nu_gain - t_nu)
        ),
        "z_bounds": max(0.0, float(np.max(sol.z) - 1.0), float(-np.min(sol.z))),
    }
    if enforce_errors:
        residuals["error_ineq"] = max(
            achieved.emu_qmu - bud_mu, achieved.enu_qnu - bud_nu
        )
    y1s = usd.q_mu * (usd.xi_mu * plan.z_mu[0] + (1.0 - usd.xi_mu) * plan.z_nu[0])
    return AttackSolution(
        feasible=True,
        plan=plan,
        y1_signal=float(y1s),
        rate_upper=key_rate_upper(cfg, float(y1s)),
        constraint_residuals=residuals,
    )


def key_rate_upper(cfg: SourceConfig, y1_signal: float) -> float:
    """Key-rate upper bound under the attack, R^u = Y1_s * mu * e^(-mu)."""
    if not 0.0 <= y1_signal <= 1.0:
        raise ValueError(f"y1_signal must be in [0, 1], got {y1_signal}")
    return y1_signal * cfg.mu * math.exp(-cfg.mu)
