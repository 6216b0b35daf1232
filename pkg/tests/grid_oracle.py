"""Brute-force grid oracle for the yield optimization at truncation 3.

Enumerates Z in {0, pitch, ..., 1}^6 and reports the best objective among
points satisfying the constraints within a slack of one grid pitch times
the constraint's largest coefficient. Written against the closed-form
expressions directly (no package code) so it is an independent check.
"""
import math

import numpy as np


def _pois(mean, i):
    return mean ** i * math.exp(-mean) / math.factorial(i)


def grid_best_objective(
    mu, nu, q_mu, q_nu, xi_mu, xi_nu,
    target_mu, target_nu,
    error_budget_mu=None, error_budget_nu=None,
    pitch=0.05,
):
    """Minimum Y1_s over slack-feasible grid points, or None if none exist.

    Scans (Z1_mu, Z1_nu) combinations in ascending objective order and
    returns at the first combination with any feasible completion, which is
    exactly the grid minimum because the objective depends only on the
    scanned pair.
    """
    p_mu = [_pois(mu, i) for i in (1, 2, 3)]
    p_nu = [_pois(nu, i) for i in (1, 2, 3)]
    grid = np.round(np.arange(0.0, 1.0 + pitch / 2, pitch), 12)

    # lattice of the four multiphoton coordinates
    z2m, z3m, z2n, z3n = (a.ravel() for a in np.meshgrid(grid, grid, grid, grid))
    inner_gain_mu = q_mu * (
        xi_mu * (z2m * p_mu[1] + z3m * p_mu[2])
        + (1 - xi_mu) * (z2n * p_mu[1] + z3n * p_mu[2])
    )
    inner_gain_nu = q_nu * (
        xi_nu * (z2n * p_nu[1] + z3n * p_nu[2])
        + (1 - xi_nu) * (z2m * p_nu[1] + z3m * p_nu[2])
    )
    inner_err_mu = 0.5 * q_mu * (1 - xi_mu) * (z2n * p_mu[1] + z3n * p_mu[2])
    inner_err_nu = 0.5 * q_nu * (1 - xi_nu) * (z2m * p_nu[1] + z3m * p_nu[2])

    # slack: one pitch times the largest coefficient of each constraint row
    slack_mu = pitch * q_mu * max(xi_mu, 1 - xi_mu) * max(p_mu)
    slack_nu = pitch * q_nu * max(xi_nu, 1 - xi_nu) * max(p_nu)
    slack_err_mu = pitch * 0.5 * q_mu * (1 - xi_mu) * max(p_mu)
    slack_err_nu = pitch * 0.5 * q_nu * (1 - xi_nu) * max(p_nu)

    combos = sorted(
        ((q_mu * (xi_mu * z1m + (1 - xi_mu) * z1n), z1m, z1n)
         for z1m in grid for z1n in grid),
    )
    for objective, z1m, z1n in combos:
        gain_mu = inner_gain_mu + q_mu * (xi_mu * z1m + (1 - xi_mu) * z1n) * p_mu[0]
        gain_nu = inner_gain_nu + q_nu * (xi_nu * z1n + (1 - xi_nu) * z1m) * p_nu[0]
        ok = (np.abs(gain_mu - target_mu) <= slack_mu) \
            & (np.abs(gain_nu - target_nu) <= slack_nu)
        if error_budget_mu is not None:
            err_mu = inner_err_mu + 0.5 * q_mu * (1 - xi_mu) * z1n * p_mu[0]
            err_nu = inner_err_nu + 0.5 * q_nu * (1 - xi_nu) * z1m * p_nu[0]
            ok &= (err_mu <= error_budget_mu + slack_err_mu) \
                & (err_nu <= error_budget_nu + slack_err_nu)
        if bool(np.any(ok)):
            return float(objective)
    return None
