"""Believed vs attainable key rate across transmission loss.

The communicating parties run one-decoy post-processing and believe the
key rate R_l. The interceptor, discriminating signal from decoy and
splitting photon numbers, constrains the true rate to R_u. Wherever
R_l > R_u > 0 the parties distill key the attacker partly knows. This
script sweeps the overall loss for three attacker models (the measured
interferometric setup and two ideal ones), writes a CSV per model, and
locates each crossover.

Run:
    python demos/key_rate_bounds.py
"""
import math

from qkdattack import (
    ChannelParams,
    SourceConfig,
    UsdPerformance,
    find_crossover,
    sweep,
    usd_success_optimal,
)

source = SourceConfig(mu=0.5, nu=0.1)
source_pi = SourceConfig(mu=0.5, nu=0.1, theta_d=math.pi)
channel = ChannelParams.from_loss_db(40.0, y0=1e-7, e_d=0.02)

attackers = [
    (
        "measured",
        source,
        UsdPerformance(q_mu=1.18e-3, q_nu=1.16e-3, xi_mu=0.9690, xi_nu=0.9837),
        (33.0, 44.0),
    ),
    (
        "ideal_zero_phase",
        source,
        UsdPerformance(q_mu=usd_success_optimal(source),
                       q_nu=usd_success_optimal(source)),
        (17.0, 30.0),
    ),
    (
        "ideal_pi_phase",
        source_pi,
        UsdPerformance(q_mu=usd_success_optimal(source_pi),
                       q_nu=usd_success_optimal(source_pi)),
        (8.0, 20.0),
    ),
]

for name, cfg, usd, bracket in attackers:
    rows = sweep(cfg, usd, channel, bracket[0] - 2, bracket[1] + 4, 0.25)
    path = f"bounds_{name}.csv"
    with open(path, "w") as fh:
        fh.write("loss_db,r_lower,r_upper,feasible,attack_success\n")
        for r in rows:
            upper = "" if r.r_upper is None else repr(r.r_upper)
            fh.write(f"{r.loss_db!r},{r.r_lower!r},{upper},"
                     f"{str(r.feasible).lower()},{str(r.attack_success).lower()}\n")
    crossover = find_crossover(cfg, usd, channel, *bracket)
    n_success = sum(r.attack_success for r in rows)
    print(f"{name:18s} q = {usd.q_mu:.4g}  crossover = {crossover:6.2f} dB  "
          f"({n_success}/{len(rows)} swept points successful)  -> {path}")

print()
print("Above each crossover the believed rate exceeds what the attacked")
print("channel can deliver, so part of the distilled key is insecure.")
