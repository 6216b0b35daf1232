"""How well can an eavesdropper tell signal from decoy pulses?

Without phase randomization the two intensities are pure coherent states
with a known phase, so unambiguous state discrimination applies: the
measurement either names the state with certainty or admits failure. This
walk-through computes the overlap-limited success probabilities, shows how
the relative phase between signal and decoy pulses moves them, and builds
the discrimination POVM on a truncated Fock space to verify its defining
properties numerically.

Run:
    python demos/usd_discrimination.py
"""
import math

import numpy as np

from qkdattack import (
    SourceConfig,
    build_usd_povm,
    coherent_vector,
    failure_probability,
    usd_success_linear_optics,
    usd_success_optimal,
)

# the reference source: signal 0.5, decoy 0.1 photons per pulse on average
source = SourceConfig(mu=0.5, nu=0.1)

print("== Discrimination probabilities, equal phases ==")
print(f"overlap (failure) probability p_f : {failure_probability(source):.6f}")
print(f"optimal USD success q_opt         : {usd_success_optimal(source):.6f}")
print(f"linear-optics ceiling q_max       : {usd_success_linear_optics(source):.6f}")
print()

# The relative phase between signal and decoy pulses matters a lot: at pi
# the states are farthest apart and discrimination is easiest.
print("== Success probability vs relative phase ==")
print(f"{'phase/pi':>9} {'q_opt':>10} {'q_max':>10}")
for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
    cfg = SourceConfig(mu=0.5, nu=0.1, theta_d=frac * math.pi)
    print(f"{frac:9.2f} {usd_success_optimal(cfg):10.6f} "
          f"{usd_success_linear_optics(cfg):10.6f}")
print()

# Build the three-outcome POVM (conclusive-signal, conclusive-decoy,
# inconclusive) in a photon-number basis truncated at 40 and check that it
# behaves like a measurement should.
e_mu, e_nu, e_f = build_usd_povm(source, cutoff=40)
ket_signal = coherent_vector(math.sqrt(source.mu / 2), 40)
ket_decoy = coherent_vector(math.sqrt(source.nu / 2), 40)

print("== POVM on the truncated Fock space (cutoff 40) ==")
completeness = np.max(np.abs(
    e_mu.entries + e_nu.entries + e_f.entries - np.eye(41)
))
print(f"completeness defect               : {completeness:.2e}")
print(f"smallest eigenvalue of E_f        : {e_f.min_eigenvalue():.2e}")
print(f"<signal|E_mu|signal>              : {e_mu.expectation(ket_signal):.6f}"
      f"  (q_opt = {usd_success_optimal(source):.6f})")
print(f"<decoy|E_mu|decoy>  (should be 0) : {e_mu.expectation(ket_decoy):.2e}")
print(f"<signal|E_nu|signal> (should be 0): {e_nu.expectation(ket_signal):.2e}")
print()
print("A conclusive outcome is never wrong; the price is the failure "
      "probability p_f.")
