"""Vacuum correlations of a free lattice scalar field.

A massive field decays on the Compton scale 1/m; near the massless limit
the tail becomes a power law.  Entanglement between two sites, measured by
mutual information, falls off with their separation.
"""
import numpy as np

from latticeloc import LatticeSpec, mutual_information, vacuum_state
from latticeloc.vacuum import exact_decay_rate, fit_vacuum_falloff

for m in (0.05, 0.1, 0.2, 0.5):
    spec = LatticeSpec(1, 2048, 1.0, m)
    fit = fit_vacuum_falloff(spec)
    print(f"m = {m:<5} xi = {fit.scale:8.3f}   1/m = {1 / m:6.1f}   "
          f"exact lattice 1/kappa = {1 / exact_decay_rate(spec):8.3f}   ({fit.classification})")

fit = fit_vacuum_falloff(LatticeSpec(1, 4096, 1.0, 1e-3), (10, 500))
print(f"\nm = 1e-3: {fit.classification}, exponent {fit.power_exponent:.3f}, "
      f"R2 power {fit.r2_power:.4f} vs exponential {fit.r2_exponential:.4f}")

vac = vacuum_state(LatticeSpec(1, 256, 1.0, 0.2))
print("\nsite-site mutual information")
for d in (1, 2, 4, 8, 16, 32):
    print(f"  d = {d:>2}: {mutual_information(vac, [0], [d]):.3e}")

# a block of 8 sites against its neighbours
block = np.arange(8)
print(f"  block vs adjacent block: {mutual_information(vac, block, block + 8):.3e}")
