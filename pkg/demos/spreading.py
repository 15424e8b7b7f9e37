"""How long a free Gaussian wavepacket keeps its width."""
from latticeloc import WavepacketSpec, constancy_horizon, spread_halfwidth
from latticeloc.spreading import spreading_record

nat = WavepacketSpec(1.0, 1.0)
t = constancy_horizon(nat)
print(f"natural units: horizon t = {t:g}, width there = {spread_halfwidth(WavepacketSpec(1.0, 1.0, t)):.6f}")

rec = spreading_record(WavepacketSpec(1e-11, 1.0, units="SI"), r=1e-6)
print(f"1 kg, L = 1e-11 m: horizon {rec['constancy_horizon']:.3e} s "
      f"= {rec['constancy_horizon_years']:.0f} years")
print(f"commonly quoted: {rec['quoted_horizon_years']:.0e} years (factor {rec['horizon_discrepancy_factor']:.1f} apart)")
print(f"tail at 1 um: log10 ratio = {rec['log10_tail_ratio']:.4e}")
