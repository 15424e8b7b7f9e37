"""Knight localisation versus effective localisation.

Unitaries acting inside a region leave the outside exactly at its vacuum
values.  A one-particle wavepacket never does: its deviations leak out with
an exponential tail.  Superposing packets localised in the same region keeps
that tail short.
"""
from latticeloc import (
    LatticeSpec,
    Region,
    bell_demo,
    elp_check,
    gaussian_profile,
    knight_check,
    l_localisation_fit,
    local_unitary_family,
    one_particle_state,
    vacuum_state,
)

spec = LatticeSpec(1, 256, 1.0, 0.5)
vac = vacuum_state(spec)
region = Region.interval(spec, 100, 155)

squeezed = local_unitary_family(vac, region, "squeeze", 0.8)
print("local squeeze:", knight_check(squeezed, vac, region).verdict)

for center in (96.0, 104.0, 151.0):
    psi = one_particle_state(gaussian_profile(spec, (center,), 5.0), spec)
    rep = knight_check(psi, vac, region)
    print(f"packet at {center:g}: {rep.verdict}, largest outside deviation {rep.max_outside:.2e}")

wide = LatticeSpec(1, 400, 1.0, 0.5)
reg = Region.interval(wide, 60, 140)
a = one_particle_state(gaussian_profile(wide, (80.0,), 5.0), wide)
b = one_particle_state(gaussian_profile(wide, (120.0,), 5.0), wide)
print(f"\nsingle packet L = {l_localisation_fit(a, reg).scale:.4f}")
for coeffs in ([1, 1], [1, -1], [1, 0.5j]):
    v = elp_check([a, b], coeffs, reg, 1 / wide.mass)
    print(f"superposition {coeffs}: L' = {v.report.scale:.4f}, bound {v.to_record()['bound']:g}, passed {v.passed}")

print("\nBell basis images of |B1> under single-qubit operators")
rec = bell_demo()
for name, v in rec["identities"].items():
    print(f"  {name}: holds {v['holds']}, phase {v['phase']:+.0f}")
for name, v in rec["alternative_conventions"].items():
    print(f"  convention {name}: all hold {v['all_hold']}")
