"""The field commutator outside the light cone.

On a lattice the unequal-time commutator is not exactly zero at spacelike
separation.  It is exponentially small past the cone and shrinks as the
cutoff is refined at fixed physical distance.
"""
from latticeloc import LatticeSpec, commutator_function, lightcone_leakage

spec = LatticeSpec(1, 512, 1.0, 1.0)
t = 20.0
print(f"Delta(d, t={t:g}) on N=512, m=1")
for d in (0, 10, 19, 21, 22, 25, 30, 40, 60):
    print(f"  d = {d:>2}: {commutator_function(spec, d, t):+.3e}")

print("\nleakage at physical distance 16, t = 10, for finer spacings")
for l in (1.0, 0.5, 0.25):
    n = int(round(256 / l))
    s = LatticeSpec(1, n, l, 1.0)
    value = commutator_function(s, int(round(16 / l)), 10.0) / l
    print(f"  l = {l:<5} Delta/l = {value:+.3e}")

prof = lightcone_leakage(spec, t)
print(f"\nlargest |Delta| beyond d = t + 3l: {prof.leakage:.3e}")
