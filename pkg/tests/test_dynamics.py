import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

from latticeloc.dynamics import (
    commutator_function,
    commutator_matrix,
    commutator_row,
    equal_time_qp_commutator,
    evolve_wavepacket,
    lightcone_leakage,
)
from latticeloc.lattice import LatticeSpec, coupling_matrix
from latticeloc.localisation import gaussian_profile, one_particle_from_amplitudes, one_particle_state


def _flow_commutator(spec, t):
    """Independent route: the (q, p) block of the classical flow exp(t [[0, 1], [-K, 0]])."""
    K = coupling_matrix(spec).entries
    n = spec.n_sites
    gen = np.block([[np.zeros((n, n)), np.eye(n)], [-K, np.zeros((n, n))]])
    return -expm(t * gen)[:n, n:]


@pytest.mark.parametrize("m, t", [(1.0, 0.3), (2.5, 1.7), (0.4, 10.0)])
def test_single_oscillator(m, t):
    spec = LatticeSpec(1, 1, 1.0, m)
    assert commutator_function(spec, 0, t) == pytest.approx(-np.sin(m * t) / m, rel=1e-12)


@pytest.mark.parametrize("spec", [LatticeSpec(1, 6, 1.0, 0.8), LatticeSpec(2, 3, 0.7, 1.2),
                                  LatticeSpec(1, 5, 0.5, 1.0, boundary="dirichlet")])
def test_matches_symplectic_flow(spec):
    for t in (0.4, 2.3):
        ref = _flow_commutator(spec, t)
        np.testing.assert_allclose(commutator_matrix(spec, t), ref, atol=1e-12)
        coord = (1,) + (0,) * (spec.dimension - 1)
        y = np.ravel_multi_index(coord, spec.shape)
        assert commutator_function(spec, coord, t) == pytest.approx(ref[0, y], abs=1e-12)


def test_fft_row_matches_dense():
    spec = LatticeSpec(1, 32, 1.0, 0.6)
    np.testing.assert_allclose(commutator_row(spec, 3.1), commutator_matrix(spec, 3.1)[0], atol=1e-13)


def test_precise_matches_double_where_resolvable():
    spec = LatticeSpec(1, 64, 1.0, 1.0)
    row = commutator_row(spec, 4.0)
    for d in (0, 1, 3, 5):
        assert commutator_function(spec, d, 4.0) == pytest.approx(row[d], rel=1e-9)


def test_equal_time_vanishes():
    spec = LatticeSpec(1, 16, 1.0, 1.0)
    for d in range(1, 16):
        assert commutator_function(spec, d, 0.0) == 0.0
    assert np.abs(commutator_matrix(spec, 0.0)).max() <= 1e-12
    assert lightcone_leakage(spec, 0.0).leakage == 0.0


@given(st.integers(0, 7), st.floats(0.05, 8.0))
def test_time_antisymmetry(d, t):
    spec = LatticeSpec(1, 8, 1.0, 0.9)
    a = commutator_function(spec, d, t, precise=False)
    b = commutator_function(spec, d, -t, precise=False)
    assert abs(a + b) <= 1e-12


def test_range_check():
    with pytest.raises(IndexError):
        commutator_function(LatticeSpec(1, 8, 1.0, 1.0), 8, 1.0)


def test_rapid_decay_outside_cone():
    spec = LatticeSpec(1, 256, 1.0, 1.0)
    t, d = 5.0, 50
    inside = abs(commutator_function(spec, 5, t))
    far = abs(commutator_function(spec, d, t))
    assert 0 < far <= np.exp(-(d - t)) * inside
    # frozen from the extended-precision reference run
    assert far == pytest.approx(2.9e-90, rel=0.05)


def test_decay_factor_between_cone_and_twice_cone():
    spec = LatticeSpec(1, 512, 1.0, 1.0)
    t = 20.0
    near = abs(commutator_function(spec, 22, t))
    far = abs(commutator_function(spec, 40, t))
    assert near / far >= 1e3


def test_leakage_profile_fields():
    spec = LatticeSpec(1, 512, 1.0, 1.0)
    prof = lightcone_leakage(spec, 20.0)
    assert prof.leakage > 0
    outside = prof.distances_physical > 23.0
    assert prof.leakage == pytest.approx(np.abs(prof.field_values[outside]).max())
    assert "shrinks" in prof.summary()["note"]
    with pytest.raises(ValueError):
        lightcone_leakage(spec, -1.0)


def test_leakage_shrinks_with_spacing_at_fixed_distance():
    # same extent 128, same physical distance r = 16 and time t = 10
    values = []
    for l in (1.0, 0.5, 0.25):
        spec = LatticeSpec(1, int(128 / l), l, 1.0)
        values.append(abs(commutator_function(spec, int(16 / l), 10.0)) / l)
    assert values[0] >= values[1] >= values[2]


def test_equal_time_qp_commutator_is_identity():
    spec = LatticeSpec(1, 64, 1.0, 1.0)
    for t in (0.0, 3.0, 20.0):
        assert np.abs(equal_time_qp_commutator(spec, t) - np.eye(64)).max() <= 1e-12


def test_evolve_wavepacket():
    spec = LatticeSpec(1, 64, 1.0, 0.5)
    psi = one_particle_state(gaussian_profile(spec, (20,), 3.0, 0.4), spec)
    same = evolve_wavepacket(psi, 0.0)
    np.testing.assert_array_equal(same.amplitudes, psi.amplitudes)
    later = evolve_wavepacket(psi, 1e3)
    assert abs(1 - np.linalg.norm(later.amplitudes)) <= 1e-12


def test_single_mode_profile_static():
    spec = LatticeSpec(1, 32, 1.0, 0.5)
    amps = np.zeros(32)
    amps[5] = 1.0
    psi = one_particle_from_amplitudes(amps, spec)
    later = evolve_wavepacket(psi, 7.3)
    np.testing.assert_allclose(np.abs(later.profile()) ** 2, np.abs(psi.profile()) ** 2, atol=1e-15)
