import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from latticeloc.errors import FitError, PreconditionError, ValidationError
from latticeloc.lattice import LatticeSpec
from latticeloc.localisation import (
    KNIGHT_TOL,
    Region,
    bell_demo,
    deviation_envelope,
    elp_check,
    gaussian_deviation,
    gaussian_profile,
    knight_check,
    l_localisation_fit,
    local_unitary_family,
    one_particle_expectations,
    one_particle_from_amplitudes,
    one_particle_state,
    superpose,
)
from latticeloc.vacuum import exact_decay_rate, symplectic_eigenvalues, vacuum_state

SPEC = LatticeSpec(1, 128, 1.0, 0.5)
VAC = vacuum_state(SPEC)


def packet(spec, center, width=5.0, momentum=0.0):
    return one_particle_state(gaussian_profile(spec, (center,) * spec.dimension, width, momentum), spec)


def test_region_validation():
    with pytest.raises(ValidationError):
        Region.interval(SPEC, 10, 5)
    with pytest.raises(ValidationError):
        Region.interval(SPEC, 0, 128)
    with pytest.raises(ValidationError):
        Region(SPEC, (0, 0), (1, 1))


def test_region_distances_wrap():
    r = Region.interval(SPEC, 10, 20)
    d = r.distances()
    assert d[15] == 0 and d[9] == 1 and d[21] == 1
    # periodic: site 127 is 11 steps from site 10 going around
    assert d[127] == 11
    np.testing.assert_array_equal(r.sites(), np.arange(10, 21))


def test_region_distances_dirichlet_and_2d():
    spec = LatticeSpec(1, 20, 1.0, 1.0, boundary="dirichlet")
    assert Region.interval(spec, 10, 12).distances()[0] == 10
    spec2 = LatticeSpec(2, 6, 1.0, 1.0)
    d = Region(spec2, (2, 2), (3, 3)).distances().reshape(6, 6)
    assert d[2, 2] == 0 and d[0, 0] == 4 and d[5, 5] == 4


def test_displace_group_law():
    r = Region.interval(SPEC, 40, 40)
    a = local_unitary_family(local_unitary_family(VAC, r, "displace", 0.3), r, "displace", -1.1)
    b = local_unitary_family(VAC, r, "displace", -0.8)
    np.testing.assert_allclose(a.mean_phi, b.mean_phi, atol=1e-15)
    np.testing.assert_array_equal(a.cov_phiphi, VAC.cov_phiphi)


def test_squeeze_site0_scales_and_stays_pure():
    spec = LatticeSpec(1, 8, 1.0, 1.0)
    v = vacuum_state(spec)
    s = local_unitary_family(v, Region.interval(spec, 0, 0), "squeeze", 0.4)
    assert s.cov_phiphi[0, 0] == pytest.approx(np.exp(-0.8) * v.cov_phiphi[0, 0])
    np.testing.assert_allclose(symplectic_eigenvalues(s.covariance()), 0.5, atol=1e-9)


def test_unknown_kind():
    with pytest.raises(ValueError):
        local_unitary_family(VAC, Region.interval(SPEC, 0, 0), "rotate", 1.0)
    with pytest.raises(ValidationError):
        local_unitary_family(VAC, Region.interval(SPEC, 0, 0), "displace", math.inf)


@given(st.integers(0, 120), st.integers(0, 7), st.sampled_from(["displace", "squeeze"]), st.floats(-3, 3))
def test_local_unitaries_are_knight_exact(start, length, kind, param):
    region = Region.interval(SPEC, start, start + length)
    state = local_unitary_family(VAC, region, kind, param)
    rep = knight_check(state, VAC, region)
    assert rep.verdict == "knight_exact"
    assert rep.max_outside <= KNIGHT_TOL
    assert l_localisation_fit(gaussian_deviation(state, VAC), region).exact


def test_vacuum_vs_vacuum_is_exact():
    region = Region.interval(SPEC, 50, 60)
    rep = l_localisation_fit(VAC, region, vacuum=VAC)
    assert rep.exact and rep.to_record()["L"] == "exact"


@pytest.mark.parametrize("center, region", [(96.0, (100, 155)), (104.0, (100, 155)), (151.0, (100, 155)),
                                            (60.0, (40, 60)), (30.0, (28, 34))])
def test_packets_are_not_knight_localised(center, region):
    spec = LatticeSpec(1, 256, 1.0, 0.5)
    reg = Region.interval(spec, *region)
    rep = knight_check(packet(spec, center), vacuum_state(spec), reg)
    assert rep.verdict == "not_localised"
    assert rep.max_outside > 1e-8
    assert np.all(rep.deviations > 0)


def test_deep_packet_falls_below_knight_tolerance():
    # a narrow packet 27 sites from the edge: the outside deviations are below 1e-12, so the
    # tolerance-based verdict cannot see them (the state is still not Knight localised)
    spec = LatticeSpec(1, 256, 1.0, 0.5)
    reg = Region.interval(spec, 100, 155)
    rep = knight_check(packet(spec, 128.0, 3.0), vacuum_state(spec), reg)
    assert rep.verdict == "knight_exact"
    assert 0 < rep.max_outside <= KNIGHT_TOL


def test_one_particle_state_basics():
    amps = np.zeros(SPEC.n_sites)
    amps[3] = 1.0
    s = one_particle_from_amplitudes(amps, SPEC)
    assert np.linalg.norm(s.amplitudes) == pytest.approx(1.0, abs=1e-15)
    g = packet(SPEC, 64.0)
    # dense modes are sorted by frequency, so the weight sits on the lowest modes
    assert np.argmax(np.abs(g.amplitudes)) <= 2
    again = one_particle_from_amplitudes(g.amplitudes, SPEC)
    np.testing.assert_array_equal(again.amplitudes, g.amplitudes)
    with pytest.raises(ValidationError):
        one_particle_state(np.zeros(SPEC.n_sites), SPEC)


def test_callable_profile():
    a = one_particle_state(lambda x: np.exp(-((x[:, 0] - 40.0) ** 2) / 8), SPEC)
    b = one_particle_state(gaussian_profile(SPEC, (40,), 2.0), SPEC)
    np.testing.assert_allclose(a.amplitudes, b.amplitudes, atol=1e-14)
    np.testing.assert_allclose(b.profile() / b.profile()[40], gaussian_profile(SPEC, (40,), 2.0), atol=1e-12)


def test_single_oscillator_first_excited_state():
    spec = LatticeSpec(1, 1, 1.0, 1.0)
    s = one_particle_from_amplitudes([1.0], spec)
    table = one_particle_expectations(s)
    # <q^2> = 3/2 in the first excited state, vacuum 1/2
    assert 0.5 + table.dqq[0, 0] == pytest.approx(1.5, rel=1e-14)
    assert 0.5 + table.dpp[0, 0] == pytest.approx(1.5, rel=1e-14)
    np.testing.assert_array_equal(table.dphi, 0)


def test_zero_mode_excitation_is_uniform():
    spec = LatticeSpec(1, 16, 1.0, 0.7)
    s = one_particle_state(np.ones(16), spec)
    table = one_particle_expectations(s)
    np.testing.assert_allclose(table.dqq, table.dqq[0, 0], rtol=1e-12)
    np.testing.assert_allclose(table.dpp, table.dpp[0, 0], rtol=1e-12)


def test_envelope_uses_nearer_site():
    spec = LatticeSpec(1, 32, 1.0, 0.5)
    reg = Region.interval(spec, 10, 12)
    table = one_particle_expectations(packet(spec, 11.0, 2.0))
    d, env = deviation_envelope(table, reg)
    np.testing.assert_array_equal(d, np.arange(1, d.max() + 1))
    assert env[0] >= env[-1] and np.all(env >= 0)


def test_spec_mismatch():
    other = vacuum_state(LatticeSpec(1, 128, 1.0, 0.6))
    with pytest.raises(ValidationError):
        knight_check(packet(SPEC, 30.0), other, Region.interval(SPEC, 20, 40))


def test_single_packet_scale():
    spec = LatticeSpec(1, 400, 1.0, 0.5)
    reg = Region.interval(spec, 190, 210)
    rep = l_localisation_fit(packet(spec, 200.0), reg)
    assert rep.verdict == "effectively_localised" and rep.r2 >= 0.9
    # quadratic deviations decay at twice the vacuum rate, so L tracks 1/(2 kappa), about 1/(2m)
    target = 1 / (2 * exact_decay_rate(spec))
    assert target / 2 <= rep.scale <= 2 * target
    assert rep.scale <= 2 / spec.mass
    assert rep.scale == pytest.approx(0.8646, abs=1e-3)


def test_fit_needs_points():
    spec = LatticeSpec(1, 16, 1.0, 0.5)
    with pytest.raises(FitError):
        l_localisation_fit(packet(spec, 8.0, 2.0), Region.interval(spec, 3, 13))


def test_superposition_is_normalised():
    a, b = packet(SPEC, 40.0), packet(SPEC, 70.0, 3.0, 0.5)
    s = superpose([a, b], [0.3, 1j])
    assert np.linalg.norm(s.amplitudes) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValidationError):
        superpose([a], [1, 2])


def test_elp_example():
    spec = LatticeSpec(1, 400, 1.0, 0.5)
    reg = Region.interval(spec, 60, 140)
    verdict = elp_check([packet(spec, 80.0), packet(spec, 120.0)], [1, 1], reg, 1 / spec.mass)
    assert verdict.passed
    assert verdict.report.scale <= 2 / spec.mass and verdict.report.r2 >= 0.9
    assert verdict.report.scale == pytest.approx(0.8682, abs=1e-3)
    assert verdict.to_record()["bound"] == 4.0


def test_elp_degenerate_coefficients():
    spec = LatticeSpec(1, 400, 1.0, 0.5)
    reg = Region.interval(spec, 60, 140)
    a = packet(spec, 80.0)
    verdict = elp_check([a, packet(spec, 120.0)], [1, 0], reg, 2.0)
    single = l_localisation_fit(a, reg)
    np.testing.assert_allclose(superpose([a, a], [1, 0]).amplitudes, a.amplitudes, atol=1e-15)
    # the fit reaches down to the noise floor, so agreement is to roundoff of those points
    assert verdict.report.scale == pytest.approx(single.scale, rel=1e-9)
    assert verdict.report.r2 == pytest.approx(single.r2, rel=1e-9)


def test_elp_precondition():
    spec = LatticeSpec(1, 400, 1.0, 0.5)
    reg = Region.interval(spec, 60, 100)
    with pytest.raises(PreconditionError, match="state 1"):
        elp_check([packet(spec, 80.0), packet(spec, 300.0)], [1, 1], reg, 2.0)


@pytest.mark.parametrize("m, n", list(itertools.product([0.2, 0.5], [256, 400])))
def test_elp_closure_family(m, n):
    spec = LatticeSpec(1, n, 1.0, m)
    inset = math.ceil(3 / m)
    for extra, coeffs in itertools.product((0, 10), ([1, 1], [1, -1], [1, 0.5j])):
        a, b = n // 2 - 20 - inset - extra, n // 2 + 20 + inset + extra
        reg = Region.interval(spec, a, b)
        states = [packet(spec, float(a + inset + extra)), packet(spec, float(b - inset - extra))]
        verdict = elp_check(states, coeffs, reg, 1 / m)
        assert verdict.passed, (m, n, extra, coeffs, verdict.to_record())


def test_bell_demo():
    rec = bell_demo()
    ids = rec["identities"]
    assert ids["(M_A x 1)|B1> = |B2>"]["holds"]
    assert ids["(M_B x 1)|B1> = |B3>"]["holds"]
    mc = ids["(M_C x 1)|B1> = |B4>"]
    # with columns as images M_C maps |B1> to -|B4>
    assert mc["phase"] == pytest.approx(-1.0, abs=1e-15)
    assert mc["residual_up_to_phase"] <= 1e-15
    assert not mc["holds"]
    assert rec["orthonormal"] and rec["orthonormality_residual"] <= 1e-15
    assert rec["span_rank"] == 4
    assert all(v["all_hold"] for v in rec["alternative_conventions"].values())
