import numpy as np
import pytest
from scipy.optimize import minimize

from latticeloc.errors import PreconditionError, ValidationError
from latticeloc.lattice import LatticeSpec
from latticeloc.renorm import field_correlator, match_discretisations, residual_profile

COARSE = LatticeSpec(1, 256, 1.0, 0.5)
FINE = LatticeSpec(1, 512, 0.5, 0.5)
WINDOW = (10.0, 40.0)


@pytest.fixture(scope="module")
def matched():
    return match_discretisations(COARSE, FINE, WINDOW)


def test_self_match_is_identity():
    res = match_discretisations(COARSE, COARSE, WINDOW)
    assert res.field_rescaling == pytest.approx(1.0, abs=1e-12)
    assert res.effective_mass == COARSE.mass
    assert res.max_residual <= 1e-12
    _, r, _ = residual_profile(res)
    np.testing.assert_allclose(r, 0, atol=1e-12)


def test_matched_example(matched):
    assert matched.max_residual <= 0.01
    assert matched.max_residual <= matched.unmatched_max_residual
    assert matched.field_rescaling > 0 and matched.effective_mass > 0
    assert np.all(matched.residuals >= 0)
    d, r, slope = residual_profile(matched)
    assert d[0] == 10.0 and d[-1] == 40.0
    assert r[0] >= r[-1]
    assert slope <= 0
    # frozen from the reference run
    assert matched.field_rescaling == pytest.approx(0.98332, rel=1e-4)
    assert matched.effective_mass == pytest.approx(0.49616, rel=1e-4)
    assert matched.max_residual == pytest.approx(3.79e-4, rel=0.01)


def test_against_joint_optimiser(matched):
    # independent route: minimise over (log Z, m) jointly with a generic optimiser
    idx_c = (np.arange(10, 41)).astype(int)
    gc = np.log(field_correlator(COARSE)[idx_c])

    def cost(p):
        gf = field_correlator(FINE.replace(mass=p[1]))[2 * idx_c]
        return np.sum((gc - p[0] - np.log(gf)) ** 2)

    best = minimize(cost, [0.0, 0.5], method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-16})
    assert np.exp(best.x[0]) == pytest.approx(matched.field_rescaling, rel=1e-5)
    assert best.x[1] == pytest.approx(matched.effective_mass, rel=1e-5)


def test_swap_gives_reciprocal(matched):
    swapped = match_discretisations(FINE, COARSE, WINDOW)
    assert swapped.field_rescaling * matched.field_rescaling == pytest.approx(1.0, rel=1e-6)
    assert swapped.max_residual == pytest.approx(matched.max_residual, rel=1e-6)
    assert swapped.tuned == "a"


def test_matched_beats_unmatched_other_pairs():
    for m in (0.3, 0.8):
        res = match_discretisations(COARSE.replace(mass=m), FINE.replace(mass=m), WINDOW)
        assert res.max_residual <= res.unmatched_max_residual


def test_preconditions():
    with pytest.raises(ValidationError):
        match_discretisations(COARSE, FINE.replace(sites_per_axis=300), WINDOW)
    with pytest.raises(ValidationError):
        match_discretisations(COARSE, LatticeSpec(1, 384, 2 / 3, 0.5), WINDOW)
    with pytest.raises(ValidationError):
        match_discretisations(COARSE, FINE, (2.0, 40.0))
    with pytest.raises(ValidationError):
        match_discretisations(COARSE, FINE, (10.0, 100.0))
    with pytest.raises(ValidationError):
        match_discretisations(COARSE, LatticeSpec(2, 16, 0.5, 0.5), WINDOW)


def test_bracket_exhausted():
    # a fine lattice whose bare mass is far off cannot find an interior minimum
    with pytest.raises(PreconditionError):
        match_discretisations(COARSE, FINE.replace(mass=0.05), WINDOW)
