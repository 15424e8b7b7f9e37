"""Discretised free scalar field theory on finite lattices.

Exact Gaussian vacua, unequal-time commutators, Knight and effective
localisation of states, scale-l matching of two discretisations, and a
brute-force truncated-Fock oracle for tiny lattices.
"""

from .dynamics import (
    CommutatorProfile,
    commutator_function,
    equal_time_qp_commutator,
    evolve_wavepacket,
    lightcone_leakage,
)
from .errors import FitError, NotPositiveDefiniteError, PreconditionError, ValidationError
from .lattice import (
    CouplingMatrix,
    LatticeSpec,
    ModeBasis,
    build_lattice,
    coupling_matrix,
    dispersion,
    matrix_power_half,
    mode_decomposition,
)
from .localisation import (
    LocalisationReport,
    OneParticleState,
    Region,
    bell_demo,
    elp_check,
    gaussian_profile,
    knight_check,
    l_localisation_fit,
    local_unitary_family,
    one_particle_expectations,
    one_particle_state,
)
from .oracle import TruncatedSpace, ground_state_dense, oracle_crosscheck, truncated_hamiltonian
from .renorm import RenormalisationResult, match_discretisations, residual_profile
from .spreading import WavepacketSpec, constancy_horizon, spread_halfwidth, tail_ratio
from .vacuum import (
    FalloffFit,
    GaussianState,
    connected_correlator,
    fit_falloff,
    mutual_information,
    smeared_correlator,
    uncertainty_floor,
    vacuum_state,
)

__version__ = "0.1.0"
