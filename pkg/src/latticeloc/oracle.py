"""Brute-force truncated-Fock representation of tiny lattices.

Each site carries its own oscillator ladder (frequency ``sqrt(K_xx)``) cut
off at ``n_max`` quanta, so the Hilbert space has ``(n_max + 1)**N`` states
and inter-site couplings appear as explicit ``q_x q_y`` terms.  Nothing here
uses the normal modes to build the ground state, which makes it an
independent check on the closed-form Gaussian machinery.

Single-site squares such as ``q_x^2`` are projections of the untruncated
operators (built one level higher, then cut), so the truncated Hamiltonian is
the compression ``P H P`` and its ground energy approaches the exact value
from above.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import eigsh, expm_multiply

from .dynamics import commutator_function
from .errors import ValidationError
from .lattice import LatticeSpec, coupling_matrix
from .localisation import (
    Region,
    gaussian_profile,
    local_unitary_family,
    one_particle_expectations,
    one_particle_state,
)
from .vacuum import mutual_information, region_entropy, uncertainty_floor, vacuum_state

DEFAULT_CAP = 60_000
DEFAULT_NMAX = 12
DEFAULT_TOL = 1e-6
# below this size a dense eigensolver is used
DENSE_LIMIT = 1500


def _site_ops(levels: int, mu: float):
    """Truncated single-site operators: q, p and projected q^2, p^2, (qp+pq)/2."""
    big = levels + 1
    a = sp.diags(np.sqrt(np.arange(1, big)), 1, format="csr")
    q = (a + a.T) / np.sqrt(2 * mu)
    p = 1j * np.sqrt(mu / 2) * (a.T - a)
    cut = lambda m: sp.csr_matrix(m.toarray()[:levels, :levels])
    return {
        "q": cut(q).real,
        "p": cut(p),
        "q2": cut(q @ q).real,
        "p2": cut(p @ p).real,
        "qp": cut(0.5 * (q @ p + p @ q)),
    }


@dataclass(eq=False)
class TruncatedSpace:
    """Fock space of ``spec`` with at most ``n_max`` quanta per site."""

    spec: LatticeSpec
    n_max: int = DEFAULT_NMAX
    cap: int = DEFAULT_CAP
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.dimension > self.cap:
            raise ValidationError(
                f"truncated space has dimension {self.dimension} > cap {self.cap}")

    @property
    def levels(self) -> int:
        return self.n_max + 1

    @property
    def n_sites(self) -> int:
        return self.spec.n_sites

    @property
    def dimension(self) -> int:
        return self.levels ** self.spec.n_sites

    @cached_property
    def coupling(self) -> np.ndarray:
        return coupling_matrix(self.spec).entries

    @cached_property
    def _local(self):
        return [_site_ops(self.levels, np.sqrt(self.coupling[x, x])) for x in range(self.n_sites)]

    def op(self, name: str, site: int):
        """Operator ``name`` on ``site`` embedded in the full space (sparse)."""
        key = (name, site)
        if key not in self._cache:
            left = sp.identity(self.levels ** site, format="csr")
            right = sp.identity(self.levels ** (self.n_sites - site - 1), format="csr")
            self._cache[key] = sp.kron(sp.kron(left, self._local[site][name]), right, format="csr")
        return self._cache[key]

    def pair(self, a: str, x: int, b: str, y: int):
        """``a_x b_y`` with same-site products taken from the projected single-site table."""
        if x != y:
            return self.op(a, x) @ self.op(b, y)
        if (a, b) == ("q", "q"):
            return self.op("q2", x)
        if (a, b) == ("p", "p"):
            return self.op("p2", x)
        return self.op("qp", x)

    def hamiltonian(self):
        K = self.coupling
        H = sp.csr_matrix((self.dimension, self.dimension))
        for x in range(self.n_sites):
            H = H + 0.5 * self.op("p2", x) + 0.5 * K[x, x] * self.op("q2", x)
            for y in range(x + 1, self.n_sites):
                if K[x, y] != 0:
                    H = H + K[x, y] * (self.op("q", x) @ self.op("q", y))
        return H.tocsr()

    def basis(self):
        """Occupation-number tuples in kron order (site 0 most significant)."""
        return list(np.ndindex(*([self.levels] * self.n_sites)))


def truncated_hamiltonian(spec: LatticeSpec, n_max: int = DEFAULT_NMAX, cap: int = DEFAULT_CAP):
    """Sparse real symmetric Hamiltonian on the truncated site-Fock space."""
    return TruncatedSpace(spec, n_max, cap).hamiltonian()


def ground_state_dense(H, tol: float = 1e-9):
    """Lowest eigenpair ``(vector, energy)`` of a Hermitian matrix.

    Dense diagonalisation for small matrices, Lanczos (deterministic start
    vector) otherwise.  The phase is fixed so that the largest-magnitude
    component is real and positive.
    """
    n = H.shape[0]
    if n <= DENSE_LIMIT:
        dense = H.toarray() if sp.issparse(H) else np.asarray(H)
        w, v = np.linalg.eigh(dense)
        energy, vec = w[0], v[:, 0]
    else:
        w, v = eigsh(H, k=1, which="SA", v0=np.ones(n) / np.sqrt(n), tol=0)
        energy, vec = w[0], v[:, 0]
    vec = vec / np.linalg.norm(vec)
    big = np.argmax(np.abs(vec))
    vec = vec * (np.abs(vec[big]) / vec[big])
    residual = np.linalg.norm(H @ vec - energy * vec)
    if residual > tol * max(1.0, abs(energy)):
        raise ArithmeticError(f"ground state did not converge: residual {residual:.3g}")
    return vec, float(energy)


def _expect(vec, op) -> complex:
    return np.vdot(vec, op @ vec)


def _entropy(vec, space: TruncatedSpace, sites) -> float:
    n = space.n_sites
    psi = vec.reshape([space.levels] * n)
    rest = [s for s in range(n) if s not in sites]
    mat = np.transpose(psi, list(sites) + rest).reshape(space.levels ** len(sites), -1)
    s = np.linalg.svd(mat, compute_uv=False) ** 2
    s = s[s > 1e-300]
    return float(-np.sum(s * np.log(s)))


@dataclass
class OracleSettings:
    """Parameters of the quantities compared in `oracle_crosscheck`."""

    packet_center: float = 0.0
    packet_width: float = 1.0
    packet_momentum: float = 0.7
    times: tuple = (0.7, 1.9)
    displacement: float = 0.3
    squeezing: float = 0.2


def closed_form_quantities(spec: LatticeSpec, settings: OracleSettings | None = None) -> dict:
    """Every closed-form quantity the oracle checks, keyed by name."""
    st = settings or OracleSettings()
    vac = vacuum_state(spec, method="dense")
    n = spec.n_sites
    site0 = Region(spec, (0,) * spec.dimension, (0,) * spec.dimension)
    packet = one_particle_state(gaussian_profile(spec, (st.packet_center,) * spec.dimension,
                                                 st.packet_width, st.packet_momentum), spec)
    table = one_particle_expectations(packet)
    disp = local_unitary_family(vac, site0, "displace", st.displacement)
    sq = local_unitary_family(vac, site0, "squeeze", st.squeezing)
    out = {
        "vacuum_qq": vac.cov_phiphi,
        "vacuum_pp": vac.cov_pipi,
        "vacuum_qp": vac.cov_phipi,
        "ground_energy": np.array([0.5 * np.sum(np.sqrt(np.linalg.eigvalsh(coupling_matrix(spec).entries)))]),
        "uncertainty_floor": np.array([uncertainty_floor(vac, x) for x in range(n)]),
        "entropy_site0": np.array([region_entropy(vac, [0])]),
        "one_particle_dqq": table.dqq,
        "one_particle_dpp": table.dpp,
        "one_particle_dqp": table.dqp,
        "displaced_mean_q": disp.mean_phi,
        "squeezed_qq": sq.cov_phiphi,
        "commutator": np.array([[commutator_function(spec, _axis_offset(spec, d), t)
                                 for d in range(spec.sites_per_axis)] for t in st.times]),
    }
    if n >= 2:
        out["mutual_information_01"] = np.array([mutual_information(vac, [0], [1])])
    return out


def _axis_offset(spec, d):
    return (d,) + (0,) * (spec.dimension - 1)


def dense_quantities(spec: LatticeSpec, n_max: int = DEFAULT_NMAX, settings: OracleSettings | None = None,
                     cap: int = DEFAULT_CAP) -> dict:
    """The same quantities as `closed_form_quantities`, computed by brute force."""
    st = settings or OracleSettings()
    space = TruncatedSpace(spec, n_max, cap)
    H = space.hamiltonian()
    omega, energy = ground_state_dense(H)
    n = space.n_sites
    rng = range(n)

    def matrix(vec, a, b, real=True):
        vals = np.array([[_expect(vec, space.pair(a, x, b, y)) for y in rng] for x in rng])
        return vals.real if real else vals

    qq = matrix(omega, "q", "q")
    pp = matrix(omega, "p", "p")
    qp = matrix(omega, "q", "p")

    # one-particle state: A^dagger |Omega> with A^dagger = sum_x (alpha_x q_x - i beta_x p_x)
    packet = one_particle_state(gaussian_profile(spec, (st.packet_center,) * spec.dimension,
                                                 st.packet_width, st.packet_momentum), spec)
    u, w, c = packet.basis.modes, packet.basis.frequencies, packet.amplitudes
    alpha = u @ (c * np.sqrt(w)) / np.sqrt(2)
    beta = u @ (c / np.sqrt(w)) / np.sqrt(2)
    psi = sum(alpha[x] * (space.op("q", x) @ omega) - 1j * beta[x] * (space.op("p", x) @ omega) for x in rng)
    psi = psi / np.linalg.norm(psi)

    site0_p = space.op("p", 0)
    displaced = expm_multiply(-1j * st.displacement * site0_p, omega.astype(complex))
    squeezed = expm_multiply(1j * st.squeezing * space.op("qp", 0), omega.astype(complex))

    comm = []
    Hc = H.astype(complex)
    q0 = space.op("q", 0) @ omega
    for t in st.times:
        row = []
        for d in range(spec.sites_per_axis):
            y = np.ravel_multi_index(_axis_offset(spec, d), spec.shape)
            evolved = expm_multiply(-1j * t * Hc, (space.op("q", y) @ omega).astype(complex))
            val = np.exp(1j * energy * t) * np.vdot(q0, evolved)
            row.append(2 * val.imag)
        comm.append(row)

    out = {
        "vacuum_qq": qq,
        "vacuum_pp": pp,
        "vacuum_qp": qp,
        "ground_energy": np.array([energy]),
        "uncertainty_floor": np.diag(qq) * np.diag(pp),
        "entropy_site0": np.array([_entropy(omega, space, [0])]),
        "one_particle_dqq": matrix(psi, "q", "q") - qq,
        "one_particle_dpp": matrix(psi, "p", "p") - pp,
        "one_particle_dqp": matrix(psi, "q", "p") - qp,
        "displaced_mean_q": np.array([_expect(displaced, space.op("q", x)).real for x in rng]),
        "squeezed_qq": matrix(squeezed, "q", "q"),
        "commutator": np.array(comm),
    }
    if n >= 2:
        out["mutual_information_01"] = np.array(
            [_entropy(omega, space, [0]) + _entropy(omega, space, [1]) - _entropy(omega, space, [0, 1])])
    return out


def oracle_crosscheck(spec: LatticeSpec, n_max: int = DEFAULT_NMAX, tolerances: dict | None = None,
                      closed_form: dict | None = None, settings: OracleSettings | None = None,
                      cap: int = DEFAULT_CAP) -> dict:
    """Compare closed-form quantities against the truncated-Fock computation.

    Returns a report keyed by quantity name, each entry holding ``max_error``,
    ``tolerance`` and ``pass``; ``all_pass`` summarises.  ``closed_form``
    overrides the closed-form side (used to check that mismatches are flagged).
    """
    if spec.n_sites > 4:
        raise ValidationError("the oracle is limited to lattices with at most 4 sites")
    tolerances = tolerances or {}
    closed = closed_form if closed_form is not None else closed_form_quantities(spec, settings)
    dense = dense_quantities(spec, n_max, settings, cap)
    report = {}
    for name, ref in closed.items():
        err = float(np.max(np.abs(np.asarray(ref) - dense[name])))
        tol = float(tolerances.get(name, tolerances.get("default", DEFAULT_TOL)))
        report[name] = {"max_error": err, "tolerance": tol, "pass": err <= tol}
    return {
        "n_max": n_max,
        "dimension": TruncatedSpace(spec, n_max, cap).dimension,
        "quantities": report,
        "all_pass": all(v["pass"] for v in report.values()),
    }
