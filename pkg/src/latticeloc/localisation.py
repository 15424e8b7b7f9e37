"""Knight localisation, effective (L-)localisation and the ELP verifier.

States are compared with the vacuum through a generating set of outside
observables: field and momentum means, and the three covariance blocks
restricted to pairs of sites that both lie outside the region.  For Gaussian
states and for one-particle states these determine every outside expectation.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import FitError, PreconditionError, ValidationError
from .lattice import LatticeSpec, ModeBasis, coupling_matrix, mode_decomposition
from .vacuum import NOISE_FLOOR, GaussianState

#: outside deviations at or below this are treated as exactly zero
KNIGHT_TOL = 1e-12
#: minimum R^2 for an exp(-d/L) envelope fit to count as effective localisation
LOCALISED_R2 = 0.9
#: superposition scale may grow by at most this factor and still pass the ELP
ELP_FACTOR = 2.0

TRACKED = ("<q_x>", "<p_x>", "<q_x q_y>", "<p_x p_y>", "<{q_x, p_y}>/2")


@dataclass(frozen=True)
class Region:
    """Box of sites ``lower[i] <= x_i <= upper[i]`` (inclusive) on a lattice."""

    spec: LatticeSpec
    lower: tuple
    upper: tuple

    def __post_init__(self):
        lo = tuple(int(v) for v in np.atleast_1d(self.lower))
        hi = tuple(int(v) for v in np.atleast_1d(self.upper))
        if len(lo) != self.spec.dimension or len(hi) != self.spec.dimension:
            raise ValidationError("region bounds must have one entry per lattice axis")
        n = self.spec.sites_per_axis
        for a, b in zip(lo, hi):
            if not 0 <= a <= b < n:
                raise ValidationError(f"region [{a}, {b}] is empty or outside 0..{n - 1}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def interval(cls, spec: LatticeSpec, start: int, stop: int) -> "Region":
        """Contiguous interval ``[start, stop]`` along every axis (a cube in d > 1)."""
        return cls(spec, (start,) * spec.dimension, (stop,) * spec.dimension)

    def distances(self) -> np.ndarray:
        """Lattice graph distance from every site to the nearest region site."""
        spec = self.spec
        n = spec.sites_per_axis
        coords = np.indices(spec.shape).reshape(spec.dimension, -1)
        total = np.zeros(spec.n_sites, dtype=int)
        for x, a, b in zip(coords, self.lower, self.upper):
            if spec.boundary == "periodic":
                d = np.minimum((a - x) % n, (x - b) % n)
            else:
                d = np.maximum(a - x, 0) + np.maximum(x - b, 0)
            total += np.where((x >= a) & (x <= b), 0, d)
        return total

    def sites(self) -> np.ndarray:
        return np.flatnonzero(self.distances() == 0)

    def to_record(self) -> dict:
        return {"lower": list(self.lower), "upper": list(self.upper)}


def local_unitary_family(state: GaussianState, region: Region, kind: str, parameter: float) -> GaussianState:
    """Apply a unitary supported on ``region`` to a Gaussian state.

    ``kind="displace"`` shifts ``<q_x>`` by ``parameter`` on every region site;
    ``kind="squeeze"`` applies ``q -> e^{-s} q, p -> e^{s} p`` site by site.
    """
    if not np.isfinite(parameter):
        raise ValidationError("parameter must be finite")
    sites = region.sites()
    if kind == "displace":
        mean = state.mean_phi.copy()
        mean[sites] += parameter
        return dataclasses.replace(state, mean_phi=mean)
    if kind == "squeeze":
        sq = np.ones(state.n_sites)
        sp = np.ones(state.n_sites)
        sq[sites] = np.exp(-parameter)
        sp[sites] = np.exp(parameter)
        return dataclasses.replace(
            state,
            mean_phi=sq * state.mean_phi,
            mean_pi=sp * state.mean_pi,
            cov_phiphi=sq[:, None] * state.cov_phiphi * sq[None, :],
            cov_pipi=sp[:, None] * state.cov_pipi * sp[None, :],
            cov_phipi=sq[:, None] * state.cov_phipi * sp[None, :],
        )
    raise ValueError(f"unknown local unitary kind {kind!r}")


@dataclass(frozen=True, eq=False)
class DeviationTable:
    """Differences from the vacuum of means and covariance blocks, site by site."""

    dphi: np.ndarray
    dpi: np.ndarray
    dqq: np.ndarray
    dpp: np.ndarray
    dqp: np.ndarray
    spec: LatticeSpec | None = None

    def global_max(self) -> float:
        return float(max(np.abs(a).max() for a in (self.dphi, self.dpi, self.dqq, self.dpp, self.dqp)))


def gaussian_deviation(state: GaussianState, vacuum: GaussianState) -> DeviationTable:
    return DeviationTable(
        state.mean_phi - vacuum.mean_phi,
        state.mean_pi - vacuum.mean_pi,
        state.cov_phiphi - vacuum.cov_phiphi,
        state.cov_pipi - vacuum.cov_pipi,
        state.cov_phipi - vacuum.cov_phipi,
        state.spec,
    )


def deviation_envelope(table: DeviationTable, region: Region):
    """Largest tracked deviation at each distance ``d >= 1`` from ``region``.

    A pair observable sits at the distance of its nearer site.
    Returns ``(distances, envelope)``.
    """
    dist = region.distances()
    top = int(dist.max())
    env = np.zeros(top + 1)
    out = dist > 0
    np.maximum.at(env, dist[out], np.abs(table.dphi[out]))
    np.maximum.at(env, dist[out], np.abs(table.dpi[out]))
    pair = np.maximum.reduce([np.abs(table.dqq), np.abs(table.dpp), np.abs(table.dqp), np.abs(table.dqp.T)])
    both = out[:, None] & out[None, :]
    pd = np.minimum.outer(dist, dist)
    np.maximum.at(env, pd[both], pair[both])
    return np.arange(1, top + 1), env[1:]


@dataclass(frozen=True, eq=False)
class LocalisationReport:
    """Outcome of a Knight or effective-localisation check.

    ``scale`` is the fitted ``L`` (``None`` when no fit was made or the
    state is exactly localised, flagged by ``exact``).
    """

    region: Region
    distances: np.ndarray
    deviations: np.ndarray
    verdict: str
    scale: float | None = None
    r2: float | None = None
    exact: bool = False
    tracked: tuple = TRACKED
    metadata: dict = field(default_factory=dict)

    @property
    def max_outside(self) -> float:
        return float(self.deviations.max()) if self.deviations.size else 0.0

    def to_record(self) -> dict:
        return {
            "region": self.region.to_record(),
            "verdict": self.verdict,
            "L": "exact" if self.exact else self.scale,
            "r2": self.r2,
            "max_outside_deviation": self.max_outside,
            "tracked": list(self.tracked),
            **self.metadata,
        }


@lru_cache(maxsize=8)
def _dense_modes(spec: LatticeSpec) -> ModeBasis:
    return mode_decomposition(coupling_matrix(spec), "dense")


@dataclass(frozen=True, eq=False)
class OneParticleState:
    """Normalised amplitudes ``f_k`` of ``sum_k f_k a_k^dagger |vacuum>`` over real normal modes."""

    amplitudes: np.ndarray
    basis: ModeBasis
    spec: LatticeSpec

    def __post_init__(self):
        if np.iscomplexobj(self.basis.modes):
            raise ValidationError("one-particle states need a real mode basis")
        norm = np.linalg.norm(self.amplitudes)
        if abs(norm - 1) > 1e-12:
            raise ValidationError(f"amplitudes not normalised (norm {norm:.15g})")

    def with_amplitudes(self, amplitudes) -> "OneParticleState":
        return dataclasses.replace(self, amplitudes=np.asarray(amplitudes, dtype=complex))

    def profile(self) -> np.ndarray:
        """Position-space amplitude ``U f`` (inverse of `one_particle_state`)."""
        return self.basis.modes @ self.amplitudes


def _normalise(amplitudes) -> np.ndarray:
    a = np.asarray(amplitudes, dtype=complex)
    norm = np.linalg.norm(a)
    if norm == 0 or not np.isfinite(norm):
        raise ValidationError("profile is zero everywhere")
    return a / norm


def one_particle_from_amplitudes(amplitudes, spec: LatticeSpec, basis: ModeBasis | None = None) -> OneParticleState:
    basis = basis or _dense_modes(spec)
    return OneParticleState(_normalise(amplitudes), basis, spec)


def one_particle_state(profile, spec: LatticeSpec, basis: ModeBasis | None = None) -> OneParticleState:
    """One-particle state with position-space profile ``profile``.

    ``profile`` is an array over sites or a callable taking site coordinates
    of shape ``(n_sites, dimension)``.  The profile is projected on the real
    normal modes, ``f_k = sum_x u_k(x) profile(x)``, and normalised.
    """
    basis = basis or _dense_modes(spec)
    if callable(profile):
        coords = np.indices(spec.shape).reshape(spec.dimension, -1).T
        profile = profile(coords)
    profile = np.asarray(profile, dtype=complex).ravel()
    if profile.shape != (spec.n_sites,):
        raise ValidationError(f"profile must have {spec.n_sites} entries")
    return OneParticleState(_normalise(basis.modes.T @ profile), basis, spec)


def gaussian_profile(spec: LatticeSpec, center, width: float, momentum: float = 0.0) -> np.ndarray:
    """``exp(-r^2 / 2 width^2 + i momentum x_0)`` around ``center`` (minimum image when periodic)."""
    coords = np.indices(spec.shape).reshape(spec.dimension, -1).T.astype(float)
    delta = coords - np.broadcast_to(np.asarray(center, dtype=float), (spec.dimension,))
    if spec.boundary == "periodic":
        n = spec.sites_per_axis
        delta = (delta + n / 2) % n - n / 2
    r2 = np.sum(delta ** 2, axis=1)
    return np.exp(-r2 / (2 * width ** 2)) * np.exp(1j * momentum * delta[:, 0])


def one_particle_expectations(state: OneParticleState) -> DeviationTable:
    """Closed-form deviations from the vacuum in a one-particle state.

    With ``v = U w^(-1/2) f`` and ``u = U w^(1/2) f``:
    ``d<q_x q_y> = Re(v_x* v_y)``, ``d<p_x p_y> = Re(u_x* u_y)`` and
    ``d<{q_x, p_y}>/2 = Im(v_x* u_y)``.  Means vanish.
    """
    U = state.basis.modes
    w = state.basis.frequencies
    v = U @ (state.amplitudes / np.sqrt(w))
    u = U @ (state.amplitudes * np.sqrt(w))
    z = np.zeros(state.spec.n_sites)
    return DeviationTable(
        z, z.copy(),
        np.real(np.outer(v.conj(), v)),
        np.real(np.outer(u.conj(), u)),
        np.imag(np.outer(v.conj(), u)),
        state.spec,
    )


def _deviation_table(state, vacuum: GaussianState | None):
    if isinstance(state, DeviationTable):
        return state
    if vacuum is not None and state.spec is not None and vacuum.spec is not None and state.spec != vacuum.spec:
        raise ValidationError("state and vacuum belong to different lattices")
    if isinstance(state, OneParticleState):
        return one_particle_expectations(state)
    if vacuum is None:
        raise ValidationError("a Gaussian state needs its vacuum for comparison")
    return gaussian_deviation(state, vacuum)


def knight_check(state, vacuum: GaussianState | None, region: Region) -> LocalisationReport:
    """Exact (Knight) localisation: every tracked outside deviation must vanish."""
    table = _deviation_table(state, vacuum)
    d, env = deviation_envelope(table, region)
    exact = bool(env.max() <= KNIGHT_TOL) if env.size else True
    return LocalisationReport(region, d, env, "knight_exact" if exact else "not_localised", exact=exact)


def l_localisation_fit(table, region: Region, min_points: int = 6, vacuum=None) -> LocalisationReport:
    """Fit ``exp(-d/L)`` to the outside deviation envelope.

    Envelope points below ``NOISE_FLOOR`` times the largest deviation anywhere
    on the lattice are roundoff and are dropped before fitting.
    """
    table = _deviation_table(table, vacuum)
    d, env = deviation_envelope(table, region)
    if env.size == 0 or env.max() <= KNIGHT_TOL:
        return LocalisationReport(region, d, env, "knight_exact", exact=True)
    keep = env > NOISE_FLOOR * table.global_max()
    if keep.sum() < min_points:
        raise FitError(f"{keep.sum()} resolvable envelope points, need at least {min_points}")
    x, y = d[keep].astype(float), np.log(env[keep])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    sst = np.sum((y - y.mean()) ** 2)
    r2 = float(1 - np.sum(resid ** 2) / sst) if sst > 0 else 1.0
    scale = float(-1 / slope) if slope < 0 else float("inf")
    ok = slope < 0 and r2 >= LOCALISED_R2
    meta = {"fit_range": [float(x.min()), float(x.max())], "fit_points": int(keep.sum())}
    return LocalisationReport(region, d, env, "effectively_localised" if ok else "not_localised",
                              scale=scale, r2=r2, metadata=meta)


def is_l_localised(report: LocalisationReport, L: float) -> bool:
    return report.exact or (report.verdict == "effectively_localised" and report.scale <= L)


@dataclass(frozen=True, eq=False)
class ElpVerdict:
    passed: bool
    report: LocalisationReport
    L: float
    input_scales: tuple

    def to_record(self) -> dict:
        return {
            "passed": self.passed,
            "L": self.L,
            "bound": ELP_FACTOR * self.L,
            "input_scales": ["exact" if s is None else s for s in self.input_scales],
            "superposition": self.report.to_record(),
        }


def superpose(states: Sequence[OneParticleState], coefficients) -> OneParticleState:
    """Normalised ``sum_i c_i |psi_i>`` inside the one-particle sector."""
    if len(states) != len(coefficients) or not states:
        raise ValidationError("need one coefficient per state")
    amps = sum(c * s.amplitudes for c, s in zip(coefficients, states))
    return states[0].with_amplitudes(_normalise(amps))


def elp_check(states: Sequence[OneParticleState], coefficients, region: Region, L: float) -> ElpVerdict:
    """Check that a superposition of L-localised states stays localised on scale ``2 L``.

    Raises `PreconditionError` if an input state is not itself L-localised.
    """
    scales = []
    for i, s in enumerate(states):
        rep = l_localisation_fit(s, region)
        if not is_l_localised(rep, L):
            raise PreconditionError(
                f"state {i} is not {L:g}-localised in the region (fitted L={rep.scale}, R^2={rep.r2})")
        scales.append(None if rep.exact else rep.scale)
    rep = l_localisation_fit(superpose(states, coefficients), region)
    passed = rep.exact or (rep.scale <= ELP_FACTOR * L and rep.r2 >= LOCALISED_R2)
    return ElpVerdict(bool(passed), rep, float(L), tuple(scales))


def bell_demo() -> dict:
    """Two-qubit Bell basis: cyclicity of ``|B1>`` under one-qubit operations.

    Kets ``|ab> = |a> (x) |b>`` with the first factor acted on by ``M (x) 1``.
    Each mapping is reported both as a literal vector identity and up to a
    global phase; the four images of ``|B1>`` are checked to span C^4.
    """
    k0, k1 = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    ket = lambda a, b: np.kron(a, b)
    r = 1 / np.sqrt(2)
    basis = {
        "B1": r * (ket(k0, k0) + ket(k1, k1)),
        "B2": r * (ket(k0, k0) - ket(k1, k1)),
        "B3": r * (ket(k1, k0) + ket(k0, k1)),
        "B4": r * (ket(k1, k0) - ket(k0, k1)),
    }
    ops = {
        "M_A": np.array([[1.0, 0.0], [0.0, -1.0]]),
        "M_B": np.array([[0.0, 1.0], [1.0, 0.0]]),
        "M_C": np.array([[0.0, 1.0], [-1.0, 0.0]]),
    }
    targets = {"M_A": "B2", "M_B": "B3", "M_C": "B4"}
    identities = {}
    images = [basis["B1"]]
    for name, M in ops.items():
        image = np.kron(M, np.eye(2)) @ basis["B1"]
        images.append(image)
        target = basis[targets[name]]
        overlap = float(target @ image)
        identities[f"({name} x 1)|B1> = |{targets[name]}>"] = {
            "residual": float(np.abs(image - target).max()),
            "phase": overlap,
            "residual_up_to_phase": float(np.abs(image - overlap * target).max()),
            "holds": bool(np.abs(image - target).max() <= 1e-15),
        }
    # the same identities under the two other common readings of the matrices
    alternatives = {}
    for label, act in (("rows_as_images", lambda M: np.kron(M.T, np.eye(2))),
                       ("acting_on_second_qubit", lambda M: np.kron(np.eye(2), M))):
        worst = max(float(np.abs(act(M) @ basis["B1"] - basis[targets[n]]).max()) for n, M in ops.items())
        alternatives[label] = {"max_residual": worst, "all_hold": worst <= 1e-15}
    B = np.array(list(basis.values()))
    ortho = float(np.abs(B @ B.T - np.eye(4)).max())
    return {
        "identities": identities,
        "orthonormality_residual": ortho,
        "orthonormal": ortho <= 1e-15,
        "span_rank": int(np.linalg.matrix_rank(np.array(images))),
        "all_identities_hold": all(v["holds"] for v in identities.values()),
        "alternative_conventions": alternatives,
        "convention": "|ab> = |a> (x) |b>; M acts on the first qubit; matrices in the (|0>, |1>) basis with columns as images",
    }
