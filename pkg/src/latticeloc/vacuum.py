"""Gaussian vacuum of the lattice theory and its correlation structure."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import FitError, ValidationError
from .lattice import (
    CouplingMatrix,
    LatticeSpec,
    circulant_kernel,
    coupling_matrix,
    matrix_power,
)

#: R^2 margin needed to prefer one falloff model over the other
CLASSIFICATION_MARGIN = 0.01
#: samples below this fraction of the largest sample are floating-point noise
NOISE_FLOOR = 1e-13


@dataclass(frozen=True, eq=False)
class GaussianState:
    """Bosonic Gaussian state in the canonical ``(q, p)`` variables.

    ``cov_phipi`` is the symmetrised cross block ``<{q_x, p_y}>/2 - <q_x><p_y>``.
    """

    mean_phi: np.ndarray
    mean_pi: np.ndarray
    cov_phiphi: np.ndarray
    cov_pipi: np.ndarray
    cov_phipi: np.ndarray
    spec: LatticeSpec | None = None

    @property
    def n_sites(self) -> int:
        return self.mean_phi.shape[0]

    def covariance(self) -> np.ndarray:
        """Full ``2N x 2N`` covariance ordered ``(q_1..q_N, p_1..p_N)``."""
        return np.block([[self.cov_phiphi, self.cov_phipi],
                         [self.cov_phipi.T, self.cov_pipi]])


def vacuum_from_coupling(K: CouplingMatrix, method: str = "dense") -> GaussianState:
    """Ground state of ``H = p.p/2 + q.K.q/2``: ``<qq> = K^(-1/2)/2``, ``<pp> = K^(1/2)/2``."""
    n = K.size
    qq = 0.5 * matrix_power(K, -0.5, method)
    pp = 0.5 * matrix_power(K, 0.5, method)
    z = np.zeros(n)
    return GaussianState(z, z.copy(), qq, pp, np.zeros((n, n)), K.spec)


def vacuum_state(spec: LatticeSpec, method: str | None = None) -> GaussianState:
    """Vacuum of the lattice theory; periodic lattices default to the Fourier path."""
    if method is None:
        method = "fourier" if spec.boundary == "periodic" else "dense"
    return vacuum_from_coupling(coupling_matrix(spec), method)


def vacuum_correlator_profile(spec: LatticeSpec, axis: int = 0):
    """Vacuum ``<q_0 q_d>`` along one lattice axis without building the full state.

    Returns ``(d, values)`` with ``d = 0..N-1`` in lattice units.  Multiply the
    values by ``spec.spacing**-dimension`` for the physical field correlator.
    """
    kernel = circulant_kernel(spec, lambda w: 0.5 / w)
    index = [0] * spec.dimension
    index[axis] = slice(None)
    return np.arange(spec.sites_per_axis), kernel[tuple(index)]


def _check_sites(state, sites):
    sites = np.asarray(sites, dtype=int)
    if sites.size and (sites.min() < 0 or sites.max() >= state.n_sites):
        raise IndexError(f"site index out of range for {state.n_sites} sites")
    return sites


def connected_correlator(state: GaussianState, pairs) -> np.ndarray:
    """``<q_x q_y> - <q_x><q_y>`` for each ``(x, y)`` in ``pairs``."""
    pairs = _check_sites(state, np.atleast_2d(pairs))
    return state.cov_phiphi[pairs[:, 0], pairs[:, 1]]


def smeared_correlator(state: GaussianState, f, g) -> float:
    """Connected correlator of the smeared fields ``q(f)`` and ``q(g)``: ``f.C.g``."""
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    if f.shape != (state.n_sites,) or g.shape != (state.n_sites,):
        raise ValueError(f"test functions must have length {state.n_sites}")
    return float(f @ state.cov_phiphi @ g)


@dataclass(frozen=True)
class FalloffFit:
    """Result of classifying a correlation tail.

    ``scale`` is the decay length from the exponential model (same units as
    the sample distances).  ``exact`` marks the all-zero sentinel.
    """

    window: tuple[float, float]
    scale: float
    classification: str
    r2_exponential: float
    r2_power: float
    power_exponent: float
    samples: tuple = field(repr=False, default=())
    exact: bool = False

    def to_record(self) -> dict:
        return {
            "scale": self.scale,
            "classification": self.classification,
            "r2_exponential": self.r2_exponential,
            "r2_power": self.r2_power,
            "power_exponent": self.power_exponent,
            "window": list(self.window),
            "exact": self.exact,
        }


def _linear_fit(x, y, offset=0.0):
    """Slope of ``y + offset`` against ``x`` and the R^2 of the implied model for ``y``."""
    coef = np.polyfit(x, y + offset, 1)
    resid = y + offset - np.polyval(coef, x)
    sst = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid ** 2) / sst if sst > 0 else 1.0
    return float(coef[0]), float(r2)


def fit_falloff(distances, values, window=None, prefactor_power: float = 0.0,
                min_points: int = 6) -> FalloffFit:
    """Classify a correlation tail as exponential or power law.

    The exponential model is ``|G| ~ A d**(-prefactor_power) exp(-d/xi)`` and
    the power model ``|G| ~ A d**(-alpha)``; both are least-squares fits of
    ``log|G|`` (log-linear and log-log respectively) and share the same R^2
    target.  An exponential whose decay length is negative or longer than the
    window cannot be resolved by that window and is ruled out, as is a
    non-decaying power law.  The better admissible model wins if it leads by
    `CLASSIFICATION_MARGIN`; otherwise the result is ``"indeterminate"``.

    Parameters
    ----------
    distances, values : array_like
        Samples ``(d, G(d))``.
    window : (float, float), optional
        Inclusive distance range; defaults to the full sample range.
    prefactor_power : float
        Known power-law prefactor of the exponential tail.  The lattice vacuum
        correlator in ``D`` dimensions decays like ``d**(-D/2) exp(-d/xi)``.
    """
    d = np.asarray(distances, dtype=float)
    v = np.asarray(values, dtype=float)
    if window is None:
        window = (float(d.min()), float(d.max()))
    lo, hi = float(window[0]), float(window[1])
    inside = (d >= lo) & (d <= hi)
    d, v = d[inside], v[inside]
    if d.size < min_points:
        raise FitError(f"window {window} holds {d.size} samples, need at least {min_points}")
    samples = tuple(zip(d.tolist(), v.tolist()))
    if not np.any(v):
        return FalloffFit((lo, hi), 0.0, "exact", 1.0, 1.0, np.inf, samples, exact=True)

    mag = np.abs(v)
    keep = mag > NOISE_FLOOR * mag.max()
    signs = np.sign(v[keep])
    d, mag = d[keep], mag[keep]
    if d.size < min_points:
        raise FitError(f"only {d.size} samples above the noise floor, need at least {min_points}")

    y = np.log(mag)
    if d.min() <= 0:
        raise FitError("distances must be positive for the power-law model")
    # the prefactor term is fixed, so both models are scored against log|G|
    slope, r2_exp = _linear_fit(d, y, offset=prefactor_power * np.log(d))
    pslope, r2_pow = _linear_fit(np.log(d), y)

    xi = -1.0 / slope if slope != 0 else np.inf
    alpha = -pslope
    candidates = {}
    if 0 < xi <= hi - lo:
        candidates["exponential"] = r2_exp
    if alpha > 0:
        candidates["power_law"] = r2_pow

    if np.any(signs != signs[0]):
        label = "indeterminate"
    elif len(candidates) == 2:
        gap = candidates["exponential"] - candidates["power_law"]
        if gap >= CLASSIFICATION_MARGIN:
            label = "exponential"
        elif gap <= -CLASSIFICATION_MARGIN:
            label = "power_law"
        else:
            label = "indeterminate"
    elif len(candidates) == 1:
        label = next(iter(candidates))
    else:
        label = "indeterminate"
    return FalloffFit((lo, hi), float(xi), label, r2_exp, r2_pow, float(alpha), samples)


def default_window(spec: LatticeSpec) -> tuple[float, float]:
    """``[5 l, N l / 4]``: clear of cutoff artefacts and of periodic wraparound."""
    return 5 * spec.spacing, spec.extent / 4


def fit_vacuum_falloff(spec: LatticeSpec, window=None, axis: int = 0) -> FalloffFit:
    """Fit the vacuum two-point tail along ``axis``; distances in physical units."""
    d, g = vacuum_correlator_profile(spec, axis)
    half = spec.sites_per_axis // 2
    d, g = d[1:half + 1] * spec.spacing, g[1:half + 1]
    return fit_falloff(d, g, window or default_window(spec), prefactor_power=spec.dimension / 2)


def exact_decay_rate(spec: LatticeSpec) -> float:
    """Asymptotic decay rate of lattice vacuum correlations along an axis, ``2 asinh(m l / 2) / l``."""
    return 2.0 * np.arcsinh(spec.lattice_mass / 2) / spec.spacing


def symplectic_eigenvalues(cov: np.ndarray) -> np.ndarray:
    """Williamson invariants of a ``2n x 2n`` covariance ordered ``(q..., p...)``, ascending.

    Computed as the positive eigenvalues of the Hermitian matrix
    ``i S^(1/2) J S^(1/2)``.
    """
    n = cov.shape[0] // 2
    J = np.block([[np.zeros((n, n)), np.eye(n)], [-np.eye(n), np.zeros((n, n))]])
    w, u = np.linalg.eigh(0.5 * (cov + cov.T))
    root = (u * np.sqrt(np.clip(w, 0, None))) @ u.T
    ev = np.linalg.eigvalsh(1j * root @ J @ root)
    return np.sort(ev[n:])


def restrict(state: GaussianState, sites) -> np.ndarray:
    """Covariance of the reduced state on ``sites``."""
    s = np.asarray(sites, dtype=int)
    ix = np.ix_(s, s)
    return np.block([[state.cov_phiphi[ix], state.cov_phipi[ix]],
                     [state.cov_phipi[ix].T, state.cov_pipi[ix]]])


def entropy_from_symplectic(nu) -> float:
    """Von Neumann entropy (nats) of a Gaussian state with symplectic spectrum ``nu``."""
    nu = np.asarray(nu, dtype=float)
    plus = nu + 0.5
    minus = np.clip(nu - 0.5, 0, None)
    with np.errstate(divide="ignore", invalid="ignore"):
        term = plus * np.log(plus) - np.where(minus > 0, minus * np.log(minus), 0.0)
    return float(np.sum(term))


def region_entropy(state: GaussianState, sites) -> float:
    return entropy_from_symplectic(symplectic_eigenvalues(restrict(state, sites)))


def mutual_information(state: GaussianState, region_a, region_b) -> float:
    """``I(A:B) = S_A + S_B - S_AB`` in nats; tiny negatives are clamped to zero."""
    a = _check_sites(state, region_a)
    b = _check_sites(state, region_b)
    if a.size == 0 or b.size == 0:
        raise ValidationError("regions must be nonempty")
    if np.intersect1d(a, b).size:
        raise ValidationError("regions overlap")
    mi = region_entropy(state, a) + region_entropy(state, b) - region_entropy(state, np.concatenate([a, b]))
    if mi < -1e-9:
        raise ArithmeticError(f"negative mutual information {mi:.3g}: covariance is not physical")
    return max(mi, 0.0)


def uncertainty_floor(state: GaussianState, site: int) -> float:
    """``<q_x^2>_c <p_x^2>_c``, bounded below by 1/4 for any physical state."""
    (x,) = _check_sites(state, [site])
    return float(state.cov_phiphi[x, x] * state.cov_pipi[x, x])
