"""Discretised free scalar field: lattice geometry, coupling matrix and spectra.

The quadratic Hamiltonian on a lattice of spacing ``l`` is

    H = 1/2 sum_x p_x^2 + 1/2 sum_{x,y} q_x K_{xy} q_y,

with ``K = m^2 - (lattice Laplacian)``.  The canonical pair ``(q_x, p_x)``
absorbs the volume element ``l**d`` so that ``[q_x, p_y] = i delta_xy``; the
field itself is ``phi_x = q_x / l**(d/2)``.  ``K`` carries physical units
(inverse length squared); everything is assembled in lattice units
(``l = 1``, mass ``m*l``) and rescaled by ``1/l**2`` on the way out.
"""

from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from .errors import NotPositiveDefiniteError, ValidationError

BOUNDARIES = ("periodic", "dirichlet")
STENCILS = ("forward", "central")

#: relative tolerance used for every spectral identity in the package
EIGEN_RTOL = 1e-10


@dataclass(frozen=True)
class LatticeSpec:
    """Geometry and parameters of a cutoff free scalar theory.

    Parameters
    ----------
    dimension : int
        Number of spatial dimensions (1 to 3).
    sites_per_axis : int
        Sites along each axis; the lattice has ``sites_per_axis**dimension`` sites.
    spacing : float
        Cutoff length ``l``.
    mass : float
        Renormalised mass ``m`` (inverse length).
    boundary : {"periodic", "dirichlet"}
    stencil : {"forward", "central"}
        Difference-operator convention.  Both give the same symmetric
        second-difference matrix; the choice is carried as metadata.
    """

    dimension: int
    sites_per_axis: int
    spacing: float
    mass: float
    boundary: str = "periodic"
    stencil: str = "forward"

    def __post_init__(self):
        if int(self.dimension) != self.dimension or not 1 <= self.dimension <= 3:
            raise ValidationError(f"dimension must be 1, 2 or 3, got {self.dimension!r}")
        if int(self.sites_per_axis) != self.sites_per_axis or self.sites_per_axis < 1:
            raise ValidationError(f"sites_per_axis must be a positive integer, got {self.sites_per_axis!r}")
        if not np.isfinite(self.spacing) or self.spacing <= 0:
            raise ValidationError(f"spacing must be positive, got {self.spacing!r}")
        if not np.isfinite(self.mass) or self.mass < 0:
            raise ValidationError(f"mass must be positive, got {self.mass!r}")
        if self.boundary not in BOUNDARIES:
            raise ValidationError(f"boundary must be one of {BOUNDARIES}, got {self.boundary!r}")
        if self.stencil not in STENCILS:
            raise ValidationError(f"stencil must be one of {STENCILS}, got {self.stencil!r}")
        if self.mass == 0:
            if self.boundary == "periodic":
                raise ValidationError("zero mode: massless periodic lattice rejected")
            raise ValidationError("mass must be positive")
        if self.sites_per_axis ** self.dimension > sys.maxsize:
            raise ValidationError("total site count exceeds the addressable index range")
        object.__setattr__(self, "dimension", int(self.dimension))
        object.__setattr__(self, "sites_per_axis", int(self.sites_per_axis))
        object.__setattr__(self, "spacing", float(self.spacing))
        object.__setattr__(self, "mass", float(self.mass))

    @property
    def n_sites(self) -> int:
        return self.sites_per_axis ** self.dimension

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.sites_per_axis,) * self.dimension

    @property
    def extent(self) -> float:
        """Physical length of one axis, ``N*l``."""
        return self.sites_per_axis * self.spacing

    @property
    def lattice_mass(self) -> float:
        """Dimensionless mass ``m*l``."""
        return self.mass * self.spacing

    def replace(self, **changes) -> "LatticeSpec":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, config: Mapping[str, Any]) -> "LatticeSpec":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(config) - known
        if unknown:
            raise ValidationError(f"unknown lattice key(s): {', '.join(sorted(unknown))}")
        return cls(**config)

    def lattice_units(self) -> dict[str, float]:
        """Dimensionless description: spacing 1, mass ``m*l``, plus the length unit."""
        return {"spacing": 1.0, "mass": self.lattice_mass, "length_unit": self.spacing}

    @classmethod
    def from_lattice_units(cls, dimension, sites_per_axis, lattice_mass, length_unit,
                           boundary="periodic", stencil="forward") -> "LatticeSpec":
        return cls(dimension, sites_per_axis, length_unit, lattice_mass / length_unit,
                   boundary, stencil)


def build_lattice(config: Mapping[str, Any] | None = None, **kwargs) -> LatticeSpec:
    """Validate a flat key-value lattice config and return a `LatticeSpec`."""
    merged = dict(config or {})
    merged.update(kwargs)
    return LatticeSpec.from_dict(merged)


@dataclass(frozen=True, eq=False)
class CouplingMatrix:
    """Real symmetric ``K = m^2 - Laplacian`` in physical units (1/length^2)."""

    entries: np.ndarray
    spec: LatticeSpec | None = None
    metadata: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return self.entries.shape[0]


def _bonds(spec: LatticeSpec):
    """Nearest-neighbour bonds ``(i, j)`` as flat index arrays, one entry per bond."""
    idx = np.arange(spec.n_sites).reshape(spec.shape)
    pairs = []
    for axis in range(spec.dimension):
        if spec.boundary == "periodic":
            nxt = np.roll(idx, -1, axis=axis)
            a, b = idx.ravel(), nxt.ravel()
        else:
            a = np.take(idx, np.arange(spec.sites_per_axis - 1), axis=axis).ravel()
            b = np.take(idx, np.arange(1, spec.sites_per_axis), axis=axis).ravel()
        pairs.append((a, b))
    return pairs


def coupling_matrix(spec: LatticeSpec) -> CouplingMatrix:
    """Assemble ``K`` from the nearest-neighbour quadratic form.

    Each bond contributes ``((q_a - q_b)/l)^2`` to the potential.  On a
    periodic axis with fewer than three sites the two neighbours coincide and
    the bond weights add (N=1 decouples entirely), which keeps the spectrum on
    the lattice dispersion relation.
    """
    n = spec.n_sites
    k = np.zeros((n, n))
    for a, b in _bonds(spec):
        np.add.at(k, (a, a), 1.0)
        np.add.at(k, (b, b), 1.0)
        np.add.at(k, (a, b), -1.0)
        np.add.at(k, (b, a), -1.0)
    if spec.boundary == "dirichlet":
        # fixed zero field beyond the edges: every site sees 2*d bonds on the diagonal
        k[np.diag_indices(n)] = 2.0 * spec.dimension
    k[np.diag_indices(n)] += spec.lattice_mass ** 2
    entries = k / spec.spacing ** 2
    meta = {
        "stencil": spec.stencil,
        "convention": "symmetric second difference (forward and central stencils assemble the same quadratic form)",
        "units": "1/length^2",
    }
    return CouplingMatrix(entries, spec, meta)


def wavenumbers(spec: LatticeSpec) -> np.ndarray:
    """Lattice momenta ``k = 2 pi n / (N l)``, shape ``(n_sites, dimension)``, row-major order."""
    k1 = 2 * np.pi * np.arange(spec.sites_per_axis) / (spec.sites_per_axis * spec.spacing)
    grids = np.meshgrid(*([k1] * spec.dimension), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def dispersion(spec: LatticeSpec, k=None) -> np.ndarray:
    """``omega_k^2 = m^2 + sum_axis (4/l^2) sin^2(k l / 2)`` over the periodic momentum grid."""
    if k is None:
        k = wavenumbers(spec)
    k = np.atleast_2d(k)
    l = spec.spacing
    return spec.mass ** 2 + (4.0 / l ** 2) * np.sum(np.sin(k * l / 2) ** 2, axis=1)


@dataclass(frozen=True, eq=False)
class ModeBasis:
    """Normal modes of ``K``: ``K = modes @ diag(frequencies**2) @ modes^H``.

    ``modes`` is real orthogonal on the dense path and complex unitary (plane
    waves) on the Fourier path.  ``wavenumbers`` is only set on the Fourier path.
    """

    frequencies: np.ndarray
    modes: np.ndarray
    wavenumbers: np.ndarray | None = None
    method: str = "dense"

    def reconstruct(self) -> np.ndarray:
        u = self.modes
        return ((u * self.frequencies ** 2) @ u.conj().T).real


def _check_positive(eigenvalues):
    lo = np.min(eigenvalues)
    if not lo > 0:
        raise NotPositiveDefiniteError(lo)


def _dft_modes(spec: LatticeSpec) -> np.ndarray:
    n = spec.sites_per_axis
    f1 = np.exp(2j * np.pi * np.outer(np.arange(n), np.arange(n)) / n) / np.sqrt(n)
    out = np.ones((1, 1), dtype=complex)
    for _ in range(spec.dimension):
        out = np.kron(out, f1)
    return out


def _fourier_ok(K: CouplingMatrix, method: str) -> bool:
    if method == "dense":
        return False
    periodic = K.spec is not None and K.spec.boundary == "periodic"
    if method == "fourier" and not periodic:
        raise ValueError("the Fourier path needs a periodic lattice spec")
    return periodic


def mode_decomposition(K: CouplingMatrix, method: str = "dense") -> ModeBasis:
    """Diagonalise ``K``.

    ``method="dense"`` uses a symmetric eigensolver and works for any matrix;
    ``method="fourier"`` uses the plane-wave basis of a periodic lattice and
    the dispersion relation (frequencies then come in momentum-grid order).
    """
    if _fourier_ok(K, method):
        spec = K.spec
        w2 = dispersion(spec)
        _check_positive(w2)
        return ModeBasis(np.sqrt(w2), _dft_modes(spec), wavenumbers(spec), "fourier")
    w2, u = np.linalg.eigh(K.entries)
    _check_positive(w2)
    return ModeBasis(np.sqrt(w2), u, None, "dense")


def circulant_kernel(spec: LatticeSpec, func) -> np.ndarray:
    """First row of ``func(Omega)`` for a periodic lattice, as an array of shape ``spec.shape``.

    ``func`` maps frequencies to values; entry ``[d]`` is the matrix element
    between sites separated by the offset ``d`` (taken mod N on each axis).
    """
    if spec.boundary != "periodic":
        raise ValueError("circulant kernels need a periodic lattice")
    w2 = dispersion(spec).reshape(spec.shape)
    _check_positive(w2)
    return np.fft.ifftn(func(np.sqrt(w2))).real


def circulant_to_dense(spec: LatticeSpec, kernel: np.ndarray) -> np.ndarray:
    """Expand a translation-invariant kernel into the full site-by-site matrix."""
    coords = np.indices(spec.shape).reshape(spec.dimension, -1)
    offsets = (coords[:, None, :] - coords[:, :, None]) % spec.sites_per_axis
    return kernel[tuple(offsets)]


def matrix_power(K: CouplingMatrix, power: float, method: str = "dense") -> np.ndarray:
    """``K**power`` for symmetric positive definite ``K`` via its spectrum."""
    if _fourier_ok(K, method):
        spec = K.spec
        kernel = circulant_kernel(spec, lambda w: w ** (2 * power))
        return circulant_to_dense(spec, kernel)
    w2, u = np.linalg.eigh(K.entries)
    _check_positive(w2)
    out = (u * w2 ** power) @ u.T
    return 0.5 * (out + out.T)


def matrix_power_half(K: CouplingMatrix, sign: float = 0.5, method: str = "dense") -> np.ndarray:
    """``K**(+1/2)`` or ``K**(-1/2)``; ``sign`` is ``0.5`` or ``-0.5`` (``+1``/``-1`` accepted)."""
    if sign in (1, -1):
        sign = 0.5 * sign
    if sign not in (0.5, -0.5):
        raise ValueError(f"sign must be +1/2 or -1/2, got {sign!r}")
    return matrix_power(K, sign, method)


def matrix_to_csv(path, matrix) -> None:
    """Row-major CSV dump of a matrix for debugging."""
    np.savetxt(path, np.asarray(matrix), delimiter=",", fmt="%.17g")
