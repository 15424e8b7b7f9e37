"""Free spreading of a nonrelativistic Gaussian wavepacket.

A packet ``psi ~ exp(-r^2 / 2 L^2)`` of mass ``m`` has probability half-width

    D_t = sqrt((L^4 + (hbar t / 2 m)^2) / L^2)

after time ``t`` (``hbar = 1`` in natural units), which stays close to ``L``
while ``t << 2 m L^2 / hbar``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import constants

#: reduced Planck constant in J s, CODATA value rounded to ten significant digits
HBAR = 1.054571817e-34
SECONDS_PER_YEAR = 365.25 * 86400.0
#: reported timescale quoted alongside the computed SI horizon for 1 kg at 1e-11 m
QUOTED_HORIZON_YEARS = 1e6
#: exponent quoted for the 1 micrometre tail ratio: 10**(-10**10)
QUOTED_TAIL_LOG10 = -1e10
# raw ratios smaller than this underflow and are reported only as log10
RAW_RATIO_FLOOR = 1e-300


@dataclass(frozen=True)
class WavepacketSpec:
    """Initial half-width ``L``, mass ``m`` and elapsed time ``t``.

    ``units="natural"`` means ``hbar = 1``; ``units="SI"`` means metres,
    kilograms and seconds.
    """

    halfwidth: float
    mass: float
    time: float = 0.0
    units: str = "natural"

    def __post_init__(self):
        if not self.halfwidth > 0:
            raise ValueError("halfwidth must be positive")
        if not self.mass > 0:
            raise ValueError("mass must be positive")
        if self.units not in ("natural", "SI"):
            raise ValueError(f"units must be 'natural' or 'SI', got {self.units!r}")

    @property
    def hbar(self) -> float:
        return HBAR if self.units == "SI" else 1.0

    def to_natural(self, length_unit: float = 1.0) -> "WavepacketSpec":
        """Express an SI packet with ``hbar = c = 1`` and lengths in ``length_unit`` metres."""
        if self.units == "natural":
            return self
        c = constants.c
        mass = self.mass * c / HBAR * length_unit  # inverse length, in units of 1/length_unit
        return WavepacketSpec(self.halfwidth / length_unit, mass, c * self.time / length_unit, "natural")

    def to_si(self, length_unit: float = 1.0) -> "WavepacketSpec":
        if self.units == "SI":
            return self
        c = constants.c
        mass = self.mass * HBAR / (c * length_unit)
        return WavepacketSpec(self.halfwidth * length_unit, mass, self.time * length_unit / c, "SI")


def spread_halfwidth(spec: WavepacketSpec) -> float:
    """Half-width ``D_t`` of ``|psi(r, t)|^2 ~ exp(-r^2 / D_t^2)``."""
    L = spec.halfwidth
    return math.sqrt((L ** 4 + (spec.hbar * spec.time / (2 * spec.mass)) ** 2) / L ** 2)


def constancy_horizon(spec: WavepacketSpec) -> float:
    """Time ``2 m L^2 / hbar`` below which the half-width is essentially constant."""
    return 2 * spec.mass * spec.halfwidth ** 2 / spec.hbar


def tail_ratio(L: float, r: float, r_units: str | None = None, L_units: str | None = None) -> dict:
    """``|psi(r)|^2 / |psi(0)|^2 = exp(-r^2 / L^2)`` reported as ``log10`` to survive underflow.

    ``raw`` is included only when the ratio is at least 1e-300.  Passing
    differing unit labels sets ``unit_mismatch``.
    """
    if not L > 0:
        raise ValueError("L must be positive")
    if r < 0:
        raise ValueError("r must be nonnegative")
    log10 = -(r / L) ** 2 / math.log(10)
    out = {"log10_ratio": log10, "raw": None,
           "unit_mismatch": r_units is not None and L_units is not None and r_units != L_units}
    if log10 >= math.log10(RAW_RATIO_FLOOR):
        out["raw"] = 10.0 ** log10
    return out


def spreading_record(spec: WavepacketSpec, r: float | None = None) -> dict:
    """Single JSON-ready record: inputs, ``D_t``, ``t*`` and optionally the tail ratio."""
    horizon = constancy_horizon(spec)
    rec = {
        "halfwidth": spec.halfwidth,
        "mass": spec.mass,
        "time": spec.time,
        "units": spec.units,
        "spread_halfwidth": spread_halfwidth(spec),
        "constancy_horizon": horizon,
    }
    if spec.units == "SI":
        years = horizon / SECONDS_PER_YEAR
        rec["constancy_horizon_years"] = years
        rec["quoted_horizon_years"] = QUOTED_HORIZON_YEARS
        rec["horizon_discrepancy_factor"] = QUOTED_HORIZON_YEARS / years
    if r is not None:
        tail = tail_ratio(spec.halfwidth, r)
        rec["tail_r"] = r
        rec["log10_tail_ratio"] = tail["log10_ratio"]
        rec["quoted_log10_tail_ratio"] = QUOTED_TAIL_LOG10
        if tail["log10_ratio"] < 0:
            rec["tail_exponent_orders"] = math.log10(-tail["log10_ratio"])
    return rec
