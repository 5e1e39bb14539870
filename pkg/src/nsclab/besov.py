"""Dyadic frequency bands, three-regime thresholds and hybrid semi-norms.

Band j is the sharp annulus 2^j <= |xi| < 2^(j+1); sharp cutoffs give an
exact partition of unity over the nonzero modes, so band reconstruction and
regime additivity are testable to roundoff.  Smooth cutoffs would only move
constants, and every consumer here is constant-tolerant.

Regimes are split by a pair of dyadic indices (J0, Jeps).  Internally the
regimes are disjoint (low: j <= J0, medium: J0 < j < Jeps, high: j >= Jeps);
the overlapping convention that repeats the endpoint bands in adjacent
regimes is available with overlap=True.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .spectral import Grid, SpectralField, to_physical

__all__ = [
    "Thresholds",
    "ThresholdOrderError",
    "BandProfile",
    "make_thresholds",
    "floor_log2",
    "grid_band_range",
    "band_project",
    "band_lp_norm",
    "regime_band_indices",
    "besov_seminorm",
    "bernstein_check",
    "BERNSTEIN_INEQUALITIES",
]

REGIMES = ("low", "med", "high", "lowmed", "medhigh", "all")


class ThresholdOrderError(ValueError):
    """Raised when the regime split is inverted (J0 > Jeps).

    Requires the relaxation time to be small enough for the chosen (K, k);
    otherwise the low/high frequency regimes swap and the hypocoercive
    stability mechanism is lost.
    """


def floor_log2(x) -> int:
    """floor(log2 x) computed exactly for rationals, round-half-down ties."""
    frac = Fraction(x) if not isinstance(x, float) else Fraction(x).limit_denominator(10**12)
    if frac <= 0:
        raise ValueError(f"floor_log2 needs a positive argument, got {x}")
    j = math.floor(math.log2(frac.numerator) - math.log2(frac.denominator))
    # fix float fringe cases near exact powers of two
    while Fraction(2) ** (j + 1) <= frac:
        j += 1
    while Fraction(2) ** j > frac:
        j -= 1
    return j


@dataclass(frozen=True)
class Thresholds:
    """Regime thresholds (K, k, eps) and the derived dyadic split (J0, Jeps)."""

    K: int
    k: float
    eps: float

    def __post_init__(self):
        if self.K < 2:
            raise ValueError(f"K must be an integer >= 2, got {self.K}")
        if not 0 < self.k <= 1:
            raise ValueError(f"k must satisfy 0 < k <= 1, got {self.k}")
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if self.J0 > self.Jeps:
            raise ThresholdOrderError(
                f"threshold ordering J0 <= Jeps violated: J0={self.J0} > Jeps={self.Jeps} "
                f"(K={self.K}, k={self.k}, eps={self.eps}); the relaxation time is too "
                "large for this regime split"
            )

    @property
    def J0(self) -> int:
        return floor_log2(self.K)

    @property
    def Jeps(self) -> int:
        return -floor_log2(self.eps) + floor_log2(self.k)


def make_thresholds(K: int, k: float, eps: float) -> Thresholds:
    return Thresholds(K=int(K), k=k, eps=eps)


def grid_band_range(grid: Grid) -> range:
    """Dyadic indices j whose annulus intersects the grid's nonzero modes."""
    xi_min = 2.0 * np.pi / grid.L
    xi_max = xi_min * (grid.n // 2) * np.sqrt(grid.d)
    jmin = math.floor(math.log2(xi_min))
    jmax = math.floor(math.log2(xi_max))
    return range(jmin, jmax + 1)


@functools.lru_cache(maxsize=512)
def _band_mask(grid: Grid, j: int) -> np.ndarray:
    k = grid.wavenumber_magnitude()
    mask = (k >= 2.0**j) & (k < 2.0 ** (j + 1))
    mask.flags.writeable = False
    return mask


def band_project(f: SpectralField, j: int) -> SpectralField:
    """Retain exactly the coefficients with 2^j <= |xi| < 2^(j+1)."""
    return SpectralField(f.grid, np.where(_band_mask(f.grid, j), f.coeffs, 0.0))


def _stack_lp_norm(fields, j: int | None, p: float) -> float:
    """L^p norm of the pointwise euclidean magnitude of several components."""
    grid = fields[0].grid
    if p == 2:
        if j is None:
            total = sum(np.sum(np.abs(f.coeffs) ** 2) for f in fields)
        else:
            mask = _band_mask(grid, j)
            total = sum(np.sum(np.abs(f.coeffs[mask]) ** 2) for f in fields)
        return float(np.sqrt(grid.L**grid.d * total))
    if j is not None:
        fields = [band_project(f, j) for f in fields]
    mags = np.sqrt(sum(np.abs(to_physical(f)) ** 2 for f in fields))
    cell = (grid.L / grid.n) ** grid.d
    if np.isinf(p):
        return float(np.max(mags))
    return float((np.sum(mags**p) * cell) ** (1.0 / p))


def band_lp_norm(f, j: int, p: float = 2) -> float:
    """Physical L^p norm of the band-j projection (f may be a tuple)."""
    fields = list(f) if isinstance(f, (tuple, list)) else [f]
    return _stack_lp_norm(fields, j, p)


def regime_band_indices(regime: str, th: Thresholds, bands) -> list:
    """Bands of `bands` that fall in `regime` under the disjoint convention.

    With overlap left to the caller: this is the disjoint split used for the
    additivity identity low + med + high = all.
    """
    if regime not in REGIMES:
        raise ValueError(f"unknown regime {regime!r}; expected one of {REGIMES}")
    j0, je = th.J0, th.Jeps
    sel = {
        "low": lambda j: j <= j0,
        "med": lambda j: j0 < j < je,
        "high": lambda j: j >= je,
        "lowmed": lambda j: j < je,
        "medhigh": lambda j: j > j0,
        "all": lambda j: True,
    }[regime]
    return [j for j in bands if sel(j)]


def _overlap_band_indices(regime: str, th: Thresholds, bands) -> list:
    """Band selection with the overlapping endpoint convention."""
    j0, je = th.J0, th.Jeps
    sel = {
        "low": lambda j: j <= j0,
        "med": lambda j: j0 <= j <= je,
        "high": lambda j: j >= je - 1,
        "lowmed": lambda j: j <= je,
        "medhigh": lambda j: j >= j0,
        "all": lambda j: True,
    }[regime]
    return [j for j in bands if sel(j)]


def besov_seminorm(
    f,
    s: float,
    p: float,
    regime: str,
    th: Thresholds,
    overlap: bool = False,
) -> float:
    """Frequency-restricted homogeneous Besov semi-norm sum_j 2^(js) |f_j|_Lp.

    f may be a single field or a tuple of components (combined pointwise).
    The band range is limited to the grid's populated annuli.
    """
    fields = list(f) if isinstance(f, (tuple, list)) else [f]
    bands = grid_band_range(fields[0].grid)
    pick = _overlap_band_indices if overlap else regime_band_indices
    js = pick(regime, th, bands)
    return float(sum(2.0 ** (j * s) * _stack_lp_norm(fields, j, p) for j in js))


@dataclass(frozen=True)
class BandProfile:
    """Per-band L^p norms of the components of a field tuple."""

    p: float
    s: float
    entries: dict  # band index -> {component label: norm}

    def rows(self):
        """(j, band_center, component, p, band_norm) rows for CSV export."""
        for j in sorted(self.entries):
            center = 1.5 * 2.0**j
            for comp, val in self.entries[j].items():
                yield (j, center, comp, self.p, val)


def band_profile(fields: dict, p: float = 2, s: float = 0.0) -> BandProfile:
    """Band decomposition of named fields: norms per (band, component)."""
    first = next(iter(fields.values()))
    grid = first[0].grid if isinstance(first, (tuple, list)) else first.grid
    entries = {}
    for j in grid_band_range(grid):
        row = {}
        for name, f in fields.items():
            val = band_lp_norm(f, j, p)
            if val > 0.0:
                row[name] = 2.0 ** (j * s) * val
        if row:
            entries[j] = row
    return BandProfile(p=p, s=s, entries=entries)


# The six band-wise embedding inequalities, lhs <= C * factor * rhs:
#   name                regime    lhs order, rhs order, factor(th, s')
BERNSTEIN_INEQUALITIES = (
    ("low-up", "low", lambda th, sp: float(th.K) ** sp, -1),
    ("high-gain", "high", lambda th, sp: (th.k * th.eps) ** sp, +1),
    ("lowmed-up", "lowmed", lambda th, sp: (th.k / th.eps) ** sp, -1),
    ("med-up", "med", lambda th, sp: (th.k / th.eps) ** sp, -1),
    ("med-gain", "med", lambda th, sp: float(th.K) ** (-sp), +1),
    ("medhigh-gain", "medhigh", lambda th, sp: float(th.K) ** (-sp), +1),
)


def bernstein_check(
    f_band: SpectralField,
    s: float,
    s_prime: float,
    p: float,
    th: Thresholds,
    c_bern: float = 4.0,
) -> list:
    """Evaluate the applicable band-wise embedding inequalities.

    f_band must be supported in a single dyadic band.  For each inequality
    whose regime contains that band, returns a dict with the two sides,
    their ratio and a violation flag (ratio > c_bern).  The +1 direction
    trades regularity down (rhs at s + s'), -1 trades it up (rhs at s - s').
    """
    if not s_prime > 0:
        raise ValueError(f"s_prime must be positive, got {s_prime}")
    grid = f_band.grid
    occupied = [j for j in grid_band_range(grid) if band_lp_norm(f_band, j, p) > 0.0]
    if len(occupied) != 1:
        raise ValueError(f"field must occupy exactly one band, found {occupied}")
    (j,) = occupied

    results = []
    for name, regime, factor, sign in BERNSTEIN_INEQUALITIES:
        if j not in _overlap_band_indices(regime, th, [j]):
            continue
        lhs = besov_seminorm(f_band, s, p, regime, th, overlap=True)
        rhs_order = s + sign * s_prime
        rhs = factor(th, s_prime) * besov_seminorm(f_band, rhs_order, p, regime, th, overlap=True)
        ratio = lhs / rhs if rhs > 0 else np.inf
        results.append(
            {
                "name": name,
                "regime": regime,
                "band": j,
                "lhs": lhs,
                "rhs": rhs,
                "ratio": ratio,
                "violated": bool(ratio > c_bern),
            }
        )
    return results
