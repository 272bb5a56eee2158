"""Finite nonnegative measures on the unit circle.

A measure is a finite list of atoms plus a binned density, both living on
a uniform grid of ``bins`` cells over [0, 2pi).  The density array stores
the average density per cell, so the cell mass is density * (2pi/bins).
Angles are kept in [0, 2pi); bin j covers [2pi*j/B, 2pi*(j+1)/B).

Conventions fixed here and relied on everywhere else:

* Fourier coefficients are moments of z^n:  mu_hat(n) = integral of
  e^{i n theta} d mu(theta).  The density part uses the midpoint rule,
  trustworthy only for |n| <= bins/8; larger |n| raises OutOfBandError
  whenever a density part is present (atoms are exact at every n).
* Convolution pushes forward addition of angles mod 2pi.  The
  density x density branch is the circular convolution of the bin
  arrays scaled by the bin width, aligned symmetrically over the two
  bins each product cell straddles; that alignment is exactly the bin
  average of the true convolution of the two step densities, keeps the
  result nonnegative and makes the Fourier error second order in n/bins.
* reflect conjugates the angle variable (theta -> 2pi - theta); bin j
  maps exactly onto bin B-1-j, so reflection is lossless on the grid.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import e as E_CONST
from typing import Optional

import numpy as np

from .jsonio import check_schema
from .seeding import rng_for

TWO_PI = 2.0 * np.pi
ATOM_MERGE_TOL = 1e-12


class BinMismatchError(ValueError):
    """Binary operation on measures with different bin counts."""


class OutOfBandError(ValueError):
    """Fourier order outside the midpoint-rule trust band |n| <= bins/8."""


class NotProbabilityError(ValueError):
    """Operation requires a probability measure (total mass 1 +- 1e-9)."""


class AsymmetricMeasureError(ValueError):
    """Operation requires a reflection-symmetric measure."""


def _canonical_atoms(angles, masses):
    angles = np.atleast_1d(np.asarray(angles, dtype=float)).copy()
    masses = np.atleast_1d(np.asarray(masses, dtype=float)).copy()
    if angles.shape != masses.shape or angles.ndim != 1:
        raise ValueError("atom angles and masses must be 1d arrays of equal length")
    if np.any(~np.isfinite(angles)) or np.any(~np.isfinite(masses)):
        raise ValueError("atom data must be finite")
    if np.any(masses < 0):
        raise ValueError("atom masses must be nonnegative")
    keep = masses > 0.0
    angles, masses = angles[keep], masses[keep]
    if angles.size == 0:
        return np.empty(0), np.empty(0)
    angles = np.mod(angles, TWO_PI)
    # an angle within merge tolerance below 2pi is the point 0
    angles[TWO_PI - angles <= ATOM_MERGE_TOL] = 0.0
    order = np.argsort(angles, kind="stable")
    angles, masses = angles[order], masses[order]
    starts = np.concatenate([[True], np.diff(angles) > ATOM_MERGE_TOL])
    group = np.cumsum(starts) - 1
    merged_a = angles[starts]
    merged_m = np.bincount(group, weights=masses)
    return merged_a, merged_m


@dataclass(frozen=True, eq=False)
class CircleMeasure:
    """Atoms plus binned density on [0, 2pi).  Immutable once built."""

    bins: int
    atom_angles: np.ndarray
    atom_masses: np.ndarray
    density: np.ndarray

    def __post_init__(self):
        if self.bins < 8 or (self.bins & (self.bins - 1)) != 0:
            raise ValueError(f"bins must be a power of two >= 8, got {self.bins}")
        if self.density.shape != (self.bins,):
            raise ValueError("density length must equal bins")
        if np.any(~np.isfinite(self.density)) or np.any(self.density < 0):
            raise ValueError("density values must be finite and nonnegative")

    # -- construction -------------------------------------------------

    @classmethod
    def from_parts(cls, bins: int, atoms=None, density=None) -> "CircleMeasure":
        if atoms is None:
            a, m = np.empty(0), np.empty(0)
        else:
            pairs = list(atoms)
            if pairs:
                a, m = _canonical_atoms([p[0] for p in pairs], [p[1] for p in pairs])
            else:
                a, m = np.empty(0), np.empty(0)
        d = np.zeros(bins) if density is None else np.asarray(density, dtype=float).copy()
        return cls(bins, a, m, d)

    @classmethod
    def dirac(cls, angle: float, mass: float = 1.0, bins: int = 1024) -> "CircleMeasure":
        return cls.from_parts(bins, atoms=[(angle, mass)])

    @classmethod
    def uniform(cls, mass: float = 1.0, bins: int = 1024) -> "CircleMeasure":
        return cls.from_parts(bins, density=np.full(bins, mass / TWO_PI))

    # -- structure ----------------------------------------------------

    @property
    def bin_width(self) -> float:
        return TWO_PI / self.bins

    @property
    def bin_centers(self) -> np.ndarray:
        return (np.arange(self.bins) + 0.5) * self.bin_width

    @property
    def atom_count(self) -> int:
        return int(self.atom_angles.size)

    @property
    def has_density(self) -> bool:
        return bool(np.any(self.density > 0))

    @property
    def atom_mass(self) -> float:
        return float(np.sum(self.atom_masses))

    @property
    def density_mass(self) -> float:
        return float(self.bin_width * np.sum(self.density))

    def atoms(self):
        return list(zip(self.atom_angles.tolist(), self.atom_masses.tolist()))

    def __eq__(self, other) -> bool:
        if not isinstance(other, CircleMeasure):
            return NotImplemented
        # atom angles within the merge tolerance name the same point of the
        # discretized class, so equality must not split them (reflection
        # round-trips drift by ulps); masses and densities stay bit-exact
        return (
            self.bins == other.bins
            and self.atom_angles.shape == other.atom_angles.shape
            and np.allclose(self.atom_angles, other.atom_angles,
                            rtol=0.0, atol=ATOM_MERGE_TOL)
            and np.array_equal(self.atom_masses, other.atom_masses)
            and np.array_equal(self.density, other.density)
        )

    def __repr__(self) -> str:
        return (
            f"CircleMeasure(bins={self.bins}, atoms={self.atom_count}, "
            f"mass={total_mass(self):.6g})"
        )

    # -- serialization ------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "schema": "circle-measure/1",
            "bins": self.bins,
            "atoms": [[float(a), float(m)] for a, m in self.atoms()],
            "density": [float(v) for v in self.density],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "CircleMeasure":
        check_schema(doc, "circle-measure")
        return cls.from_parts(int(doc["bins"]), atoms=doc.get("atoms") or [],
                              density=doc.get("density"))


def _same_bins(mu: CircleMeasure, nu: CircleMeasure) -> None:
    if mu.bins != nu.bins:
        raise BinMismatchError(f"bin counts differ: {mu.bins} vs {nu.bins}")


def total_mass(mu: CircleMeasure) -> float:
    return mu.atom_mass + mu.density_mass


def mix(mu: CircleMeasure, nu: CircleMeasure) -> CircleMeasure:
    """Sum of two measures on the same grid."""
    _same_bins(mu, nu)
    return CircleMeasure.from_parts(
        mu.bins,
        atoms=mu.atoms() + nu.atoms(),
        density=mu.density + nu.density,
    )


def scale(mu: CircleMeasure, factor: float) -> CircleMeasure:
    if factor < 0:
        raise ValueError("scaling factor must be nonnegative")
    return CircleMeasure.from_parts(
        mu.bins,
        atoms=[(a, m * factor) for a, m in mu.atoms()],
        density=mu.density * factor,
    )


def fourier_coefficient(mu: CircleMeasure, n: int) -> complex:
    """Moment of z^n.  Atoms are exact; the density part is midpoint-rule
    and only trusted for |n| <= bins/8."""
    n = int(n)
    if mu.has_density and abs(n) > mu.bins // 8:
        raise OutOfBandError(
            f"|n|={abs(n)} exceeds the density trust band bins/8={mu.bins // 8}"
        )
    out = 0.0 + 0.0j
    if mu.atom_count:
        out += np.sum(mu.atom_masses * np.exp(1j * n * mu.atom_angles))
    if mu.has_density:
        out += mu.bin_width * np.sum(mu.density * np.exp(1j * n * mu.bin_centers))
    return complex(out)


def _rotated_density(density: np.ndarray, angles: np.ndarray, masses: np.ndarray,
                     bins: int) -> np.ndarray:
    """Density of (sum of m_k * delta_{a_k}) convolved with a step density.

    A rotation by a_k shifts the grid by a_k/width cells; the fractional
    part splits each cell's mass linearly over the two straddled target
    cells, which is again the exact bin average of the rotated density.
    """
    width = TWO_PI / bins
    out = np.zeros(bins)
    for a, m in zip(angles, masses):
        shift = a / width
        s0 = int(np.floor(shift))
        frac = shift - s0
        out += m * (1.0 - frac) * np.roll(density, s0)
        if frac > 0.0:
            out += m * frac * np.roll(density, s0 + 1)
    return out


def convolve(mu: CircleMeasure, nu: CircleMeasure) -> CircleMeasure:
    """Convolution on the circle: pushforward of angle addition mod 2pi."""
    _same_bins(mu, nu)
    bins = mu.bins
    width = mu.bin_width
    atoms = []
    if mu.atom_count and nu.atom_count:
        sums = np.mod(mu.atom_angles[:, None] + nu.atom_angles[None, :], TWO_PI).ravel()
        prods = (mu.atom_masses[:, None] * nu.atom_masses[None, :]).ravel()
        atoms = list(zip(sums.tolist(), prods.tolist()))
    density = np.zeros(bins)
    if mu.has_density and nu.has_density:
        raw = np.fft.ifft(np.fft.fft(mu.density) * np.fft.fft(nu.density)).real
        # each cell-pair product is a width-2 hat straddling two target
        # cells; averaging the hat over each cell splits it evenly
        density += (width / 2.0) * (raw + np.roll(raw, 1))
    if mu.atom_count and nu.has_density:
        density += _rotated_density(nu.density, mu.atom_angles, mu.atom_masses, bins)
    if nu.atom_count and mu.has_density:
        density += _rotated_density(mu.density, nu.atom_angles, nu.atom_masses, bins)
    np.maximum(density, 0.0, out=density)  # guard FFT round-off
    return CircleMeasure.from_parts(bins, atoms=atoms, density=density)


def convolution_power(rho: CircleMeasure, n: int) -> CircleMeasure:
    """n-fold convolution; the zeroth power is the unit atom at angle 0."""
    if n < 0:
        raise ValueError("convolution power requires n >= 0")
    if n == 0:
        return CircleMeasure.dirac(0.0, 1.0, bins=rho.bins)
    out = rho
    for _ in range(n - 1):
        out = convolve(out, rho)
    return out


def _factorial_tail(order: int, terms: int = 60) -> float:
    """sum_{n > order} 1/n! to double precision."""
    tail = 0.0
    term = 1.0
    for n in range(1, order + 1):
        term /= n
    for n in range(order + 1, order + terms + 1):
        term /= n
        tail += term
    return tail


def truncation_order(tail_tol: float) -> int:
    """Smallest K with sum_{n > K} 1/n! < tail_tol."""
    if not 0 < tail_tol < 1:
        raise ValueError("tail_tol must be in (0, 1)")
    for order in range(0, 200):
        if _factorial_tail(order) < tail_tol:
            return order
    raise ValueError("tail tolerance too small to honor in double precision")


def _require_probability(rho: CircleMeasure) -> None:
    mass = total_mass(rho)
    if abs(mass - 1.0) > 1e-9:
        raise NotProbabilityError(f"total mass {mass!r} is not 1 within 1e-9")


def exp_measure(rho: CircleMeasure, tail_tol: float = 1e-12) -> CircleMeasure:
    """Exponential of a probability measure in the convolution algebra:
    the unit atom at 0 plus sum over n >= 1 of rho^{*n} / n!, truncated
    once the remaining factorial tail drops below tail_tol."""
    _require_probability(rho)
    order = truncation_order(tail_tol)
    out = CircleMeasure.dirac(0.0, 1.0, bins=rho.bins)
    power = None
    fact = 1.0
    for n in range(1, order + 1):
        power = rho if power is None else convolve(power, rho)
        fact *= n
        out = mix(out, scale(power, 1.0 / fact))
    return out


def normalized_chaos(rho: CircleMeasure, tail_tol: float = 1e-12) -> CircleMeasure:
    """The exponential with its unit atom at 0 removed, renormalized by
    1/(e - 1) to a probability measure.  Only the seed term's atom is
    removed; mass that positive powers of rho place at angle 0 stays."""
    _require_probability(rho)
    order = truncation_order(tail_tol)
    parts = None
    power = None
    fact = 1.0
    for n in range(1, order + 1):
        power = rho if power is None else convolve(power, rho)
        fact *= n
        term = scale(power, 1.0 / fact)
        parts = term if parts is None else mix(parts, term)
    return scale(parts, 1.0 / (E_CONST - 1.0))


def reflect(sigma: CircleMeasure) -> CircleMeasure:
    """Pushforward of theta -> 2pi - theta (complex conjugation of z).
    Exact on the grid: bin j maps onto bin B-1-j."""
    return CircleMeasure.from_parts(
        sigma.bins,
        atoms=[(np.mod(TWO_PI - a, TWO_PI), m) for a, m in sigma.atoms()],
        density=sigma.density[::-1],
    )


def symmetrize(sigma: CircleMeasure) -> CircleMeasure:
    """Average of the measure with its reflection."""
    return scale(mix(sigma, reflect(sigma)), 0.5)


def symmetry_defect(sigma: CircleMeasure, n_max: int = 8) -> float:
    """Largest |imaginary part| of the Fourier coefficients up to n_max;
    zero exactly for reflection-symmetric measures."""
    band = sigma.bins // 8 if sigma.has_density else n_max
    top = min(n_max, band)
    return max(abs(fourier_coefficient(sigma, n).imag) for n in range(1, top + 1))


def split_upper_lower(sigma: CircleMeasure, sym_tol: float = 1e-9):
    """Doubled restrictions of a symmetric measure to the upper half
    (0, pi) and lower half (pi, 2pi) of the circle.  Atoms sitting at 0
    or pi split half and half, so each part keeps the full boundary mass
    after doubling, and averaging the parts returns the input."""
    if symmetry_defect(sigma) > sym_tol:
        raise AsymmetricMeasureError(
            f"measure is not reflection-symmetric within {sym_tol}"
        )
    bins = sigma.bins
    half = bins // 2
    up_atoms, low_atoms = [], []
    for a, m in sigma.atoms():
        at_zero = a <= ATOM_MERGE_TOL
        at_pi = abs(a - np.pi) <= ATOM_MERGE_TOL
        if at_zero or at_pi:
            up_atoms.append((a, m))
            low_atoms.append((a, m))
        elif a < np.pi:
            up_atoms.append((a, 2.0 * m))
        else:
            low_atoms.append((a, 2.0 * m))
    up_density = np.zeros(bins)
    low_density = np.zeros(bins)
    up_density[:half] = 2.0 * sigma.density[:half]
    low_density[half:] = 2.0 * sigma.density[half:]
    upper = CircleMeasure.from_parts(bins, atoms=up_atoms, density=up_density)
    lower = CircleMeasure.from_parts(bins, atoms=low_atoms, density=low_density)
    return upper, lower


# -- decay and rigidity probes ---------------------------------------

@dataclass(frozen=True)
class RajchmanReport:
    tail_sup: float
    passed: bool
    window_lo: int
    window_hi: int
    epsilon: float

    def to_dict(self) -> dict:
        return {
            "probe": "rajchman",
            "tail_sup": self.tail_sup,
            "passed": self.passed,
            "window": [self.window_lo, self.window_hi],
            "epsilon": self.epsilon,
        }


@dataclass(frozen=True)
class DirichletReport:
    best_n: int
    best_value: float
    passed: bool
    window_lo: int
    window_hi: int
    epsilon: float

    def to_dict(self) -> dict:
        return {
            "probe": "dirichlet",
            "best_n": self.best_n,
            "best_value": self.best_value,
            "passed": self.passed,
            "window": [self.window_lo, self.window_hi],
            "epsilon": self.epsilon,
        }


@dataclass(frozen=True)
class MildMixingReport:
    worst_limsup: float
    passed: bool
    witness: str
    family_size: int
    window_lo: int
    window_hi: int
    delta: float
    seed: int

    def to_dict(self) -> dict:
        return {
            "probe": "mild-mixing",
            "worst_limsup": self.worst_limsup,
            "passed": self.passed,
            "witness": self.witness,
            "family_size": self.family_size,
            "window": [self.window_lo, self.window_hi],
            "delta": self.delta,
            "seed": self.seed,
        }


def _coefficient_window(rho: CircleMeasure, n_max: int):
    if n_max < 2:
        raise ValueError("n_max must be at least 2")
    if rho.has_density and n_max > rho.bins // 8:
        raise OutOfBandError(
            f"n_max={n_max} exceeds the density trust band bins/8={rho.bins // 8}"
        )
    lo = (n_max + 1) // 2
    return lo, n_max


def rajchman_probe(rho: CircleMeasure, n_max: int = 64,
                   epsilon: float = 0.1) -> RajchmanReport:
    """Coefficient-decay proxy: sup of |rho_hat(n)| over the upper half
    of the scan window [1, n_max]; passes when the sup stays below
    epsilon.  A one-sided finite-window stand-in for rho_hat(n) -> 0."""
    _require_probability(rho)
    lo, hi = _coefficient_window(rho, n_max)
    tail_sup = max(abs(fourier_coefficient(rho, n)) for n in range(lo, hi + 1))
    return RajchmanReport(tail_sup=float(tail_sup), passed=bool(tail_sup < epsilon),
                          window_lo=lo, window_hi=hi, epsilon=epsilon)


def dirichlet_probe(rho: CircleMeasure, n_max: int = 64,
                    epsilon: float = 0.1) -> DirichletReport:
    """Rigidity proxy: largest coefficient modulus attained over the upper
    half of the window, with its witnessing order (largest order wins a
    tie).  Passes when that value exceeds 1 - epsilon, evidence that the
    coefficients return to modulus one along a subsequence."""
    _require_probability(rho)
    lo, hi = _coefficient_window(rho, n_max)
    values = {n: abs(fourier_coefficient(rho, n)) for n in range(lo, hi + 1)}
    best_value = max(values.values())
    best_n = max(n for n, v in values.items() if v >= best_value - 1e-12)
    return DirichletReport(best_n=int(best_n), best_value=float(best_value),
                           passed=bool(best_value > 1.0 - epsilon),
                           window_lo=lo, window_hi=hi, epsilon=epsilon)


def _restrict_to_bins(rho: CircleMeasure, mask: np.ndarray) -> Optional[CircleMeasure]:
    """Restriction of rho to a union of grid cells, or None if negligible."""
    atoms = []
    if rho.atom_count:
        cells = np.minimum((rho.atom_angles / rho.bin_width).astype(int), rho.bins - 1)
        for a, m, c in zip(rho.atom_angles, rho.atom_masses, cells):
            if mask[c]:
                atoms.append((a, m))
    density = np.where(mask, rho.density, 0.0)
    mass = sum(m for _, m in atoms) + rho.bin_width * density.sum()
    if mass <= 1e-12:
        return None
    return scale(CircleMeasure.from_parts(rho.bins, atoms=atoms, density=density),
                 1.0 / mass)


def mild_mixing_probe(rho: CircleMeasure, family_size: int = 16, n_max: int = 64,
                      delta: float = 0.1, seed: int = 0) -> MildMixingReport:
    """Worst coefficient-return over a family of normalized restrictions
    of rho: one per atom (an atom's restriction is a point mass, whose
    coefficients sit on the unit circle at every order, so atoms force a
    failure) and family_size seeded restrictions to random unions of
    grid cells.  Passes when every member keeps its windowed sup of
    |theta_hat(n)| below 1 - delta."""
    _require_probability(rho)
    lo, hi = _coefficient_window(rho, n_max)
    family = []
    for a, m in rho.atoms():
        family.append((f"atom@{a:.6f}", CircleMeasure.dirac(a, 1.0, bins=rho.bins)))
    rng = rng_for(seed, "mild-mixing-unions")
    for i in range(family_size):
        mask = rng.random(rho.bins) < 0.5
        theta = _restrict_to_bins(rho, mask)
        if theta is not None:
            family.append((f"union#{i}", theta))
    if not family:
        raise ValueError("empty probe family: measure has no atoms and no density")
    worst = -1.0
    witness = ""
    for label, theta in family:
        sup = max(abs(fourier_coefficient(theta, n)) for n in range(lo, hi + 1))
        if sup > worst:
            worst, witness = sup, label
    return MildMixingReport(worst_limsup=float(worst),
                            passed=bool(worst < 1.0 - delta),
                            witness=witness, family_size=len(family),
                            window_lo=lo, window_hi=hi, delta=delta, seed=seed)
