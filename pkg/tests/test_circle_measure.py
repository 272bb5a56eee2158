"""Measures on the circle: construction, convolution, exponential, probes.

Expected values come from independent oracles: direct sums over atoms,
closed-form coefficients of simple densities, and a factorial tail bound
for the exponential truncation order.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import brute_atomic_coefficient, coeff_row, measures_close
from hyperlab import (
    AsymmetricMeasureError,
    BinMismatchError,
    CircleMeasure,
    NotProbabilityError,
    OutOfBandError,
    convolution_power,
    convolve,
    dirichlet_probe,
    fourier_coefficient,
    exp_measure,
    mild_mixing_probe,
    mix,
    normalized_chaos,
    rajchman_probe,
    reflect,
    scale,
    split_upper_lower,
    symmetrize,
    symmetry_defect,
    total_mass,
    truncation_order,
)
from hyperlab.corpora import measure_pair, probability_measure

TWO_PI = 2.0 * np.pi

# -- hypothesis strategies (small bins keep the runs quick) -----------

angles = st.floats(min_value=0.0, max_value=TWO_PI - 1e-9,
                   allow_nan=False, allow_infinity=False)
masses = st.floats(min_value=0.05, max_value=2.0,
                   allow_nan=False, allow_infinity=False)


@st.composite
def atomic_measures(draw, bins=64, max_atoms=4):
    count = draw(st.integers(min_value=1, max_value=max_atoms))
    ats = [(draw(angles), draw(masses)) for _ in range(count)]
    return CircleMeasure.from_parts(bins, atoms=ats)


@st.composite
def grid_measures(draw, bins=64):
    seedval = draw(st.integers(min_value=0, max_value=2**20))
    rng = np.random.default_rng(seedval)
    density = rng.random(bins) + 0.1
    factor = draw(masses)
    return CircleMeasure.from_parts(bins, density=density * factor)


@st.composite
def mixed_measures(draw, bins=64):
    kind = draw(st.integers(min_value=0, max_value=2))
    if kind == 0:
        return draw(atomic_measures(bins=bins))
    if kind == 1:
        return draw(grid_measures(bins=bins))
    return mix(draw(atomic_measures(bins=bins)), draw(grid_measures(bins=bins)))


# -- construction and canonical atoms --------------------------------

def test_bins_must_be_power_of_two():
    with pytest.raises(ValueError):
        CircleMeasure.from_parts(48)
    with pytest.raises(ValueError):
        CircleMeasure.from_parts(4)


def test_atoms_sorted_and_merged():
    mu = CircleMeasure.from_parts(
        64, atoms=[(3.0, 0.5), (1.0, 0.25), (1.0 + 1e-13, 0.25)]
    )
    ats = mu.atoms()
    assert len(ats) == 2
    assert ats[0][0] == pytest.approx(1.0)
    assert ats[0][1] == pytest.approx(0.5)
    assert ats[1][0] == pytest.approx(3.0)


def test_atom_near_two_pi_snaps_to_zero():
    mu = CircleMeasure.from_parts(64, atoms=[(TWO_PI - 1e-14, 1.0)])
    assert mu.atoms() == [(0.0, 1.0)]


def test_negative_mass_rejected():
    with pytest.raises(ValueError):
        CircleMeasure.from_parts(64, atoms=[(1.0, -0.5)])
    with pytest.raises(ValueError):
        CircleMeasure.from_parts(64, density=-np.ones(64))


def test_density_length_must_match_bins():
    with pytest.raises(ValueError):
        CircleMeasure.from_parts(64, density=np.ones(32))


def test_total_mass_splits():
    mu = CircleMeasure.from_parts(
        64, atoms=[(1.0, 0.25)], density=np.full(64, 1.0 / TWO_PI)
    )
    assert mu.atom_mass == pytest.approx(0.25)
    assert mu.density_mass == pytest.approx(1.0)
    assert total_mass(mu) == pytest.approx(1.25)


def test_serialization_round_trip():
    mu = CircleMeasure.from_parts(
        32, atoms=[(0.5, 0.3)], density=np.linspace(0.1, 0.4, 32)
    )
    again = CircleMeasure.from_dict(mu.to_dict())
    assert again == mu
    assert again.to_dict()["schema"].startswith("circle-measure/")


# -- Fourier coefficients ---------------------------------------------

def test_coefficient_of_dirac_is_exponential():
    # oracle: the transform of a point mass at a is m * exp(i n a)
    mu = CircleMeasure.dirac(2.0, 0.7, bins=64)
    for n in (-3, 0, 1, 5):
        assert fourier_coefficient(mu, n) == pytest.approx(0.7 * np.exp(1j * n * 2.0))


def test_coefficient_zero_is_total_mass():
    mu = CircleMeasure.from_parts(
        64, atoms=[(1.0, 0.5)], density=np.full(64, 2.0 / TWO_PI)
    )
    assert fourier_coefficient(mu, 0) == pytest.approx(total_mass(mu))


def test_uniform_coefficients_vanish():
    mu = CircleMeasure.uniform(bins=64)
    for n in range(1, 9):
        assert abs(fourier_coefficient(mu, n)) < 1e-12


def test_grid_coefficient_matches_midpoint_oracle():
    bins = 256
    rng = np.random.default_rng(5)
    density = rng.random(bins) + 0.2
    mu = CircleMeasure.from_parts(bins, density=density)
    w = TWO_PI / bins
    centers = (np.arange(bins) + 0.5) * w
    for n in (1, 7, 31):
        oracle = np.sum(density * w * np.exp(1j * n * centers))
        assert fourier_coefficient(mu, n) == pytest.approx(oracle, abs=1e-12)


def test_cosine_density_coefficient_closed_form():
    # density (1 + cos(theta)) / (2 pi) sampled at bin midpoints has
    # coefficient exactly 1/2 at n = 1: the midpoint rule is exact for
    # trigonometric polynomials of degree below bins / 2
    bins = 1024
    centers = (np.arange(bins) + 0.5) * TWO_PI / bins
    mu = CircleMeasure.from_parts(bins, density=(1 + np.cos(centers)) / TWO_PI)
    assert fourier_coefficient(mu, 1) == pytest.approx(0.5, abs=1e-12)
    assert fourier_coefficient(mu, -1) == pytest.approx(0.5, abs=1e-12)
    assert abs(fourier_coefficient(mu, 3)) < 1e-12


def test_out_of_band_raises_only_with_density():
    grid = CircleMeasure.uniform(bins=64)
    with pytest.raises(OutOfBandError):
        fourier_coefficient(grid, 9)  # band is 64/8 = 8
    atomic = CircleMeasure.dirac(1.0, bins=64)
    # atoms have exact coefficients at every order
    assert abs(fourier_coefficient(atomic, 500)) == pytest.approx(1.0)


def test_conjugate_symmetry():
    mu = CircleMeasure.from_parts(
        64, atoms=[(1.3, 0.4)], density=np.random.default_rng(0).random(64)
    )
    for n in range(1, 8):
        assert fourier_coefficient(mu, -n) == pytest.approx(
            np.conj(fourier_coefficient(mu, n))
        )


# -- mix / scale -------------------------------------------------------

def test_mix_requires_same_bins():
    with pytest.raises(BinMismatchError):
        mix(CircleMeasure.uniform(bins=32), CircleMeasure.uniform(bins=64))


def test_scale_rejects_negative():
    with pytest.raises(ValueError):
        scale(CircleMeasure.uniform(bins=32), -1.0)


@settings(max_examples=25, deadline=None)
@given(mixed_measures(), mixed_measures(), masses)
def test_mix_and_scale_are_linear_on_coefficients(mu, nu, factor):
    lhs = coeff_row(scale(mix(mu, nu), factor), 4)
    rhs = factor * (coeff_row(mu, 4) + coeff_row(nu, 4))
    np.testing.assert_allclose(lhs, rhs, atol=1e-10)


# -- convolution -------------------------------------------------------

def test_convolve_diracs_adds_angles():
    a = CircleMeasure.dirac(4.0, 0.5, bins=64)
    b = CircleMeasure.dirac(3.0, 0.5, bins=64)
    out = convolve(a, b)
    assert out.atoms() == [(pytest.approx((4.0 + 3.0) % TWO_PI), pytest.approx(0.25))]


def test_convolve_with_unit_dirac_at_zero_is_identity_on_atoms():
    mu = CircleMeasure.from_parts(64, atoms=[(1.0, 0.3), (2.5, 0.7)])
    out = convolve(mu, CircleMeasure.dirac(0.0, 1.0, bins=64))
    assert measures_close(out, mu, 1e-12)


def test_atomic_duality_exact():
    # multiplicativity: transform of the convolution is the product
    mu, nu = measure_pair(seed=11, bins=1024, kind="atomic")
    lhs = coeff_row(convolve(mu, nu), 64)
    rhs = coeff_row(mu, 64) * coeff_row(nu, 64)
    assert np.max(np.abs(lhs - rhs)) <= 1e-8


def test_grid_duality_within_projection_error():
    mu, nu = measure_pair(seed=11, bins=1024, kind="grid")
    lhs = coeff_row(convolve(mu, nu), 64)
    rhs = coeff_row(mu, 64) * coeff_row(nu, 64)
    assert np.max(np.abs(lhs - rhs)) <= 5e-3


@settings(max_examples=25, deadline=None)
@given(mixed_measures(bins=128), mixed_measures(bins=128))
def test_mass_conservation_under_convolution(mu, nu):
    assert total_mass(convolve(mu, nu)) == pytest.approx(
        total_mass(mu) * total_mass(nu), abs=1e-10
    )


@settings(max_examples=20, deadline=None)
@given(atomic_measures(bins=64), atomic_measures(bins=64))
def test_convolution_commutes_on_atoms(mu, nu):
    assert measures_close(convolve(mu, nu), convolve(nu, mu), 1e-12)


@settings(max_examples=15, deadline=None)
@given(atomic_measures(bins=64, max_atoms=3), atomic_measures(bins=64, max_atoms=3),
       atomic_measures(bins=64, max_atoms=3))
def test_convolution_associates_on_coefficients(mu, nu, rho):
    lhs = coeff_row(convolve(convolve(mu, nu), rho), 4)
    rhs = coeff_row(convolve(mu, convolve(nu, rho)), 4)
    np.testing.assert_allclose(lhs, rhs, atol=1e-9)


def test_convolution_power_matches_repeated_convolve():
    rho = probability_measure(seed=3, bins=256)
    p3 = convolution_power(rho, 3)
    ref = convolve(convolve(rho, rho), rho)
    np.testing.assert_allclose(
        coeff_row(p3, 16), coeff_row(ref, 16), atol=1e-10
    )


def test_convolution_power_zero_is_identity():
    rho = probability_measure(seed=4, bins=256)
    unit = convolution_power(rho, 0)
    assert unit.atoms() == [(0.0, pytest.approx(1.0))]
    assert not unit.has_density


def test_convolution_power_rejects_negative():
    with pytest.raises(ValueError):
        convolution_power(CircleMeasure.uniform(bins=64), -1)


# -- exponential -------------------------------------------------------

def _factorial_tail(order: int) -> float:
    # independent bound: sum_{k > order} 1 / k! for a unit-mass input
    return sum(1.0 / math.factorial(k) for k in range(order + 1, order + 60))


def test_truncation_order_against_factorial_oracle():
    for tol in (1e-6, 1e-9, 1e-12):
        k = truncation_order(tol)
        assert _factorial_tail(k) <= tol
        assert _factorial_tail(k - 1) > tol


def test_truncation_order_frozen_values():
    assert truncation_order(1e-12) == 14
    assert truncation_order(1e-6) == 9


def test_exponential_identity_on_probability_measures():
    # (exp rho)^(n) = e^{rho^(n)} coefficient by coefficient
    for seed in range(4):
        rho = probability_measure(seed=seed, bins=1024)
        out = exp_measure(rho, tail_tol=1e-12)
        for n in (-32, -5, 0, 1, 17, 64):
            want = np.exp(fourier_coefficient(rho, n))
            got = fourier_coefficient(out, n)
            assert abs(got - want) <= 1e-5, (seed, n)


def test_exponential_requires_probability():
    with pytest.raises(NotProbabilityError):
        exp_measure(CircleMeasure.uniform(mass=2.0, bins=64))


def test_exponential_mass_is_e():
    # hat at n = 0 is e^1: the series sums factorial reciprocals
    rho = probability_measure(seed=9, bins=512)
    out = exp_measure(rho)
    assert total_mass(out) == pytest.approx(np.e, abs=1e-9)


def test_normalized_chaos_is_probability():
    rho = probability_measure(seed=9, bins=512)
    out = normalized_chaos(rho)
    assert total_mass(out) == pytest.approx(1.0, abs=1e-9)


def test_normalized_chaos_fixes_uniform():
    uni = CircleMeasure.uniform(bins=1024)
    out = normalized_chaos(uni)
    assert out.atom_count == 0
    assert np.max(np.abs(out.density - uni.density)) <= 1e-9


def test_normalized_chaos_of_dirac_at_zero_is_dirac():
    rho = CircleMeasure.dirac(0.0, 1.0, bins=64)
    out = normalized_chaos(rho)
    assert out.atoms() == [(0.0, pytest.approx(1.0, abs=1e-9))]


# -- symmetry ----------------------------------------------------------

def test_reflect_is_involution_on_atoms():
    mu = CircleMeasure.from_parts(64, atoms=[(0.7, 0.2), (4.0, 0.8), (0.0, 0.1)])
    twice = reflect(reflect(mu))
    # equality holds at the class's atom identity; masses are untouched
    assert twice == mu
    np.testing.assert_array_equal(twice.atom_masses, mu.atom_masses)


def test_reflect_dirac_quarter_turn():
    mu = reflect(CircleMeasure.dirac(np.pi / 2, 1.0, bins=64))
    assert mu.atoms()[0][0] == pytest.approx(3 * np.pi / 2, abs=1e-15)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(
    st.floats(min_value=1e-6, max_value=TWO_PI - 1e-6,
              allow_nan=False, allow_infinity=False), masses),
    min_size=1, max_size=4))
def test_reflect_involution_property_on_atoms(atom_list):
    mu = CircleMeasure.from_parts(64, atoms=atom_list)
    assert reflect(reflect(mu)) == mu


@settings(max_examples=25, deadline=None)
@given(grid_measures(bins=64))
def test_reflect_involution_on_grids(mu):
    twice = reflect(reflect(mu))
    assert np.max(np.abs(twice.density - mu.density)) <= 1e-12


def test_reflect_maps_bin_j_to_mirror_bin():
    bins = 32
    density = np.zeros(bins)
    density[3] = 1.0
    mu = CircleMeasure.from_parts(bins, density=density)
    out = reflect(mu)
    assert out.density[bins - 1 - 3] == pytest.approx(1.0)
    assert np.sum(out.density) == pytest.approx(1.0)


@settings(max_examples=25, deadline=None)
@given(mixed_measures(bins=64))
def test_symmetrize_passes_symmetry_check(mu):
    sym = symmetrize(mu)
    assert symmetry_defect(sym) <= 1e-10
    assert total_mass(sym) == pytest.approx(total_mass(mu), abs=1e-10)


def test_symmetry_defect_detects_asymmetry():
    mu = CircleMeasure.dirac(1.0, 1.0, bins=64)
    assert symmetry_defect(mu) > 0.5


def test_split_upper_lower_rejects_asymmetric():
    with pytest.raises(AsymmetricMeasureError):
        split_upper_lower(CircleMeasure.dirac(1.0, 1.0, bins=64))


def test_split_upper_lower_averages_back():
    base = mix(
        CircleMeasure.from_parts(64, atoms=[(1.0, 0.25), (0.0, 0.1), (np.pi, 0.2)]),
        CircleMeasure.uniform(mass=0.5, bins=64),
    )
    sym = symmetrize(base)
    upper, lower = split_upper_lower(sym)
    back = scale(mix(upper, lower), 0.5)
    assert measures_close(back, sym, 1e-12)
    # boundary atoms at 0 and pi keep their full mass on both parts
    up_at_zero = [m for a, m in upper.atoms() if a == 0.0]
    low_at_zero = [m for a, m in lower.atoms() if a == 0.0]
    assert up_at_zero == low_at_zero


def test_split_upper_lower_doubles_interior_mass():
    sym = symmetrize(CircleMeasure.dirac(1.0, 0.5, bins=64))
    upper, lower = split_upper_lower(sym)
    assert upper.atoms() == [(pytest.approx(1.0), pytest.approx(0.5))]
    assert lower.atoms() == [(pytest.approx(TWO_PI - 1.0), pytest.approx(0.5))]


# -- probes ------------------------------------------------------------

def test_rajchman_passes_on_uniform():
    report = rajchman_probe(CircleMeasure.uniform(bins=1024))
    assert report.passed
    assert report.tail_sup <= 1e-9


def test_rajchman_fails_on_dirac():
    report = rajchman_probe(CircleMeasure.dirac(1.0, 1.0, bins=1024))
    assert not report.passed
    assert report.tail_sup == pytest.approx(1.0)


def test_dirichlet_passes_on_dirac():
    # point mass coefficients return to modulus one at every order
    report = dirichlet_probe(CircleMeasure.dirac(2.0, 1.0, bins=1024))
    assert report.passed
    assert report.best_value >= 1.0 - 1e-9


def test_dirichlet_fails_on_uniform():
    report = dirichlet_probe(CircleMeasure.uniform(bins=1024))
    assert not report.passed


def test_probe_consistency_rajchman_excludes_dirichlet():
    # decay to zero and near-recurrence to modulus one cannot coexist
    for seed in range(6):
        rho = probability_measure(seed=seed, bins=1024)
        if rho.atom_count:
            rho = normalized_chaos(CircleMeasure.from_parts(
                rho.bins, density=np.full(rho.bins, 1.0 / TWO_PI)))
        if rajchman_probe(rho).passed:
            assert not dirichlet_probe(rho).passed


def test_mild_mixing_passes_on_uniform():
    report = mild_mixing_probe(CircleMeasure.uniform(bins=1024))
    assert report.passed
    assert report.family_size >= 16


def test_mild_mixing_fails_on_any_visible_atom():
    # an atom of mass >= 0.01 forces a unit-modulus member in the family
    for mass in (0.01, 0.3, 1.0):
        rho = mix(
            CircleMeasure.dirac(1.0, mass, bins=1024),
            CircleMeasure.uniform(mass=1.0 - mass, bins=1024),
        )
        report = mild_mixing_probe(rho)
        assert not report.passed
        assert report.witness.startswith("atom@")


def test_probes_reject_non_probability():
    heavy = CircleMeasure.uniform(mass=3.0, bins=1024)
    for probe in (rajchman_probe, dirichlet_probe, mild_mixing_probe):
        with pytest.raises(NotProbabilityError):
            probe(heavy)
