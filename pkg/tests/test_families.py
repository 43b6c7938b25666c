import math

import numpy as np
import pytest

import oracles
from ifslab import (
    DomainError,
    UnboundedDistortionError,
    Word,
    affine_family,
    attractor_hull,
    coding_map,
    compose_word,
    contraction_bounds,
    estimate_distortion,
    gauss_family,
)
from ifslab.maps import ConformalMap


def test_contraction_bounds_examples(dyadic):
    assert contraction_bounds(dyadic, Word.of(2)) == (1 / 16, 1 / 16)
    r, R = contraction_bounds(dyadic, Word.of(1, 2))
    assert r == R == pytest.approx(1 / 64, abs=0)


def test_contraction_bounds_gauss_digits(gauss_digits):
    r, R = contraction_bounds(gauss_digits, Word.of(1))
    assert r == pytest.approx(1 / 1.85 ** 2, rel=1e-12)
    assert R == pytest.approx(1 / 1.25 ** 2, rel=1e-12)


def test_contraction_bounds_empty_word_rejected(cantor):
    with pytest.raises(ValueError):
        contraction_bounds(cantor, Word.empty())


def test_chain_inequality_all_words(gauss_digits):
    # c1^-1 r_u r_v <= r_uv <= c1 r_u r_v over all words of length <= 4
    c1 = estimate_distortion(gauss_digits).c1
    words = [Word(w) for n in (1, 2) for w in oracles.all_words(2, n)]
    for u in words:
        for v in words:
            ru, _ = contraction_bounds(gauss_digits, u)
            rv, _ = contraction_bounds(gauss_digits, v)
            ruv, _ = contraction_bounds(gauss_digits, u + v)
            assert ru * rv / c1 <= ruv * (1 + 1e-12)
            assert ruv <= c1 * ru * rv * (1 + 1e-12)


def test_distortion_bound_brute_force(gauss_digits):
    # R_u <= c1 r_u on every word of length <= 6
    data = estimate_distortion(gauss_digits)
    maps, derivs = oracles.gauss_digit_maps([1, 2])
    for n in range(1, 7):
        for word in oracles.all_words(2, n):
            r, R = oracles.word_bounds_monotone(maps, derivs, word, 0.25, 0.85)
            assert R <= data.c1 * r


def test_distortion_affine_exact(dyadic, cantor):
    assert estimate_distortion(dyadic).c1 == 1.0
    d = estimate_distortion(cantor, samples=25)
    assert d.c1 == 1.0 and d.phi_at_1 == 0.0 and d.delta == 1.0


def test_distortion_needs_modulus():
    fam = gauss_family([1, 2], (0.25, 0.85))
    fam.dini_modulus = None
    with pytest.raises(UnboundedDistortionError):
        estimate_distortion(fam)


def test_coding_map_fixed_points(dyadic):
    pt, err = coding_map(dyadic, Word.constant(2, 30), 0.9)
    assert pt == pytest.approx(0.2, abs=1e-15)
    pt, err = coding_map(dyadic, Word.constant(1, 30), 0.1)
    assert pt == pytest.approx(1 / 3, abs=1e-15)
    assert err <= 0.25 ** 30 + 1e-30


def test_coding_map_error_bound():
    fam = affine_family([0.25, 0.25], [0.0, 0.75])
    _, err = coding_map(fam, Word.constant(1, 10), 0.5)
    assert err == pytest.approx(0.25 ** 10, rel=1e-12)


def test_coding_map_base_agreement(gauss_digits):
    rng = np.random.default_rng(3)
    s = gauss_digits.contraction
    diam = gauss_digits.diam
    for _ in range(25):
        k = int(rng.integers(1, 10))
        word = Word(tuple(int(x) for x in rng.integers(1, 3, size=k)))
        a, _ = coding_map(gauss_digits, word, 0.25)
        b, _ = coding_map(gauss_digits, word, 0.85)
        assert abs(a - b) <= 2 * s ** k * diam


def test_coding_map_domain_error(cantor):
    with pytest.raises(DomainError):
        coding_map(cantor, Word.of(1), 1.5)


def test_affine_family_validation():
    with pytest.raises(DomainError):
        affine_family([0.5], [0.75])  # image [0.75, 1.25] escapes [0, 1]
    with pytest.raises(ValueError):
        affine_family([1.2], [0.0])


def test_gauss_full_flagged():
    with pytest.warns(UserWarning, match="contractivity fails"):
        fam = gauss_family()
    assert not fam.contractive
    assert fam.pair_contraction == 0.25
    assert fam.word_contraction(10) == 0.25 ** 5


def test_gauss_digit_domain_must_be_invariant():
    with pytest.raises(DomainError):
        gauss_family([1, 2], (0.05, 0.5))  # s_1(0.05) > 0.5


def test_derivative_bound_consistency(gauss_digits, dyadic):
    xs = np.linspace(0.25, 0.85, 50)
    for j in (1, 2):
        m = gauss_digits.map(j)
        d = np.abs(m.deriv(xs))
        assert m.r_inf <= d.min() + 1e-15 and d.max() <= m.R_sup + 1e-15
        assert 0 < m.r_inf <= m.R_sup < 1


def test_tail_sup_matches_series(dyadic, gauss_full):
    for t in (0.5, 1.0, 1.7):
        direct = sum(4.0 ** (-j * t) for j in range(41, 4000))
        assert dyadic.tail_sup(t, 40) == pytest.approx(direct, rel=1e-10)
    # Hurwitz tail for the Gauss family, against slow partial sums
    approx = sum((j + 0.0) ** -2.0 for j in range(9, 300000))
    assert gauss_full.tail_sup(1.0, 8) == pytest.approx(approx, rel=1e-4)
    assert math.isinf(gauss_full.tail_sup(0.5, 8))
    assert dyadic.tail_sup(1.0, 80) <= dyadic.tail_sup(1.0, 40)


def test_attractor_hull_values(dyadic, cantor, gauss_digits):
    assert attractor_hull(dyadic) == (0.0, 1 / 3)
    assert attractor_hull(cantor) == (0.0, 1.0)
    lo, hi = attractor_hull(gauss_digits)
    assert hi == pytest.approx(math.sqrt(3) - 1, abs=1e-14)
    assert lo == pytest.approx(1 / (1 + math.sqrt(3)), abs=1e-14)


def test_orbit_density_cantor(cantor):
    # orbit of an attractor point meets every depth-12 cylinder center
    depth = 12
    base = 0.0  # fixed point of the first branch
    orbit = []
    maps, _ = None, None
    for n in range(1, depth + 1):
        for word in oracles.all_words(2, n):
            orbit.append(coding_map(cantor, Word(word), base)[0])
    orbit = np.sort(np.array(orbit))
    centers = []
    for word in oracles.all_words(2, depth):
        m = compose_word(cantor, Word(word))
        lo, hi = m.image(0.0, 1.0)
        centers.append(0.5 * (lo + hi))
    bound = cantor.contraction ** depth * cantor.diam + 1e-12
    idx = np.searchsorted(orbit, centers)
    idx = np.clip(idx, 1, orbit.size - 1)
    nearest = np.minimum(
        np.abs(np.array(centers) - orbit[idx - 1]), np.abs(np.array(centers) - orbit[idx])
    )
    assert nearest.max() <= bound


def test_constant_word_contraction(dyadic):
    assert dyadic.word_contraction(3) == 0.25 ** 3
    assert dyadic.word_contraction(0) == 1.0
