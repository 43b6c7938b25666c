import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ifslab import (
    IndexOutOfFamilyError,
    Word,
    compose_word,
    gauss_family,
)
from ifslab.maps import affine_map, fold_apply, identity_map


def test_word_basics():
    u = Word.of(1, 2, 3)
    assert len(u) == 3 and tuple(u) == (1, 2, 3)
    assert len(Word.empty()) == 0
    assert tuple(Word.of(1) + Word.of(2, 2)) == (1, 2, 2)
    with pytest.raises(ValueError):
        Word.of(0)
    with pytest.raises(ValueError):
        Word((1, -2))


def test_affine_map_eval_and_image():
    m = affine_map(-0.5, 1.0)
    assert m(0.0) == 1.0 and m(1.0) == 0.5
    assert m.image(0.0, 1.0) == (0.5, 1.0)
    assert m.deriv_bounds(0.2, 0.7) == (0.5, 0.5)


def test_compose_word_paper_family_squared(dyadic):
    # u = (1, 1): x/16 + 5/16 with derivative 1/16 everywhere
    m = compose_word(dyadic, Word.of(1, 1))
    xs = np.linspace(0, 1, 7)
    assert np.allclose(m(xs), xs / 16 + 5 / 16, rtol=0, atol=1e-16)
    assert np.allclose(m.deriv(xs), 1 / 16)
    assert m.r_inf == m.R_sup == 1 / 16


def test_compose_empty_word_is_identity(dyadic):
    m = compose_word(dyadic, Word.empty())
    assert m(0.7) == 0.7
    assert float(np.asarray(m.deriv(0.7))) == 1.0
    ident = identity_map()
    assert ident(0.3) == 0.3


def test_compose_gauss_digits_squared(gauss_full):
    # s_1 o s_1 (x) = (1+x)/(2+x); |derivative at 0| = 1/4
    m = compose_word(gauss_full, Word.of(1, 1))
    xs = np.linspace(0, 1, 9)
    assert np.allclose(m(xs), (1 + xs) / (2 + xs), atol=1e-15)
    assert abs(abs(float(m.deriv(0.0))) - 0.25) < 1e-15


def test_compose_invalid_index(cantor):
    with pytest.raises(IndexOutOfFamilyError):
        compose_word(cantor, Word.of(3))
    with pytest.raises(IndexOutOfFamilyError):
        compose_word(cantor, Word.of(1, 3))


def test_compose_matches_fold_right(gauss_digits):
    rng = np.random.default_rng(5)
    maps = [gauss_digits.map(j) for j in (1, 2)]
    for _ in range(20):
        word = Word(tuple(int(s) for s in rng.integers(1, 3, size=rng.integers(1, 9))))
        m = compose_word(gauss_digits, word)
        xs = rng.uniform(0.25, 0.85, 100)
        direct = fold_apply([maps[s - 1] for s in word], xs)
        assert np.allclose(m(xs), direct, rtol=1e-14, atol=0)


@settings(max_examples=60, deadline=None)
@given(
    u=st.lists(st.integers(1, 2), min_size=0, max_size=6),
    v=st.lists(st.integers(1, 2), min_size=1, max_size=6),
    x=st.floats(0.25, 0.85),
)
def test_word_concatenation_is_composition(u, v, x):
    fam = gauss_family([1, 2], (0.25, 0.85))
    uv = compose_word(fam, Word(tuple(u)) + Word(tuple(v)))
    outer = compose_word(fam, Word(tuple(u)))
    inner = compose_word(fam, Word(tuple(v)))
    assert np.isclose(float(uv(x)), float(outer(inner(x))), rtol=1e-13, atol=1e-15)
