import pytest
from gmpy2 import mpq

from triquad.errors import InconsistencyError, PreconditionError
from triquad.mfield import embed_quad_unit, mul
from triquad.quadratic import fundamental_unit
from triquad.units import (
    E, QUADRATIC_BASE, R, UnitWord, exponent_index, is_exact_unit, same_group,
)


def test_word_arithmetic():
    word = R('2', 'p1', '2p1')
    assert word.exponent('2') == mpq(1, 2)
    assert word.denominator == 2
    assert not word.is_integral()
    assert word.power(2) == E('2', 'p1', '2p1')
    assert (E('2') * E('2')).exponent('2') == 2
    assert word.sqrt().denominator == 4


def test_word_text():
    assert str(R('p1p2')) == 'sqrt(eps_p1p2)'
    assert str(E('2', 'p1')) == 'eps_2*eps_p1'
    assert str(UnitWord()) == '1'


def test_word_swap():
    assert R('2', 'p1', '2p1').swapped() == R('2', 'p2', '2p2')
    assert R('p1p2').swapped() == R('p1p2')


def test_word_dict():
    word = R('2', 'p1', '2p1').sqrt()
    assert UnitWord.from_dict(word.to_dict()) == word
    with pytest.raises(PreconditionError):
        UnitWord.from_map({'3': 1})


def test_exponent_index():
    assert exponent_index(list(QUADRATIC_BASE)) == 1
    words = [E('2'), E('p1'), E('p2'), R('2p1'), R('2p2'), R('p1p2'), R('2p1p2')]
    assert exponent_index(words) == 16
    with pytest.raises(PreconditionError):
        exponent_index(words[:6])
    with pytest.raises(InconsistencyError):
        exponent_index([E('2')] * 7)


def test_biquadratic_index():
    words = [E('2'), E('p1'), R('2', 'p1', '2p1')]
    assert exponent_index(words, columns=('2', 'p1', '2p1')) == 2


def test_same_group():
    base = list(QUADRATIC_BASE)
    assert same_group(base, base[::-1])
    assert same_group(base, [E('2', 'p1')] + base[1:])
    assert not same_group(base, base[:3] + [R('2p1')] + base[4:])


def test_realize_integral_word(pair_5_13):
    realizer = pair_5_13.realizer
    eps2 = embed_quad_unit(fundamental_unit(2), realizer.ctx)
    assert realizer.realize(E('2')) == eps2
    assert realizer.realize(E('2').power(-1)) == realizer.ctx.basis('2') - realizer.ctx.one()


def test_realize_half_word(pair_5_13):
    realizer = pair_5_13.realizer
    root = realizer.try_realize(R('p1', 'p2', 'p1p2'))
    assert root is not None
    product = realizer.integral(E('p1', 'p2', 'p1p2'))
    assert mul(root, root) in (product, -product)
    assert is_exact_unit(root)


def test_realize_kuroda_unit(pair_5_13):
    assert pair_5_13.realizer.try_realize(R('2', 'p1', '2p1')) is not None


def test_unrealizable_word(pair_5_13):
    realizer = pair_5_13.realizer
    assert realizer.try_realize(R('2')) is None
    with pytest.raises(InconsistencyError):
        realizer.realize(R('2'))
