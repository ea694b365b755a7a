import pytest
from gmpy2 import mpq

from triquad.arith import (
    exact_log2, format_rational, is_perfect_square, legendre, parse_rational,
    quartic_2_under_p, quartic_p_under_2, rational_sqrt, two_part,
)
from triquad.errors import InconsistencyError, PreconditionError


@pytest.mark.parametrize('n, root', [(0, 0), (36, 6), (35, None), (-4, None), (10**40, 10**20)])
def test_is_perfect_square(n, root):
    assert is_perfect_square(n) == root


def test_rational_sqrt():
    assert rational_sqrt(mpq(9, 4)) == mpq(3, 2)
    assert rational_sqrt(mpq(2, 9)) is None


@pytest.mark.parametrize('a, p, value', [(3, 7, -1), (5, 29, 1), (41, 13, -1), (13, 13, 0)])
def test_legendre(a, p, value):
    assert legendre(a, p) == value


def test_legendre_is_multiplicative():
    for p in (13, 29, 41):
        for a in range(1, 12):
            for b in range(1, 12):
                assert legendre(a * b, p) == legendre(a, p) * legendre(b, p)


@pytest.mark.parametrize('p', [4, 15, 2])
def test_legendre_needs_odd_prime(p):
    with pytest.raises(PreconditionError):
        legendre(3, p)


@pytest.mark.parametrize('p, value', [(17, -1), (41, -1), (73, 1)])
def test_quartic_2_under_p(p, value):
    assert quartic_2_under_p(p) == value


@pytest.mark.parametrize('p, value', [(17, 1), (41, -1), (89, -1)])
def test_quartic_p_under_2(p, value):
    assert quartic_p_under_2(p) == value


def test_quartic_symbols_need_1_mod_8():
    with pytest.raises(PreconditionError):
        quartic_2_under_p(13)
    with pytest.raises(PreconditionError):
        quartic_p_under_2(29)


def test_powers_of_two():
    assert exact_log2(32) == 5
    assert two_part(96) == 32
    with pytest.raises(InconsistencyError):
        exact_log2(12)


def test_rational_text():
    assert format_rational(mpq(-3, 4)) == '-3/4'
    assert parse_rational('-3/4') == mpq(-3, 4)
    assert parse_rational('7') == 7
    with pytest.raises(PreconditionError):
        parse_rational('1/0')
