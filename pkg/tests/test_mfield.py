import pytest
from gmpy2 import mpq

from triquad.errors import PreconditionError
from triquad.mfield import (
    BIQUADRATIC, FieldCtx, IDENTITY, TAU1, TAU2, TAU3, algebraic_norm, apply_galois,
    certified_signs, embed_quad_unit, embed_real, inverse, is_square, is_square_in_subfield,
    is_totally_positive, mul, power, quadratic_subfield, rel_norm,
)
from triquad.quadratic import fundamental_unit


def test_radicands(ctx):
    assert ctx.radicands == (1, 2, 5, 13, 10, 26, 65, 130)
    assert ctx.radicand('2p1p2') == 130


def test_basis_products(ctx):
    assert mul(ctx.basis('2'), ctx.basis('p1')) == ctx.basis('2p1')
    assert mul(ctx.basis('2p1'), ctx.basis('2p2')) == ctx.basis('p1p2').scale(2)
    assert mul(ctx.basis('p1p2'), ctx.basis('2p1p2')) == ctx.basis('2').scale(65)


def test_eps2_times_conjugate(ctx):
    eps2 = ctx.one() + ctx.basis('2')
    assert mul(eps2, ctx.basis('2') - ctx.one()) == ctx.one()


def test_fields_do_not_mix(ctx):
    with pytest.raises(PreconditionError):
        mul(ctx.one(), FieldCtx(5, 17).one())


def test_galois_action(ctx):
    x = ctx.basis('p1p2')
    assert apply_galois(TAU2, x) == -x
    assert apply_galois(TAU2 * TAU3, x) == x
    assert apply_galois(TAU1, ctx.one()) == ctx.one()
    y = ctx.element([1, 2, 3, 4, 5, 6, 7, 8])
    assert apply_galois(TAU1, apply_galois(TAU1, y)) == y


def test_subfields():
    assert BIQUADRATIC['k1'].slots == (0, 1, 2, 4)
    assert BIQUADRATIC['k3'].slots == (0, 1, 6, 7)
    assert BIQUADRATIC['k4'].slots == (0, 2, 3, 6)
    assert BIQUADRATIC['k7'].slots == (0, 4, 5, 6)
    assert quadratic_subfield('2p1p2').slots == (0, 7)


def test_rel_norm(ctx):
    x = ctx.one() + ctx.basis('p1')
    assert rel_norm(x, TAU2) == ctx.rational(1 - 5)
    with pytest.raises(PreconditionError):
        rel_norm(x, IDENTITY)


def test_algebraic_norm(ctx):
    eps2 = embed_quad_unit(fundamental_unit(2), ctx)
    assert algebraic_norm(eps2) == 1
    assert algebraic_norm(ctx.rational(3)) == 3 ** 8
    assert algebraic_norm(ctx.basis('2')) == 2 ** 4


def test_inverse_and_power(ctx):
    x = ctx.element([1, 1, mpq(1, 2), 0, 3, 0, -1, 0])
    assert mul(x, inverse(x)) == ctx.one()
    assert power(x, -2) == mul(inverse(x), inverse(x))
    assert power(x, 0) == ctx.one()
    with pytest.raises(PreconditionError):
        inverse(ctx.element([0] * 8))


def test_embedding(ctx):
    eps2 = embed_quad_unit(fundamental_unit(2), ctx)
    value = embed_real(eps2, IDENTITY, 128)
    assert value > 2.41 and value < 2.42
    with pytest.raises(PreconditionError):
        embed_real(eps2, IDENTITY, 32)


def test_certified_signs(ctx, config):
    eps2 = embed_quad_unit(fundamental_unit(2), ctx)
    signs = certified_signs(eps2, config)
    assert signs == tuple(-1 if g & 1 else 1 for g in range(8))
    assert not is_totally_positive(eps2, config)
    assert is_totally_positive(mul(eps2, eps2), config)


def test_is_square_finds_root(ctx, config):
    y = ctx.element([1, 1, mpq(1, 2), 0, 0, 3, 0, -1])
    root = is_square(mul(y, y), config)
    assert root == y or root == -y


def test_is_square_rational(ctx, config):
    assert is_square(ctx.rational(2), config) == ctx.basis('2')
    assert is_square(ctx.rational(mpq(9, 4)), config) == ctx.rational(mpq(3, 2))
    assert is_square(ctx.rational(3), config) is None
    assert is_square(ctx.rational(-4), config) is None
    with pytest.raises(PreconditionError):
        is_square(ctx.rational(0), config)


def test_is_square_rejects(ctx, config):
    eps2 = embed_quad_unit(fundamental_unit(2), ctx)
    assert is_square(eps2, config) is None
    # 3 * eps2^2 is totally positive but sqrt(3) is not in K
    assert is_square(mul(eps2, eps2).scale(3), config) is None


def test_is_square_in_subfield(ctx, config):
    r = ctx.basis('2') + ctx.basis('p1')
    root = is_square_in_subfield(mul(r, r), BIQUADRATIC['k1'], config)
    assert root == r or root == -r
    s = ctx.basis('p1') + ctx.basis('p2')
    assert is_square_in_subfield(mul(s, s), BIQUADRATIC['k3'], config) is None
    with pytest.raises(PreconditionError):
        is_square_in_subfield(mul(r, r), BIQUADRATIC['k3'], config)

