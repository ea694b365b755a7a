"""
Exact arithmetic in K = Q(sqrt(2), sqrt(p1), sqrt(p2)).

Elements are 8-vectors of rationals over the basis

    1, sqrt2, sqrt(p1), sqrt(p2), sqrt(2p1), sqrt(2p2), sqrt(p1p2), sqrt(2p1p2)

Each basis slot is identified with a bitmask over the primes (2, p1, p2), so
slot products are XORs of masks times the square of the shared primes, and
the Galois element with sign triple (s2, sp1, sp2) acts on a slot by the
product of the signs of its primes.
"""

import logging
import threading
from dataclasses import dataclass
from itertools import product
from math import gcd
from typing import Dict, Optional, Tuple

import numpy as np
import flint
from gmpy2 import mpq

from triquad.arith import format_rational, parse_rational, height_bits, rational_sqrt
from triquad.config import DEFAULT_CONFIG
from triquad.errors import PreconditionError, InconsistencyError, InconclusiveError
from triquad.quadratic import validate_pair

logger = logging.getLogger(__name__)

RADICAND_LABELS = ('1', '2', 'p1', 'p2', '2p1', '2p2', 'p1p2', '2p1p2')
SLOT_MASKS = (0b000, 0b001, 0b010, 0b100, 0b011, 0b101, 0b110, 0b111)
SLOT_OF_MASK = {m: i for i, m in enumerate(SLOT_MASKS)}
SLOT_OF_LABEL = {label: i for i, label in enumerate(RADICAND_LABELS)}


def _character_table():
    g = np.arange(8).reshape(-1, 1)
    s = np.array(SLOT_MASKS).reshape(1, -1)
    common = np.bitwise_and(g, s)
    parity = (common & 1) + ((common >> 1) & 1) + ((common >> 2) & 1)
    return (1 - 2 * (parity % 2)).astype(np.int64)


# CHARACTERS[g][slot] = sign of slot under the Galois element with mask g
CHARACTERS = _character_table()


@dataclass(frozen=True)
class GaloisElement:
    """Automorphism sqrt2 -> s2 sqrt2, sqrt(p1) -> sp1 sqrt(p1), sqrt(p2) -> sp2 sqrt(p2)."""
    signs: Tuple[int, int, int] = (1, 1, 1)

    @classmethod
    def from_mask(cls, mask):
        return cls(tuple(-1 if mask >> i & 1 else 1 for i in range(3)))

    @property
    def mask(self):
        return sum(1 << i for i, s in enumerate(self.signs) if s == -1)

    def __mul__(self, other):
        return GaloisElement.from_mask(self.mask ^ other.mask)

    def character(self, slot):
        return int(CHARACTERS[self.mask, slot])

    @property
    def is_identity(self):
        return self.mask == 0

    def __str__(self):
        names = [f"tau{i + 1}" for i in range(3) if self.signs[i] == -1]
        return ''.join(names) or 'id'


IDENTITY = GaloisElement()
TAU1 = GaloisElement((-1, 1, 1))
TAU2 = GaloisElement((1, -1, 1))
TAU3 = GaloisElement((1, 1, -1))
GALOIS_GROUP = tuple(GaloisElement.from_mask(m) for m in range(8))


@dataclass(frozen=True)
class SubfieldId:
    name: str
    fixing: Tuple[int, ...]
    slots: Tuple[int, ...]

    @property
    def degree(self):
        return len(self.slots)

    def fixing_elements(self):
        return tuple(GaloisElement.from_mask(m) for m in self.fixing)

    def contains_support(self, support):
        return set(support) <= set(self.slots)


def _subgroup(generators):
    group = {0}
    for g in generators:
        group |= {h ^ g for h in group}
    return tuple(sorted(group))


def fixed_subfield(name, *generators) -> SubfieldId:
    """The subfield fixed by the group generated by the given Galois elements."""
    fixing = _subgroup(g.mask for g in generators)
    slots = tuple(s for s in range(8) if all(CHARACTERS[m, s] == 1 for m in fixing))
    return SubfieldId(name=name, fixing=fixing, slots=slots)


BIQUADRATIC: Dict[str, SubfieldId] = {
    'k1': fixed_subfield('k1', TAU3),
    'k2': fixed_subfield('k2', TAU2),
    'k3': fixed_subfield('k3', TAU2 * TAU3),
    'k4': fixed_subfield('k4', TAU1),
    'k5': fixed_subfield('k5', TAU1 * TAU2),
    'k6': fixed_subfield('k6', TAU1 * TAU3),
    'k7': fixed_subfield('k7', TAU1 * TAU2 * TAU3),
}


def quadratic_subfield(label) -> SubfieldId:
    slot = SLOT_OF_LABEL[label]
    kernel = [g for g in GALOIS_GROUP if g.character(slot) == 1]
    return fixed_subfield(f"Q(sqrt({label}))", *kernel)


FULL_FIELD = SubfieldId(name='K', fixing=(0,), slots=tuple(range(8)))


class FieldCtx:
    """The field K for a fixed pair (p1, p2); immutable apart from cached radicals."""

    def __init__(self, p1, p2):
        validate_pair(p1, p2)
        self.p1 = int(p1)
        self.p2 = int(p2)
        self.primes = (2, self.p1, self.p2)
        self.radicands = tuple(self._radicand(m) for m in SLOT_MASKS)
        self._radicals = {}
        self._lock = threading.Lock()
        # slot i * slot j = factor * slot k
        self.mul_table = [[(SLOT_OF_MASK[mi ^ mj], self._radicand(mi & mj))
                           for mj in SLOT_MASKS] for mi in SLOT_MASKS]

    def _radicand(self, mask):
        value = 1
        for i, p in enumerate(self.primes):
            if mask >> i & 1:
                value *= p
        return value

    def slot_of_radicand(self, d):
        try:
            return self.radicands.index(int(d))
        except ValueError:
            raise PreconditionError(f"{d} is not a radicand of K = Q(sqrt2, sqrt{self.p1}, sqrt{self.p2})")

    def radicand(self, label):
        return self.radicands[SLOT_OF_LABEL[label]]

    def radicals(self, precision):
        """arb values of sqrt(r) for the 8 radicands at the given precision."""
        with self._lock:
            values = self._radicals.get(precision)
            if values is None:
                with flint.ctx.workprec(precision):
                    values = tuple(flint.arb(r).sqrt() for r in self.radicands)
                self._radicals[precision] = values
            return values

    def element(self, coeffs) -> 'MQElement':
        coeffs = tuple(mpq(c) for c in coeffs)
        if len(coeffs) != 8:
            raise PreconditionError(f"An element of K needs 8 coefficients, got {len(coeffs)}")
        return MQElement(self, coeffs)

    def rational(self, q) -> 'MQElement':
        return self.element([q] + [0] * 7)

    def basis(self, label) -> 'MQElement':
        coeffs = [0] * 8
        coeffs[SLOT_OF_LABEL[label]] = 1
        return self.element(coeffs)

    def one(self):
        return self.rational(1)

    def __eq__(self, other):
        return isinstance(other, FieldCtx) and (self.p1, self.p2) == (other.p1, other.p2)

    def __hash__(self):
        return hash((self.p1, self.p2))

    def __repr__(self):
        return f"FieldCtx({self.p1}, {self.p2})"


@dataclass(frozen=True, eq=False)
class MQElement:
    ctx: FieldCtx
    coeffs: Tuple[mpq, ...]

    def _check(self, other):
        if not isinstance(other, MQElement):
            return self.ctx.rational(other)
        if other.ctx != self.ctx:
            raise PreconditionError(f"Elements of different fields: {self.ctx} and {other.ctx}")
        return other

    def __add__(self, other):
        other = self._check(other)
        return MQElement(self.ctx, tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    __radd__ = __add__

    def __neg__(self):
        return MQElement(self.ctx, tuple(-c for c in self.coeffs))

    def __sub__(self, other):
        return self + (-self._check(other))

    def __mul__(self, other):
        return mul(self, self._check(other))

    __rmul__ = __mul__

    def scale(self, q):
        q = mpq(q)
        return MQElement(self.ctx, tuple(c * q for c in self.coeffs))

    def __eq__(self, other):
        if not isinstance(other, MQElement):
            return NotImplemented
        return self.ctx == other.ctx and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.ctx, self.coeffs))

    def is_zero(self):
        return not any(self.coeffs)

    def is_rational(self):
        return not any(self.coeffs[1:])

    def support(self):
        return tuple(i for i, c in enumerate(self.coeffs) if c)

    def height_bits(self):
        return max(height_bits(c) for c in self.coeffs)

    def denominator_lcm(self):
        lcm = 1
        for c in self.coeffs:
            den = int(c.denominator)
            lcm = lcm * den // gcd(lcm, den)
        return lcm

    def to_dict(self):
        return {'p1': self.ctx.p1, 'p2': self.ctx.p2,
                'coeffs': [format_rational(c) for c in self.coeffs]}

    @classmethod
    def from_dict(cls, data, ctx=None):
        ctx = ctx or FieldCtx(int(data['p1']), int(data['p2']))
        return ctx.element([parse_rational(c) for c in data['coeffs']])

    def __repr__(self):
        terms = [f"{format_rational(c)}*sqrt({RADICAND_LABELS[i]})" if i else format_rational(c)
                 for i, c in enumerate(self.coeffs) if c]
        return ' + '.join(terms) or '0'


def _same_field(x, y):
    if x.ctx != y.ctx:
        raise PreconditionError(f"Elements of different fields: {x.ctx} and {y.ctx}")


def mul(x: MQElement, y: MQElement) -> MQElement:
    _same_field(x, y)
    table = x.ctx.mul_table
    result = [mpq(0)] * 8
    for i, a in enumerate(x.coeffs):
        if not a:
            continue
        row = table[i]
        for j, b in enumerate(y.coeffs):
            if b:
                k, factor = row[j]
                result[k] += a * b * factor
    return MQElement(x.ctx, tuple(result))


def power(x: MQElement, k: int) -> MQElement:
    if k < 0:
        x, k = inverse(x), -k
    result = x.ctx.one()
    while k:
        if k & 1:
            result = mul(result, x)
        x = mul(x, x)
        k >>= 1
    return result


def apply_galois(g: GaloisElement, x: MQElement) -> MQElement:
    row = CHARACTERS[g.mask]
    return MQElement(x.ctx, tuple(c if row[s] == 1 else -c for s, c in enumerate(x.coeffs)))


def rel_norm(x: MQElement, g: GaloisElement) -> MQElement:
    """x * g(x), the norm down to the fixed field of <g>."""
    if g.is_identity:
        raise PreconditionError("Relative norm needs a non-trivial automorphism")
    result = mul(x, apply_galois(g, x))
    if apply_galois(g, result) != result:
        raise InconsistencyError(f"x * {g}(x) is not fixed by {g}")
    return result


def algebraic_norm(x: MQElement) -> mpq:
    y = rel_norm(rel_norm(rel_norm(x, TAU1), TAU2), TAU3)
    if not y.is_rational():
        raise InconsistencyError(f"Norm of {x} is not rational")
    return y.coeffs[0]


def inverse(x: MQElement) -> MQElement:
    """x^-1 through the tower K / Q(sqrt p1, sqrt p2) / Q(sqrt p2) / Q."""
    if x.is_zero():
        raise PreconditionError("0 has no inverse")
    x1 = apply_galois(TAU1, x)
    a = mul(x, x1)
    a2 = apply_galois(TAU2, a)
    b = mul(a, a2)
    b3 = apply_galois(TAU3, b)
    norm = mul(b, b3)
    if not norm.is_rational():
        raise InconsistencyError(f"Norm of {x} is not rational")
    return mul(mul(x1, a2), b3).scale(1 / norm.coeffs[0])


def embed_quad_coords(d, coords, ctx: FieldCtx) -> MQElement:
    """u + v*sqrt(d) as an element of K."""
    u, v = coords
    vector = [mpq(0)] * 8
    vector[0] = mpq(u)
    vector[ctx.slot_of_radicand(d)] += mpq(v)
    return ctx.element(vector)


def embed_quad_unit(unit, ctx: FieldCtx) -> MQElement:
    return embed_quad_coords(unit.d, (unit.x, unit.y), ctx)


def _arb_rational(q):
    q = mpq(q)
    return flint.arb(int(q.numerator)) / int(q.denominator)


def embed_real(x: MQElement, sigma: GaloisElement, precision: int):
    """Ball enclosure of sigma(x) in R."""
    if precision < 64:
        raise PreconditionError(f"Precision {precision} is below 64 bits")
    radicals = x.ctx.radicals(precision)
    row = CHARACTERS[sigma.mask]
    with flint.ctx.workprec(precision):
        total = flint.arb(0)
        for s, c in enumerate(x.coeffs):
            if c:
                term = _arb_rational(c) * radicals[s]
                total = total + term if row[s] == 1 else total - term
    return total


def working_precision(x: MQElement, guard: int) -> int:
    return 2 * x.height_bits() + guard + 64


def embeddings(x: MQElement, precision: int):
    return [embed_real(x, g, precision) for g in GALOIS_GROUP]


def certified_signs(x: MQElement, config=None) -> Tuple[int, ...]:
    """Signs of the 8 real embeddings, indexed by Galois mask."""
    config = config or DEFAULT_CONFIG
    if x.is_zero():
        raise PreconditionError("0 has no sign")
    for guard in config.precision_ladder():
        values = embeddings(x, working_precision(x, guard))
        signs = [1 if v > 0 else -1 if v < 0 else 0 for v in values]
        if all(signs):
            return tuple(signs)
        logger.debug(f"Signs of {x} undecided with {guard} guard bits")
    raise InconclusiveError(f"Could not certify the signs of {x} at {config.precision_max} guard bits")


def is_totally_positive(x: MQElement, config=None) -> bool:
    return all(s == 1 for s in certified_signs(x, config))


def _rational_square_root(x: MQElement) -> Optional[MQElement]:
    q = x.coeffs[0]
    if q < 0:
        return None
    for slot, r in enumerate(x.ctx.radicands):
        a = rational_sqrt(q / r)
        if a is not None:
            vector = [mpq(0)] * 8
            vector[slot] = a
            return x.ctx.element(vector)
    return None


def _reconstruct(value, den):
    """Integer n with value*den in a narrow ball around n; False if too wide, None if none."""
    t = value * den
    if not t.rad() < 0.25:
        return False
    n = t.unique_fmpz()
    if n is None:
        return None
    return mpq(int(n), den)


def _square_root_candidates(x: MQElement, roots, precision, den):
    """Yield (coeffs or False) for the 128 sign patterns with the identity root positive."""
    radicals = x.ctx.radicals(precision)
    with flint.ctx.workprec(precision):
        for pattern in product((1, -1), repeat=7):
            signed = [roots[0]] + [r if s == 1 else -r for r, s in zip(roots[1:], pattern)]
            coeffs = []
            for slot in range(8):
                total = flint.arb(0)
                for g in range(8):
                    total = total + signed[g] if CHARACTERS[g, slot] == 1 else total - signed[g]
                c = _reconstruct(total / (8 * radicals[slot]), den)
                if c is None or c is False:
                    coeffs = c
                    break
                coeffs.append(c)
            yield coeffs


def is_square(x: MQElement, config=None) -> Optional[MQElement]:
    """A square root of x in K, or None when x is not a square in K.

    The root's conjugates are +-sqrt(sigma(x)); each sign pattern gives
    candidate coefficients by inverting the character table, which are
    rounded to quarter-integers (the denominators of the integers of K)
    and confirmed by exact squaring.
    """
    config = config or DEFAULT_CONFIG
    if x.is_zero():
        raise PreconditionError("is_square is undefined for 0")
    if x.is_rational():
        return _rational_square_root(x)
    m = x.denominator_lcm()
    scaled = x.scale(m * m)
    for guard in config.precision_ladder():
        precision = working_precision(scaled, guard)
        values = embeddings(scaled, precision)
        if any(v < 0 for v in values):
            return None
        if not all(v > 0 for v in values):
            logger.debug(f"Embeddings of {x} undecided with {guard} guard bits")
            continue
        with flint.ctx.workprec(precision):
            roots = [v.sqrt() for v in values]
        inconclusive = False
        for den in (config.denominator_bound, config.denominator_escalation):
            for coeffs in _square_root_candidates(scaled, roots, precision, den):
                if coeffs is False:
                    inconclusive = True
                    continue
                if coeffs is None:
                    continue
                y = scaled.ctx.element(coeffs)
                if mul(y, y) == scaled:
                    return y.scale(mpq(1, m))
        if not inconclusive:
            return None
        logger.debug(f"Square root of {x} inconclusive with {guard} guard bits")
    raise InconclusiveError(f"Square test for {x} undecided at {config.precision_max} guard bits")


def is_square_in_subfield(x: MQElement, sf: SubfieldId, config=None) -> Optional[MQElement]:
    """A square root of x lying in the subfield sf, or None."""
    if not sf.contains_support(x.support()):
        raise PreconditionError(f"{x} does not lie in {sf.name}")
    root = is_square(x, config)
    if root is None or not sf.contains_support(root.support()):
        return None
    return root
