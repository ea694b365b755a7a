"""
Symbolic units of K and their realization as exact field elements.

A UnitWord is a formal product of the seven quadratic fundamental units with
rational exponents whose denominators are powers of 2. Realizing a word
multiplies the integer powers and then extracts successive square roots.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from gmpy2 import mpq
from sympy import Matrix, Rational

from triquad.arith import format_rational, parse_rational, exact_log2
from triquad.config import DEFAULT_CONFIG
from triquad.errors import PreconditionError, InconsistencyError
from triquad.mfield import (
    FieldCtx, MQElement, SubfieldId, embed_quad_coords, is_square, is_square_in_subfield,
    certified_signs, mul, algebraic_norm,
)
from triquad.quadratic import fundamental_unit

logger = logging.getLogger(__name__)

UNIT_LABELS = ('2', 'p1', 'p2', '2p1', '2p2', 'p1p2', '2p1p2')
_SWAP = {'2': '2', 'p1': 'p2', 'p2': 'p1', '2p1': '2p2', '2p2': '2p1',
         'p1p2': 'p1p2', '2p1p2': '2p1p2'}


@dataclass(frozen=True)
class UnitWord:
    """sign * prod(eps_label ** exponent); exponents are kept in UNIT_LABELS order."""
    exponents: Tuple[mpq, ...] = field(default_factory=lambda: (mpq(0),) * 7)
    sign: int = 1

    @classmethod
    def of(cls, *labels, sign=1):
        exps = [mpq(0)] * 7
        for label in labels:
            exps[UNIT_LABELS.index(label)] += 1
        return cls(tuple(exps), sign)

    @classmethod
    def from_map(cls, exponents: Dict[str, object], sign=1):
        exps = [mpq(0)] * 7
        for label, e in exponents.items():
            if label not in UNIT_LABELS:
                raise PreconditionError(f"Unknown unit label '{label}'")
            exps[UNIT_LABELS.index(label)] = mpq(e)
        return cls(tuple(exps), sign)

    def __mul__(self, other):
        return UnitWord(tuple(a + b for a, b in zip(self.exponents, other.exponents)),
                        self.sign * other.sign)

    def power(self, k: int):
        return UnitWord(tuple(e * k for e in self.exponents), self.sign if k % 2 else 1)

    def sqrt(self):
        return UnitWord(tuple(e / 2 for e in self.exponents), 1)

    def exponent(self, label):
        return self.exponents[UNIT_LABELS.index(label)]

    @property
    def denominator(self):
        den = 1
        for e in self.exponents:
            den = max(den, int(e.denominator))
        return den

    def is_integral(self):
        return self.denominator == 1

    def swapped(self):
        """The same unit with the roles of p1 and p2 exchanged."""
        exps = {_SWAP[label]: e for label, e in zip(UNIT_LABELS, self.exponents)}
        return UnitWord(tuple(exps[label] for label in UNIT_LABELS), self.sign)

    def support(self):
        return tuple(label for label, e in zip(UNIT_LABELS, self.exponents) if e)

    def to_dict(self):
        return {'sign': self.sign,
                'exponents': {label: format_rational(e)
                              for label, e in zip(UNIT_LABELS, self.exponents) if e}}

    @classmethod
    def from_dict(cls, data):
        return cls.from_map({k: parse_rational(v) for k, v in data['exponents'].items()},
                            int(data.get('sign', 1)))

    def __str__(self):
        support = self.support()
        if not support:
            return '-1' if self.sign == -1 else '1'
        exps = {self.exponent(label) for label in support}
        prefix = '-' if self.sign == -1 else ''
        if len(exps) == 1:
            e = exps.pop()
            body = '*'.join(f"eps_{label}" for label in support)
            if e == 1:
                return prefix + body
            if e == mpq(1, 2):
                return f"{prefix}sqrt({body})"
            return f"{prefix}({body})^({format_rational(e)})"
        return prefix + '*'.join(
            f"eps_{label}" if self.exponent(label) == 1
            else f"eps_{label}^({format_rational(self.exponent(label))})" for label in support)


def E(*labels) -> UnitWord:
    return UnitWord.of(*labels)


def R(*labels) -> UnitWord:
    """Square root of the product of the given fundamental units."""
    return UnitWord.of(*labels).sqrt()


QUADRATIC_BASE = tuple(E(label) for label in UNIT_LABELS)


class UnitRealizer:
    """Realizes UnitWords in a fixed FieldCtx, remembering every root it has found."""

    def __init__(self, ctx: FieldCtx, cache=None, config=None):
        self.ctx = ctx
        self.config = config or DEFAULT_CONFIG
        self.units = {label: fundamental_unit(ctx.radicand(label), cache) for label in UNIT_LABELS}
        self._memo: Dict[UnitWord, MQElement] = {}

    def base(self, label) -> MQElement:
        return self.integral(E(label))

    def integral(self, word: UnitWord) -> MQElement:
        """Exact product for a word with integer exponents."""
        if not word.is_integral():
            raise PreconditionError(f"{word} has fractional exponents")
        result = self.ctx.one()
        for label, e in zip(UNIT_LABELS, word.exponents):
            if e:
                unit = self.units[label]
                result = mul(result, embed_quad_coords(unit.d, unit.power(int(e)), self.ctx))
        return result if word.sign == 1 else -result

    def remember(self, word: UnitWord, element: MQElement):
        self._memo[word] = element

    def try_realize(self, word: UnitWord) -> Optional[MQElement]:
        if word in self._memo:
            return self._memo[word]
        m = word.denominator
        steps = exact_log2(m)
        current = self.integral(UnitWord(tuple(e * m for e in word.exponents)))
        for _ in range(steps):
            root = is_square(current, self.config)
            if root is None:
                root = is_square(-current, self.config)
            if root is None:
                logger.debug(f"{word} does not lie in K")
                return None
            current = root
        if word.sign == -1:
            current = -current
        self._memo[word] = current
        return current

    def realize(self, word: UnitWord) -> MQElement:
        element = self.try_realize(word)
        if element is None:
            logger.error(f"Unit word {word} is not realizable in {self.ctx}")
            raise InconsistencyError(f"{word} is not a unit of K for {self.ctx}")
        return element

    def square_root_of(self, element: MQElement, subfield: Optional[SubfieldId] = None):
        """A root of +element or -element (in the subfield when given)."""
        for candidate in (element, -element):
            if subfield is None:
                root = is_square(candidate, self.config)
            else:
                root = is_square_in_subfield(candidate, subfield, self.config)
            if root is not None:
                return root
        return None


def exponent_matrix(words: List[UnitWord]) -> Matrix:
    return Matrix([[Rational(int(e.numerator), int(e.denominator)) for e in w.exponents]
                   for w in words])


def exponent_index(words: List[UnitWord], columns=UNIT_LABELS) -> mpq:
    """Index of <-1, words> over <-1, quadratic units> as 1/|det| of the exponent matrix.

    With columns restricted to a subfield's three labels this is q(k) of a
    biquadratic subfield.
    """
    idx = [UNIT_LABELS.index(c) for c in columns]
    if len(words) != len(idx):
        raise PreconditionError(f"Need {len(idx)} words, got {len(words)}")
    matrix = exponent_matrix(words).extract(list(range(len(words))), idx)
    det = matrix.det()
    if det == 0:
        raise InconsistencyError("Unit words are multiplicatively dependent")
    index = 1 / abs(det)
    return mpq(int(index.p), int(index.q))


def _subsets(n):
    return sorted(range(1, 1 << n), key=lambda s: (bin(s).count('1'), s))


@dataclass
class SaturationResult:
    words: List[UnitWord]
    elements: List[MQElement]
    rounds: int
    steps: List[str] = field(default_factory=list)


def saturate(realizer: UnitRealizer, words: List[UnitWord],
             subfield: Optional[SubfieldId] = None, config=None) -> SaturationResult:
    """2-saturate <-1, words> inside K (or a subfield).

    Repeatedly looks for a totally positive product +-prod(g_i) over a
    nonempty subset that is a square, and replaces one of its factors by the
    root. The quotient of the unit group by the product of the quadratic
    unit groups is a 2-group, so the loop ends at the full unit group.
    """
    config = config or realizer.config
    gens = [(w, realizer.realize(w)) for w in words]
    steps = []
    rounds = 0
    while True:
        signs = [certified_signs(e, config) for _, e in gens]
        found = None
        for subset in _subsets(len(gens)):
            members = [i for i in range(len(gens)) if subset >> i & 1]
            vector = tuple(_sign_product(signs[i][k] for i in members) for k in range(8))
            if all(v == 1 for v in vector):
                s = 1
            elif all(v == -1 for v in vector):
                s = -1
            else:
                continue
            element = gens[members[0]][1]
            for i in members[1:]:
                element = mul(element, gens[i][1])
            if s == -1:
                element = -element
            if subfield is None:
                root = is_square(element, config)
            else:
                root = is_square_in_subfield(element, subfield, config)
            if root is not None:
                found = (members, root)
                break
        if found is None:
            break
        members, root = found
        word = gens[members[0]][0]
        for i in members[1:]:
            word = word * gens[i][0]
        word = word.sqrt()
        target = members[-1]
        realizer.remember(word, root)
        steps.append(f"replaced {gens[target][0]} by {word}")
        logger.debug(f"Saturation step: {steps[-1]}")
        gens[target] = (word, root)
        rounds += 1
    return SaturationResult(words=[w for w, _ in gens], elements=[e for _, e in gens],
                            rounds=rounds, steps=steps)


def _sign_product(values):
    result = 1
    for v in values:
        result *= v
    return result


def is_exact_unit(element: MQElement) -> bool:
    return abs(algebraic_norm(element)) == 1


def same_group(words_a: List[UnitWord], words_b: List[UnitWord]) -> bool:
    """True when both word lists generate the same lattice of exponent vectors."""
    change = exponent_matrix(words_a) * exponent_matrix(words_b).inv()
    return all(entry.is_integer for entry in change) and abs(change.det()) == 1
